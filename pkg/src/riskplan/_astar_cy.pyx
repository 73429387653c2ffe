# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled A* core. Behavioral twin of _astar_py; keep the two in lockstep.

Identical neighbor order, tie-breaking (f, then g, then push order), and
float expressions as the pure-Python core, so both produce the same paths.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

CORE_NAME = "compiled"

cdef int[8] _DY = [-1, -1, -1, 0, 0, 1, 1, 1]
cdef int[8] _DX = [-1, 0, 1, -1, 1, -1, 0, 1]


cdef inline bint _less(double f1, double g1, long long c1,
                       double f2, double g2, long long c2) nogil:
    if f1 != f2:
        return f1 < f2
    if g1 != g2:
        return g1 < g2
    return c1 < c2


cdef inline void _sift_up(double[::1] hf, double[::1] hg,
                          long long[::1] hc, long long[::1] hn,
                          Py_ssize_t pos) nogil:
    cdef double f = hf[pos], g = hg[pos]
    cdef long long c = hc[pos], n = hn[pos]
    cdef Py_ssize_t parent
    while pos > 0:
        parent = (pos - 1) >> 1
        if _less(f, g, c, hf[parent], hg[parent], hc[parent]):
            hf[pos] = hf[parent]; hg[pos] = hg[parent]
            hc[pos] = hc[parent]; hn[pos] = hn[parent]
            pos = parent
        else:
            break
    hf[pos] = f; hg[pos] = g; hc[pos] = c; hn[pos] = n


cdef inline void _sift_down(double[::1] hf, double[::1] hg,
                            long long[::1] hc, long long[::1] hn,
                            Py_ssize_t size) nogil:
    cdef double f = hf[size], g = hg[size]
    cdef long long c = hc[size], n = hn[size]
    cdef Py_ssize_t pos = 0, child
    # move last element to the root, then restore heap order
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and _less(hf[child + 1], hg[child + 1], hc[child + 1],
                                      hf[child], hg[child], hc[child]):
            child += 1
        if _less(hf[child], hg[child], hc[child], f, g, c):
            hf[pos] = hf[child]; hg[pos] = hg[child]
            hc[pos] = hc[child]; hn[pos] = hn[child]
            pos = child
        else:
            break
    hf[pos] = f; hg[pos] = g; hc[pos] = c; hn[pos] = n


def astar(double[:, ::1] costs, unsigned char[:, ::1] passable,
          Py_ssize_t sy, Py_ssize_t sx, Py_ssize_t gy, Py_ssize_t gx,
          double min_cost):
    """Same contract as riskplan._astar_py.astar."""
    cdef Py_ssize_t h = costs.shape[0], w = costs.shape[1]
    if sy == gy and sx == gx:
        return [(sy, sx)], 0.0

    g_arr = np.full(h * w, np.inf)
    parent_arr = np.full(h * w, -1, dtype=np.int64)
    closed_arr = np.zeros(h * w, dtype=np.uint8)
    cdef double[::1] g = g_arr
    cdef long long[::1] parent = parent_arr
    cdef unsigned char[::1] closed = closed_arr

    cdef Py_ssize_t cap = 4096
    hf_arr = np.empty(cap); hg_arr = np.empty(cap)
    hc_arr = np.empty(cap, dtype=np.int64); hn_arr = np.empty(cap, dtype=np.int64)
    cdef double[::1] hf = hf_arr
    cdef double[::1] hg = hg_arr
    cdef long long[::1] hc = hc_arr
    cdef long long[::1] hn = hn_arr
    cdef Py_ssize_t size = 0

    cdef long long start = sy * w + sx
    cdef long long goal = gy * w + gx
    cdef long long counter = 0, node, n
    cdef Py_ssize_t y, x, ny, nx
    cdef int k
    cdef double gv, ng, f
    cdef double ady, adx
    cdef bint found = False

    g[start] = 0.0
    ady = gy - sy if gy >= sy else sy - gy
    adx = gx - sx if gx >= sx else sx - gx
    hf[0] = min_cost * (ady if ady > adx else adx)
    hg[0] = 0.0; hc[0] = 0; hn[0] = start
    size = 1

    while size > 0:
        gv = hg[0]
        node = hn[0]
        size -= 1
        if size > 0:
            _sift_down(hf, hg, hc, hn, size)
        if closed[node]:
            continue
        closed[node] = 1
        if node == goal:
            found = True
            break
        y = node // w
        x = node - y * w
        for k in range(8):
            ny = y + _DY[k]
            nx = x + _DX[k]
            if ny < 0 or ny >= h or nx < 0 or nx >= w:
                continue
            n = ny * w + nx
            if closed[n] or not passable[ny, nx]:
                continue
            ng = gv + costs[ny, nx]
            if ng < g[n]:
                g[n] = ng
                parent[n] = node
                counter += 1
                ady = goal // w - ny
                if ady < 0:
                    ady = -ady
                adx = goal % w - nx
                if adx < 0:
                    adx = -adx
                f = ng + min_cost * (ady if ady > adx else adx)
                if size == cap:
                    cap *= 2
                    hf_arr = np.resize(hf_arr, cap); hg_arr = np.resize(hg_arr, cap)
                    hc_arr = np.resize(hc_arr, cap); hn_arr = np.resize(hn_arr, cap)
                    hf = hf_arr; hg = hg_arr; hc = hc_arr; hn = hn_arr
                hf[size] = f; hg[size] = ng; hc[size] = counter; hn[size] = n
                _sift_up(hf, hg, hc, hn, size)
                size += 1

    if not found:
        return None

    path = []
    node = goal
    while node != -1:
        y = node // w
        path.append((y, node - y * w))
        node = parent[node]
    path.reverse()
    return path, float(g[goal])
