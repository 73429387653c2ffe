"""Pure-Python A* core. Fallback twin of the compiled _astar_cy module.

Both cores must stay behaviorally identical: same neighbor order, same
tie-breaking (f, then g, then push order), same float expressions. Any
change here must be mirrored in _astar_cy.pyx.
"""
from __future__ import annotations

import heapq

import numpy as np

CORE_NAME = "python"

# 8-connected neighborhood in row-major scan order.
_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def astar(costs, passable, sy, sx, gy, gx, min_cost):
    """Min-cost 8-connected path; cost accrues on entering a pixel.

    Returns (waypoints, cost) with waypoints a list of (y, x) from start to
    goal, or None when the goal is unreachable. Preconditions (bounds,
    passable endpoints) are the caller's job.
    """
    h, w = costs.shape
    if sy == gy and sx == gx:
        return [(sy, sx)], 0.0

    g = np.full(h * w, np.inf)
    parent = np.full(h * w, -1, dtype=np.int64)
    closed = np.zeros(h * w, dtype=bool)

    start = sy * w + sx
    goal = gy * w + gx
    g[start] = 0.0
    counter = 0
    heap = [(min_cost * max(abs(sy - gy), abs(sx - gx)), 0.0, counter, start)]

    while heap:
        _, gv, _, node = heapq.heappop(heap)
        if closed[node]:
            continue
        closed[node] = True
        if node == goal:
            break
        y, x = divmod(node, w)
        for dy, dx in _OFFSETS:
            ny = y + dy
            nx = x + dx
            if not (0 <= ny < h and 0 <= nx < w):
                continue
            n = ny * w + nx
            if closed[n] or not passable[ny, nx]:
                continue
            ng = gv + costs[ny, nx]
            if ng < g[n]:
                g[n] = ng
                parent[n] = node
                counter += 1
                f = ng + min_cost * max(abs(ny - gy), abs(nx - gx))
                heapq.heappush(heap, (f, ng, counter, n))
    else:
        return None

    path = []
    node = goal
    while node != -1:
        path.append(divmod(node, w))
        node = int(parent[node])
    path.reverse()
    return path, float(g[goal])
