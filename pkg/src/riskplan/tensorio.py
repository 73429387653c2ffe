"""Portable on-disk formats for label maps, scalar maps, and softmax stacks.

Three formats, all with a one-line ASCII header:

* label map    -- ``LBL1 H W C`` then H lines of W space-separated integers.
* scalar map   -- ``SCL1 H W`` then H lines of W decimal reals (shortest
  round-trip repr, so write/read is value-exact).
* softmax stack-- ``SMX1 T H W C`` then T*H*W*C little-endian 32-bit floats
  in t-major, row-major (y, x), then class order. Binary, memory-mappable.

Readers validate every type invariant and reject malformed input outright;
nothing is silently repaired.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Softmax rows stored as 32-bit floats cannot drift further than this from 1.
ROW_SUM_TOLERANCE = 1.0e-5


class FormatError(ValueError):
    """Malformed or invariant-violating tensor file / tensor contents."""


@dataclass(eq=False)
class LabelMap:
    """H x W grid of class indices, each < num_classes."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2:
            raise FormatError("label grid must be 2-D")
        if not np.issubdtype(self.labels.dtype, np.integer):
            self.labels = self.labels.astype(np.int64)
        if self.num_classes < 1:
            raise FormatError("num_classes must be >= 1")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            bad = int(np.argmax((self.labels < 0) | (self.labels >= self.num_classes)))
            y, x = divmod(bad, self.labels.shape[1])
            raise FormatError(
                f"label {int(self.labels[y, x])} at ({y},{x}) outside [0,{self.num_classes})"
            )

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(eq=False)
class ScalarMap:
    """H x W grid of finite reals."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise FormatError("scalar grid must be 2-D")
        if not np.isfinite(self.values).all():
            bad = int(np.argmax(~np.isfinite(self.values)))
            y, x = divmod(bad, self.values.shape[1])
            raise FormatError(f"non-finite value at ({y},{x})")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(eq=False)
class SoftmaxStack:
    """T x H x W x C per-pixel class-probability samples.

    Each per-pixel, per-pass class vector sums to 1 within ROW_SUM_TOLERANCE
    and has all entries in [0, 1].
    """

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs)
        if self.probs.ndim != 4:
            raise FormatError("softmax stack must be T x H x W x C")
        if self.probs.shape[0] < 1 or self.probs.shape[3] < 2:
            raise FormatError("softmax stack needs T >= 1 and C >= 2")
        _check_rows(self.probs)

    @property
    def passes(self) -> int:
        return self.probs.shape[0]

    @property
    def height(self) -> int:
        return self.probs.shape[1]

    @property
    def width(self) -> int:
        return self.probs.shape[2]

    @property
    def classes(self) -> int:
        return self.probs.shape[3]


def _check_rows(probs: np.ndarray) -> None:
    if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
        t, y, x, _ = np.unravel_index(int(np.argmax((probs < 0) | (probs > 1))), probs.shape)
        raise FormatError(f"probability outside [0,1] at (t={t},y={y},x={x})")
    sums = probs.sum(axis=3, dtype=np.float64)
    off = np.abs(sums - 1.0) > ROW_SUM_TOLERANCE
    if off.any():
        t, y, x = np.unravel_index(int(np.argmax(off)), off.shape)
        raise FormatError(
            f"class probabilities sum to {sums[t, y, x]:.7f} != 1 at (t={t},y={y},x={x})"
        )


def _header(line: str, magic: str, nfields: int, path) -> list[int]:
    parts = line.split()
    if not parts or parts[0] != magic:
        raise FormatError(f"{path}: bad magic, expected {magic!r}")
    if len(parts) != nfields + 1:
        raise FormatError(f"{path}: header needs {nfields} dimensions")
    try:
        dims = [int(p) for p in parts[1:]]
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer header field") from exc
    if any(d < 1 for d in dims):
        raise FormatError(f"{path}: non-positive dimension in header")
    return dims


def write_label_map(lmap: LabelMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"LBL1 {lmap.height} {lmap.width} {lmap.num_classes}\n")
        for row in lmap.labels:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_label_map(path) -> LabelMap:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    h, w, c = _header(lines[0], "LBL1", 3, path)
    body = " ".join(lines[1:]).split()
    if len(body) != h * w:
        raise FormatError(f"{path}: expected {h * w} labels, found {len(body)}")
    try:
        flat = np.array([int(v) for v in body], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer label") from exc
    try:
        return LabelMap(flat.reshape(h, w), num_classes=c)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_scalar_map(smap: ScalarMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"SCL1 {smap.height} {smap.width}\n")
        for row in smap.values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_scalar_map(path) -> ScalarMap:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    h, w = _header(lines[0], "SCL1", 2, path)
    body = " ".join(lines[1:]).split()
    if len(body) != h * w:
        raise FormatError(f"{path}: expected {h * w} values, found {len(body)}")
    try:
        flat = np.array([float(v) for v in body], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: unparseable value") from exc
    try:
        return ScalarMap(flat.reshape(h, w))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_softmax_stack(stack: SoftmaxStack, path) -> None:
    probs = np.ascontiguousarray(stack.probs, dtype="<f4")
    with open(path, "wb") as fh:
        t, h, w, c = probs.shape
        fh.write(f"SMX1 {t} {h} {w} {c}\n".encode("ascii"))
        fh.write(probs.tobytes())


def read_softmax_stack(path) -> SoftmaxStack:
    with open(path, "rb") as fh:
        header = bytearray()
        while not header.endswith(b"\n"):
            ch = fh.read(1)
            if not ch:
                raise FormatError(f"{path}: truncated header")
            header.extend(ch)
            if len(header) > 128:
                raise FormatError(f"{path}: header line too long")
        t, h, w, c = _header(header.decode("ascii", "replace"), "SMX1", 4, path)
        payload = fh.read()
    expected = t * h * w * c * 4
    if len(payload) != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    probs = np.frombuffer(payload, dtype="<f4").reshape(t, h, w, c)
    try:
        return SoftmaxStack(probs)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc
