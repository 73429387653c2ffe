"""Binary PPM (P6) rendering of label maps, scalar ramps, and path overlays."""
from __future__ import annotations

import numpy as np

from .planner import PlannedPath
from .taxonomy import CostTable
from .tensorio import LabelMap, ScalarMap

PATH_COLOR = (255, 0, 255)


def label_map_rgb(lmap: LabelMap, table: CostTable) -> np.ndarray:
    if lmap.num_classes > table.num_classes:
        raise ValueError("label map has more classes than the table")
    return table.colors()[lmap.labels]


def scalar_map_rgb(smap: ScalarMap) -> np.ndarray:
    """Grayscale ramp, darkest at the minimum. A constant map renders black."""
    v = smap.values
    span = v.max() - v.min()
    if span == 0:
        gray = np.zeros(v.shape, dtype=np.uint8)
    else:
        gray = np.round((v - v.min()) / span * 255.0).astype(np.uint8)
    return np.repeat(gray[:, :, None], 3, axis=2)


def overlay_path(rgb: np.ndarray, path: PlannedPath,
                 color: tuple[int, int, int] = PATH_COLOR) -> np.ndarray:
    out = rgb.copy()
    for p in path.waypoints:
        out[p.y, p.x] = color
    return out


def write_ppm(rgb: np.ndarray, path) -> None:
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an H x W x 3 uint8 image")
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
