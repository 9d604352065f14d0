"""Static renderings of grid configurations (ASCII counters and PPM images)."""
from __future__ import annotations

import numpy as np

from .automaton import Grid

BUSY_RGB = (160, 20, 30)
FREE_RGB = (170, 205, 240)


def ascii_frame(grid: Grid) -> str:
    """Signed counters, one row per line: positive = cycles to completion,
    negative = cycles to next call."""
    c = grid.counters
    width = max(len(str(int(v))) for v in (c.min(), c.max()))
    lines = [" ".join(f"{int(v):>{width}d}" for v in row) for row in c]
    return "\n".join(lines) + "\n"


def ppm_frame(grid: Grid, cell_px: int = 8) -> bytes:
    """Binary PPM (P6) with busy cells dark and free cells light."""
    if cell_px < 1:
        raise ValueError("cell_px must be >= 1")
    busy = grid.counters > 0
    rgb = np.where(busy[..., None], np.array(BUSY_RGB, np.uint8), np.array(FREE_RGB, np.uint8))
    rgb = np.repeat(np.repeat(rgb, cell_px, axis=0), cell_px, axis=1).astype(np.uint8)
    h, w = rgb.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Parse a P6 image produced by :func:`ppm_frame` into an (h, w, 3) array."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
