"""Deterministic grayscale rendering of maps and masks as binary PGM.

PGM keeps golden-file testing byte-exact with no image dependency: header
``P5\\n{cols} {rows}\\n255\\n`` followed by one byte per cell, row-major.
Values map through round(255 * (v - min) / (max - min)); a constant map
renders all black, and a mask's 0/1 cells land exactly on 0 and 255.
Rounding is IEEE round-half-to-even.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .containers import BitMask, DenseMap


def to_pgm(t: DenseMap | BitMask) -> bytes:
    if isinstance(t, BitMask):
        values = t.to_bool().astype(np.float64)
        rows, cols = t.rows, t.cols
    elif isinstance(t, DenseMap):
        values = t.data
        rows, cols = t.rows, t.cols
    else:
        raise ValueError(f"cannot render {type(t).__name__}")
    lo = values.min()
    hi = values.max()
    if hi == lo:
        pixels = np.zeros((rows, cols), dtype=np.uint8)
    else:
        pixels = np.rint(255.0 * (values - lo) / (hi - lo)).astype(np.uint8)
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def write_pgm(path: str | os.PathLike, t: DenseMap | BitMask) -> None:
    Path(path).write_bytes(to_pgm(t))
