#!/usr/bin/env python3
"""Regenerate the committed golden fixtures under tests/golden/.

Three fixture tensors cover the render paths: a small binary mask, a dense
gradient map, and a constant map (degenerate range). Each is stored as a
DAMT file next to its expected PGM rendering.
"""

from pathlib import Path

import numpy as np

from dynmask import BitMask, DenseMap, write_pgm, write_tensor

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)

    mask = BitMask.from_bool(np.array([[True, False], [True, True]]))

    gradient = DenseMap(
        np.array(
            [
                [0.0, 0.125, 0.25, 0.5],
                [1.0, 1.5, 2.0, 2.5],
                [3.0, 3.25, 3.5, 3.75],
                [4.0, -1.0, -0.5, 0.75],
            ]
        )
    )

    constant = DenseMap(np.full((3, 3), 7.5))

    for name, tensor in [("mask_2x2", mask), ("gradient_4x4", gradient), ("constant_3x3", constant)]:
        write_tensor(GOLDEN / f"{name}.damt", tensor)
        write_pgm(GOLDEN / f"{name}.pgm", tensor)
        print(f"wrote {name}.damt / {name}.pgm")


if __name__ == "__main__":
    main()
