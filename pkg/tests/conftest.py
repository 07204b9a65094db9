"""Shared generators and independent oracles.

The oracles here deliberately avoid the library's own code paths: pattern
cells come from set comprehensions over the definitions, attention comes
from a straightforward full-matrix computation, and transforms are
evaluated per element with plain ``math`` calls.
"""

import math

import numpy as np
import pytest

from dynmask import BitMask, DenseMap


# ---------------------------------------------------------------- oracles

def pattern_cells(kind: str, offset: int, size: int) -> set:
    """Cell sets straight from the pattern definitions."""
    if kind == "D":
        return {(i, i - offset) for i in range(offset, size)}
    if kind == "V":
        return {(i, offset) for i in range(offset, size)}
    raise ValueError(kind)


def mask_cells(mask: BitMask) -> set:
    return {
        (i, j)
        for i in range(mask.rows)
        for j in range(mask.cols)
        if mask.get(i, j)
    }


def brute_force_matches(mask: BitMask, min_score: float) -> dict:
    """Score all 2L pool patterns by explicit cell counting."""
    size = mask.rows
    cells = mask_cells(mask)
    out = {}
    for kind in ("D", "V"):
        for offset in range(size):
            pat = pattern_cells(kind, offset, size)
            score = len(pat & cells) / len(pat)
            if score >= min_score:
                out[(kind, offset)] = score
    return out


def brute_force_extension(matched_keys, base: BitMask, size: int, capture_len: int) -> set:
    """Union of regenerated patterns outside the top-left block, plus the
    base mask inside it."""
    cells = set()
    for kind, offset in matched_keys:
        cells |= pattern_cells(kind, offset, size)
    cells = {(i, j) for (i, j) in cells if i >= capture_len or j >= capture_len}
    cells |= mask_cells(base)
    return cells


def dense_attention_oracle(q, k, v, keep, scale) -> np.ndarray:
    """Row-by-row full softmax over the kept logits, plain Python loops."""
    n = q.shape[0]
    out = np.zeros((n, v.shape[1]))
    for i in range(n):
        logits = [float(q[i] @ k[j]) * scale for j in range(k.shape[0])]
        kept = [j for j in range(k.shape[0]) if keep[i, j]]
        top = max(logits[j] for j in kept)
        weights = {j: math.exp(logits[j] - top) for j in kept}
        z = sum(weights.values())
        for j in kept:
            out[i] += (weights[j] / z) * v[j]
    return out


# ------------------------------------------------------------- generators

def random_causal_mask(rng, size: int, density: float = 0.5) -> BitMask:
    cells = rng.random((size, size)) < density
    cells &= np.tri(size, size, dtype=bool)
    return BitMask.from_bool(cells)


def random_causal_map(rng, size: int, lo: float = 0.0, hi: float = 1.0) -> DenseMap:
    vals = rng.uniform(lo, hi, (size, size))
    vals[~np.tri(size, size, dtype=bool)] = 0.0
    return DenseMap(vals)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
