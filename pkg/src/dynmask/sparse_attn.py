"""Masked-softmax sparse attention and its cost accounting.

Masked positions get probability exactly zero: the softmax runs over the
unmasked logits only (gather, max-subtract, exponentiate, normalize), so
no infinities ever enter the arithmetic. Per query row, dot products are
computed only for the keys its mask row retains, which is what turns the
quadratic cost into one proportional to the retained-key count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .containers import BitMask
from .maskgen import PatternId, PatternMatch, build_extended, force_self_attend


@dataclass
class AttentionInputs:
    """Query/key/value matrices for one head; scale defaults to 1/sqrt(d_k)."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    scale: float | None = None

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=np.float64)
        self.k = np.asarray(self.k, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.q.ndim != 2 or self.k.ndim != 2 or self.v.ndim != 2:
            raise ValueError("q, k, v must be 2-D")
        if self.q.shape[1] != self.k.shape[1]:
            raise ValueError("q and k must share the key dimension")
        if self.k.shape[0] != self.v.shape[0]:
            raise ValueError("k and v must have the same number of rows")
        if self.scale is None:
            self.scale = 1.0 / math.sqrt(self.q.shape[1])


@dataclass
class EfficiencyReport:
    """Mask cost summary; flops count the masked QK dots plus the value sum."""

    nnz: int
    total: int
    sparsity: float
    flops_sparse: int
    flops_dense: int
    s_avg: float

    def line(self) -> str:
        return (
            f"{self.nnz},{self.total},{self.sparsity:.6f},"
            f"{self.flops_sparse},{self.flops_dense},{self.s_avg:.6f}"
        )


def select_mask(
    seq_len: int,
    capture_len: int,
    base_mask: BitMask,
    matched: list[PatternId | PatternMatch],
    self_attend: bool = True,
) -> BitMask:
    """Pick the mask for a sequence: crop when it fits, extend when longer."""
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    if base_mask.rows != capture_len or base_mask.cols != capture_len:
        raise ValueError("base mask must be capture_len x capture_len")
    if seq_len <= capture_len:
        mask = base_mask.submask(seq_len) if seq_len < capture_len else base_mask.copy()
    else:
        mask = build_extended(matched, base_mask, seq_len, capture_len)
    if self_attend:
        mask = force_self_attend(mask)
    return mask


def masked_softmax(logits: np.ndarray, mask_row: np.ndarray) -> np.ndarray:
    """Softmax over the unmasked entries; masked entries come back exactly 0."""
    logits = np.asarray(logits, dtype=np.float64)
    keep = np.asarray(mask_row, dtype=bool)
    if logits.shape != keep.shape or logits.ndim != 1:
        raise ValueError("logits and mask row must be equal-length vectors")
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        raise ValueError("fully masked row: softmax undefined")
    x = logits[idx]
    e = np.exp(x - x.max())
    out = np.zeros_like(logits)
    out[idx] = e / e.sum()
    return out


def sparse_attention(inp: AttentionInputs, mask: BitMask) -> np.ndarray:
    """Attention output using only the mask's retained query/key pairs."""
    n, m = inp.q.shape[0], inp.k.shape[0]
    if (mask.rows, mask.cols) != (n, m):
        raise ValueError(f"mask is {mask.rows}x{mask.cols}, inputs need {n}x{m}")
    dense = mask.to_bool()
    out = np.zeros((n, inp.v.shape[1]))
    for i in range(n):
        idx = np.flatnonzero(dense[i])
        if idx.size == 0:
            raise ValueError(f"row {i} is fully masked")
        scores = (inp.k[idx] @ inp.q[i]) * inp.scale
        e = np.exp(scores - scores.max())
        out[i] = (e / e.sum()) @ inp.v[idx]
    return out


def dense_attention(inp: AttentionInputs, mask: BitMask | None = None) -> np.ndarray:
    """Full-matrix reference: used by the CLI's --dense-check."""
    scores = (inp.q @ inp.k.T) * inp.scale
    if mask is not None:
        if (mask.rows, mask.cols) != scores.shape:
            raise ValueError("mask shape mismatch")
        scores = np.where(mask.to_bool(), scores, -np.inf)
    scores = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs @ inp.v


def efficiency_report(mask: BitMask, d: int) -> EfficiencyReport:
    """Cost of one masked attention call with head dimension d (= d_k = d_v)."""
    if mask.rows != mask.cols:
        raise ValueError("efficiency_report needs a square mask")
    if d < 1:
        raise ValueError("d must be >= 1")
    n = mask.rows
    nnz = mask.popcount()
    total = n * (n + 1) // 2
    return EfficiencyReport(
        nnz=nnz,
        total=total,
        sparsity=1.0 - nnz / total,
        flops_sparse=4 * nnz * d,
        flops_dense=4 * total * d,
        s_avg=nnz / n,
    )
