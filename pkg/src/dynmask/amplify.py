"""Feature amplification for mean attention maps.

Attention mass is heavily skewed: a few connections dominate and the rest
sit near zero, which makes a single global threshold useless on the raw
means. A monotone transform spreads the small and medium values apart
before thresholding. Box-Cox with power 0.5 is the default; the other
eight kinds exist for comparison.

Maps are causal, so every statistic (mean, std, min, max, and the global
minimum used by :func:`shift_nonnegative`) is computed over the cells
j <= i only, and the structurally-zero upper triangle is returned as zero
by every transform.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable, Mapping

import numpy as np

from .containers import DenseMap, causal_region


class TransformKind(str, enum.Enum):
    RAW_SUM = "raw-sum"
    AVERAGE = "average"
    LOG = "log"
    BOX_COX = "box-cox"
    YEO_JOHNSON = "yeo-johnson"
    Z_SCORE = "z-score"
    MIN_MAX = "min-max"
    SQUARE_ROOT = "square-root"
    ARCSINH = "arcsinh"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


def stabilize(amap: DenseMap, eps: float) -> DenseMap:
    """Clamp every entry to at least eps so log-like transforms are defined."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return DenseMap(np.maximum(amap.data, eps))


def box_cox(x: float, lam: float) -> float:
    """Power transform (x**lam - 1)/lam, with the log limit at lam == 0.

    Strictly increasing in x for any fixed lam; defined for x > 0 only.
    Computed as expm1(lam*log(x))/lam, which stays exact as lam -> 0
    where the naive power form collapses to zero.
    """
    if x <= 0:
        raise ValueError(f"box_cox requires x > 0, got {x}")
    if lam == 0.0:
        return math.log(x)
    return math.expm1(lam * math.log(x)) / lam


def yeo_johnson(x: float, lam: float) -> float:
    """Power transform defined on all reals (four-branch form)."""
    if x >= 0:
        if lam == 0.0:
            return math.log1p(x)
        return ((x + 1.0) ** lam - 1.0) / lam
    if lam == 2.0:
        return -math.log1p(-x)
    return -(((-x + 1.0) ** (2.0 - lam) - 1.0) / (2.0 - lam))


def _box_cox_arr(x: np.ndarray, lam: float) -> np.ndarray:
    if np.any(x <= 0):
        raise ValueError("box-cox input must be strictly positive; stabilize first")
    if lam == 0.0:
        return np.log(x)
    return np.expm1(lam * np.log(x)) / lam


def _yeo_johnson_arr(x: np.ndarray, lam: float) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    xp, xn = x[pos], x[~pos]
    if lam == 0.0:
        out[pos] = np.log1p(xp)
    else:
        out[pos] = (np.power(xp + 1.0, lam) - 1.0) / lam
    if lam == 2.0:
        out[~pos] = -np.log1p(-xn)
    else:
        out[~pos] = -((np.power(-xn + 1.0, 2.0 - lam) - 1.0) / (2.0 - lam))
    return out


def apply_transform(
    kind: TransformKind,
    amap: DenseMap,
    eps: float,
    lam: float = 0.5,
) -> DenseMap:
    """Apply one amplification kind to the causal region of a map.

    raw-sum and average are identities (they name which input they expect:
    accumulated sums and mean maps respectively). The remaining kinds
    expect stabilized input for their domain requirements; z-score and
    min-max add eps to their denominators as a guard.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    kind = TransformKind(kind)
    sel = causal_region(amap.rows, amap.cols)
    x = amap.data[sel]

    if kind in (TransformKind.RAW_SUM, TransformKind.AVERAGE):
        y = x
    elif kind is TransformKind.LOG:
        if np.any(x <= 0):
            raise ValueError("log input must be strictly positive; stabilize first")
        y = np.log(x)
    elif kind is TransformKind.BOX_COX:
        y = _box_cox_arr(x, lam)
    elif kind is TransformKind.YEO_JOHNSON:
        y = _yeo_johnson_arr(x, lam)
    elif kind is TransformKind.Z_SCORE:
        y = (x - x.mean()) / (x.std() + eps)
    elif kind is TransformKind.MIN_MAX:
        y = (x - x.min()) / (x.max() - x.min() + eps)
    elif kind is TransformKind.SQUARE_ROOT:
        if np.any(x < 0):
            raise ValueError("square-root input must be non-negative")
        y = np.sqrt(x)
    elif kind is TransformKind.ARCSINH:
        y = np.arcsinh(x)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown transform {kind}")

    out = np.zeros((amap.rows, amap.cols))
    out[sel] = y
    return DenseMap(out)


def global_causal_min(maps: Iterable[DenseMap]) -> float:
    mins = [
        float(m.data[causal_region(m.rows, m.cols)].min())
        for m in maps
    ]
    if not mins:
        raise ValueError("no maps given")
    return min(mins)


def shift_nonnegative(maps: Mapping) -> dict:
    """Subtract the global minimum across all maps from every causal entry.

    One shared shift keeps the maps comparable under a single threshold;
    after it the smallest causal entry anywhere is exactly 0.
    """
    if not maps:
        return {}
    gmin = global_causal_min(maps.values())
    out = {}
    for key, m in maps.items():
        sel = causal_region(m.rows, m.cols)
        shifted = np.zeros((m.rows, m.cols))
        shifted[sel] = m.data[sel] - gmin
        out[key] = DenseMap(shifted)
    return out
