"""True-mask thresholding, structural pattern mining, and mask extension.

The pattern pool over an L x L mask has exactly 2L members: L diagonal
lines (the line starting at row r, cells (i, i-r)) and L vertical lines
(column c from the diagonal down, cells (i, c) for i >= c). A pattern's
match score is the fraction of its cells present in the mask; patterns
scoring at least the match threshold are kept as compact generators that
can be regenerated at any size, which is what makes masks extrapolate to
sequences longer than the capture length.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .containers import BitMask, DenseMap, causal_region


class PatternKind(str, enum.Enum):
    DIAGONAL = "D"
    VERTICAL = "V"


@dataclass(frozen=True, order=True)
class PatternId:
    kind: PatternKind
    offset: int  # start row r for diagonals, column c for verticals


@dataclass(frozen=True)
class PatternMatch:
    pattern: PatternId
    score: float


def pattern_pool(size: int) -> list[PatternId]:
    """All 2*size candidate patterns: diagonals then verticals, by offset."""
    diags = [PatternId(PatternKind.DIAGONAL, r) for r in range(size)]
    verts = [PatternId(PatternKind.VERTICAL, c) for c in range(size)]
    return diags + verts


def true_mask(amap: DenseMap, threshold: float) -> BitMask:
    """Binarize an amplified map: keep causal cells with value >= threshold."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    keep = (amap.data >= threshold) & causal_region(amap.rows, amap.cols)
    return BitMask.from_bool(keep)


def gen_pattern(p: PatternId, size: int) -> BitMask:
    """Materialize a pattern at the given square size.

    An offset at or beyond the size yields the empty mask, which is what
    extension wants: a pattern that never reaches into the region simply
    contributes nothing.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    cells = np.zeros((size, size), dtype=bool)
    r = p.offset
    if r < size:
        if p.kind is PatternKind.DIAGONAL:
            i = np.arange(r, size)
            cells[i, i - r] = True
        else:
            cells[r:, r] = True
    return BitMask.from_bool(cells)


def match_score(mask: BitMask, p: PatternId) -> float:
    """Fraction of the pattern's cells that are set in the mask."""
    if mask.rows != mask.cols:
        raise ValueError("match_score needs a square mask")
    pat = gen_pattern(p, mask.rows)
    total = pat.popcount()
    if total == 0:
        raise ValueError(f"pattern {p} is empty at size {mask.rows}")
    hits = int(np.unpackbits(mask.bits & pat.bits).sum())
    return hits / total


def match_patterns(mask: BitMask, min_score: float) -> list[PatternMatch]:
    """Score the whole pool against a mask and keep scores >= min_score.

    Returned deterministically ordered: diagonals by ascending offset,
    then verticals by ascending offset.
    """
    if not (0.0 <= min_score <= 1.0):
        raise ValueError("min_score must lie in [0, 1]")
    if mask.rows != mask.cols:
        raise ValueError("match_patterns needs a square mask")
    size = mask.rows
    dense = mask.to_bool()
    out: list[PatternMatch] = []
    for r in range(size):
        hits = int(np.diagonal(dense, offset=-r).sum())
        score = hits / (size - r)
        if score >= min_score:
            out.append(PatternMatch(PatternId(PatternKind.DIAGONAL, r), score))
    for c in range(size):
        hits = int(dense[c:, c].sum())
        score = hits / (size - c)
        if score >= min_score:
            out.append(PatternMatch(PatternId(PatternKind.VERTICAL, c), score))
    return out


def _pattern_ids(matched: Iterable[PatternId | PatternMatch]) -> list[PatternId]:
    ids = []
    for m in matched:
        ids.append(m.pattern if isinstance(m, PatternMatch) else m)
    return ids


def build_extended(
    matched: Iterable[PatternId | PatternMatch],
    base_mask: BitMask,
    size: int,
    capture_len: int,
) -> BitMask:
    """Extend a capture-length mask to size x size.

    The top-left capture_len block is the base mask verbatim; everywhere
    outside it a cell is set iff it lies on some matched pattern
    regenerated at the target size. Overlaps collapse to a single bit.
    """
    if base_mask.rows != capture_len or base_mask.cols != capture_len:
        raise ValueError("base mask must be capture_len x capture_len")
    if size < capture_len:
        raise ValueError(f"target size {size} < capture length {capture_len}")
    cells = np.zeros((size, size), dtype=bool)
    for p in _pattern_ids(matched):
        r = p.offset
        if r >= size:
            continue
        if p.kind is PatternKind.DIAGONAL:
            i = np.arange(r, size)
            cells[i, i - r] = True
        else:
            cells[r:, r] = True
    cells[:capture_len, :capture_len] = base_mask.to_bool()
    return BitMask.from_bool(cells)


def force_self_attend(mask: BitMask) -> BitMask:
    """Set every diagonal bit so no query row is left fully masked."""
    if mask.rows != mask.cols:
        raise ValueError("force_self_attend needs a square mask")
    cells = mask.to_bool()
    np.fill_diagonal(cells, True)
    return BitMask.from_bool(cells)


# Matched-set files: one line per match, "layer head kind offset score",
# kind D or V, lines sorted by (layer, head, kind, offset).

def format_matched_sets(sets: Mapping[tuple[int, int], list[PatternMatch]]) -> str:
    lines = []
    for layer, head in sorted(sets):
        entries = sorted(sets[(layer, head)], key=lambda m: m.pattern)
        for m in entries:
            lines.append(
                f"{layer} {head} {m.pattern.kind.value} {m.pattern.offset} "
                f"{m.score:.10f}"
            )
    return "\n".join(lines) + ("\n" if lines else "")


def write_matched_sets(
    path: str | os.PathLike,
    sets: Mapping[tuple[int, int], list[PatternMatch]],
) -> None:
    Path(path).write_text(format_matched_sets(sets))


def read_matched_sets(path: str | os.PathLike) -> dict[tuple[int, int], list[PatternMatch]]:
    sets: dict[tuple[int, int], list[PatternMatch]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"{path}:{lineno}: expected 'layer head kind offset score'")
        try:
            layer, head = int(parts[0]), int(parts[1])
            kind = PatternKind(parts[2])
            offset = int(parts[3])
            score = float(parts[4])
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: {e}") from None
        entry = PatternMatch(PatternId(kind, offset), score)
        sets.setdefault((layer, head), []).append(entry)
    return sets
