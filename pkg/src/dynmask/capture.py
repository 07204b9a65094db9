"""Attention-map capture: a tiny deterministic causal transformer plus
cross-batch accumulation into mean maps.

The model here is a stand-in for a frozen pretrained network: all we need
downstream are its attention probability maps, so each (layer, head) pair
is just a seeded random query/key projection over shared token+position
embeddings, with causal masked softmax. No MLPs, no residual stack, no
values; layers do not feed each other. Identical config and tokens give
bit-identical maps.

Externally captured maps can be ingested instead (DAMT files named
``attn_L{layer}_H{head}.damt``), so maps from a real model drop in without
code changes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .containers import DenseMap, causal_region
from .tensorfile import read_tensor

# Embedding gain: controls attention contrast. Near 0 the softmax rows are
# almost uniform and mean maps carry no mineable structure; 3 gives peaky,
# position-driven patterns while keeping several keys per query in play.
EMBED_GAIN = 3.0

MapDict = dict[tuple[int, int], DenseMap]


@dataclass
class ToyModelConfig:
    n_layers: int = 4
    n_heads: int = 4
    d_model: int = 32
    d_k: int = 0  # 0 means d_model // n_heads
    vocab_size: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_layers, self.n_heads, self.d_model, self.vocab_size) < 1:
            raise ValueError("model counts must be >= 1")
        if self.d_k == 0:
            self.d_k = self.d_model // self.n_heads
        if self.d_k < 1 or self.d_k * self.n_heads != self.d_model:
            raise ValueError(
                f"d_k * n_heads must equal d_model "
                f"(got {self.d_k} x {self.n_heads} != {self.d_model})"
            )


def effective_capture_len(seq_len: int, max_capture_len: int) -> int:
    """Length actually captured: sequences are truncated at the limit."""
    if seq_len < 1 or max_capture_len < 1:
        raise ValueError("lengths must be >= 1")
    return min(seq_len, max_capture_len)


def sinusoidal_positions(n: int, d_model: int) -> np.ndarray:
    """Fixed sin/cos position table, shape (n, d_model)."""
    pos = np.arange(n, dtype=np.float64)[:, None]
    half = np.arange((d_model + 1) // 2, dtype=np.float64)
    freq = np.power(10000.0, -2.0 * half / d_model)
    angles = pos * freq[None, :]
    table = np.zeros((n, d_model))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, : d_model // 2])
    return table


class ToyTransformer:
    """Seeded attention-map generator; weights are fixed at construction."""

    def __init__(self, cfg: ToyModelConfig) -> None:
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        w = 1.0 / math.sqrt(cfg.d_model)
        self.embedding = rng.uniform(-1.0, 1.0, (cfg.vocab_size, cfg.d_model))
        self.w_query = rng.uniform(
            -w, w, (cfg.n_layers, cfg.n_heads, cfg.d_model, cfg.d_k)
        )
        self.w_key = rng.uniform(
            -w, w, (cfg.n_layers, cfg.n_heads, cfg.d_model, cfg.d_k)
        )

    def attention_maps(self, tokens) -> MapDict:
        """Causal attention probabilities for every (layer, head).

        Each map is n x n with rows summing to 1 over j <= i and exact
        zeros above the diagonal.
        """
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.ndim != 1 or ids.size < 1:
            raise ValueError("tokens must be a non-empty 1-D sequence")
        if ids.min() < 0 or ids.max() >= self.cfg.vocab_size:
            raise ValueError(
                f"token id out of range [0, {self.cfg.vocab_size}): "
                f"{int(ids.min())}..{int(ids.max())}"
            )
        n = ids.size
        x = (self.embedding[ids] + sinusoidal_positions(n, self.cfg.d_model))
        x = x * EMBED_GAIN
        q = np.einsum("nd,lhdk->lhnk", x, self.w_query)
        k = np.einsum("nd,lhdk->lhnk", x, self.w_key)
        scores = np.einsum("lhnk,lhmk->lhnm", q, k) / math.sqrt(self.cfg.d_k)
        keep = causal_region(n, n)
        scores = np.where(keep, scores, -np.inf)
        scores -= scores.max(axis=-1, keepdims=True)
        e = np.exp(scores)
        probs = e / e.sum(axis=-1, keepdims=True)
        return {
            (layer, head): DenseMap(probs[layer, head])
            for layer in range(self.cfg.n_layers)
            for head in range(self.cfg.n_heads)
        }


def toy_forward(tokens, cfg: ToyModelConfig) -> MapDict:
    return ToyTransformer(cfg).attention_maps(tokens)


class AttentionAccumulator:
    """Running per-(layer, head) sums and observation counts over batches.

    The count matrix records how often each causal position pair was seen,
    so variable-length corpora average correctly: pairs beyond a shorter
    sequence simply do not contribute.
    """

    def __init__(self, n_layers: int, n_heads: int, max_len: int) -> None:
        if min(n_layers, n_heads, max_len) < 1:
            raise ValueError("accumulator dimensions must be >= 1")
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.max_len = max_len
        self.sums = np.zeros((n_layers, n_heads, max_len, max_len))
        self.counts = np.zeros((n_layers, n_heads, max_len, max_len), dtype=np.int64)
        self.batches = 0

    def add(self, maps: MapDict, seq_len: int) -> None:
        if not (1 <= seq_len <= self.max_len):
            raise ValueError(f"seq_len {seq_len} outside [1, {self.max_len}]")
        keep = causal_region(seq_len, seq_len)
        for layer in range(self.n_layers):
            for head in range(self.n_heads):
                m = maps[(layer, head)]
                if m.data.shape != (seq_len, seq_len):
                    raise ValueError(
                        f"map for layer {layer} head {head} is "
                        f"{m.data.shape}, expected ({seq_len}, {seq_len})"
                    )
                self.sums[layer, head, :seq_len, :seq_len] += np.where(keep, m.data, 0.0)
                self.counts[layer, head, :seq_len, :seq_len] += keep
        self.batches += 1

    def mean_maps(self, eps: float = 1e-8) -> MapDict:
        """Per-pair means sums/(counts + eps); never-seen pairs stay 0."""
        if eps <= 0:
            raise ValueError("eps must be > 0")
        means = self.sums / (self.counts + eps)
        return {
            (layer, head): DenseMap(means[layer, head])
            for layer in range(self.n_layers)
            for head in range(self.n_heads)
        }


def accumulate(acc: AttentionAccumulator, maps: MapDict, seq_len: int) -> AttentionAccumulator:
    acc.add(maps, seq_len)
    return acc


_TOKEN_LINE = re.compile(r"^\s*\d+(\s+\d+)*\s*$")


def load_corpus(path) -> list[list[int]]:
    """Token-id sequences from a text file, one sequence per line.

    If every nonempty line is space-separated decimal integers they are
    used as ids directly; otherwise each line falls back to its UTF-8
    bytes (id = byte value, so it needs vocab_size >= 256).
    """
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if all(_TOKEN_LINE.match(ln) for ln in lines):
        return [[int(tok) for tok in ln.split()] for ln in lines]
    return [list(ln.encode("utf-8")) for ln in lines]


def ingest_attention_maps(dirpath, n_layers: int, n_heads: int) -> tuple[MapDict, int]:
    """One batch of externally captured maps: attn_L{l}_H{h}.damt files."""
    d = Path(dirpath)
    maps: MapDict = {}
    size = None
    for layer in range(n_layers):
        for head in range(n_heads):
            f = d / f"attn_L{layer}_H{head}.damt"
            if not f.exists():
                raise FileNotFoundError(f"missing ingested map {f}")
            t = read_tensor(f)
            if not isinstance(t, DenseMap) or t.rows != t.cols:
                raise ValueError(f"{f}: expected a square dense map")
            if size is None:
                size = t.rows
            elif t.rows != size:
                raise ValueError(f"{f}: size {t.rows} differs from {size}")
            maps[(layer, head)] = t
    assert size is not None
    return maps, size
