"""End-to-end orchestration: corpus -> mean maps -> amplified maps ->
true masks -> matched pattern sets -> artifact files.

File layout in the output directory (one rank-2 DAMT file per layer/head):

    mean_L{l}_H{h}.damt   mean attention maps
    amp_L{l}_H{h}.damt    amplified, shifted maps
    mask_L{l}_H{h}.damt   emitted binary masks
    matched.txt           matched pattern sets, text format
    stats.csv             per-(layer, head) mask statistics

Per-(layer, head) work runs on a bounded thread pool; the global min-shift
is the one cross-head reduction and happens between the two parallel
phases. Everything is a pure function of (corpus, config), so a rerun
reproduces the artifact tree byte for byte.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .amplify import TransformKind, apply_transform, shift_nonnegative, stabilize
from .capture import (
    AttentionAccumulator,
    MapDict,
    ToyTransformer,
    effective_capture_len,
    ingest_attention_maps,
    load_corpus,
)
from .config import PipelineConfig
from .containers import BitMask, DenseMap
from .maskgen import (
    PatternKind,
    PatternMatch,
    match_patterns,
    true_mask,
    write_matched_sets,
)
from .tensorfile import write_tensor

STATS_HEADER = "layer,head,nnz,sparsity,matched_diagonals,matched_verticals"


@dataclass
class PipelineResult:
    outdir: Path
    means: MapDict
    amplified: MapDict
    masks: dict[tuple[int, int], BitMask]
    matched: dict[tuple[int, int], list[PatternMatch]]
    stats_rows: list[str]


def _map_keys(cfg: PipelineConfig) -> list[tuple[int, int]]:
    m = cfg.model
    return [(l, h) for l in range(m.n_layers) for h in range(m.n_heads)]


def run_capture(
    cfg: PipelineConfig,
    outdir: str | Path,
    corpus_path: str | Path | None = None,
    ingest_dirs: tuple = (),
    jobs: int = 4,
) -> AttentionAccumulator:
    """Accumulate attention maps and write mean_L*_H*.damt files."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    acc = AttentionAccumulator(cfg.model.n_layers, cfg.model.n_heads, cfg.max_capture_len)

    for d in ingest_dirs:
        maps, size = ingest_attention_maps(d, cfg.model.n_layers, cfg.model.n_heads)
        n = effective_capture_len(size, cfg.max_capture_len)
        if n < size:
            maps = {k: DenseMap(m.data[:n, :n]) for k, m in maps.items()}
        acc.add(maps, n)

    if corpus_path is not None:
        model = ToyTransformer(cfg.model)
        for seq in load_corpus(corpus_path):
            n = effective_capture_len(len(seq), cfg.max_capture_len)
            acc.add(model.attention_maps(seq[:n]), n)

    if acc.batches == 0:
        raise ValueError("no sequences accumulated")

    means = acc.mean_maps(cfg.eps)
    _parallel(
        lambda key: write_tensor(out / f"mean_L{key[0]}_H{key[1]}.damt", means[key]),
        _map_keys(cfg),
        jobs,
    )
    return acc


def amplify_means(means: MapDict, cfg: PipelineConfig, jobs: int = 4) -> MapDict:
    """stabilize -> transform per head, then the global min-shift."""
    keys = sorted(means)

    def transform_one(key):
        if cfg.transform in (TransformKind.RAW_SUM, TransformKind.AVERAGE):
            prepared = means[key]
        else:
            prepared = stabilize(means[key], cfg.eps)
        return key, apply_transform(cfg.transform, prepared, cfg.eps, cfg.power_lambda)

    transformed = dict(_parallel(transform_one, keys, jobs))
    return shift_nonnegative(transformed)


def run_pipeline(
    cfg: PipelineConfig,
    outdir: str | Path,
    corpus_path: str | Path | None = None,
    ingest_dirs: tuple = (),
    jobs: int = 4,
) -> PipelineResult:
    out = Path(outdir)
    acc = run_capture(cfg, out, corpus_path, ingest_dirs, jobs)
    means = acc.mean_maps(cfg.eps)
    if cfg.transform is TransformKind.RAW_SUM:
        # raw-sum names its own input: the accumulated sums, not the means.
        source = {key: DenseMap(acc.sums[key[0], key[1]]) for key in _map_keys(cfg)}
    else:
        source = means
    amplified = amplify_means(source, cfg, jobs)

    def finish_one(key):
        layer, head = key
        # Emitted masks are the raw thresholded true masks; the safety
        # diagonal is added at selection time (select_mask), not here.
        mask = true_mask(amplified[key], cfg.mask_threshold)
        matches = match_patterns(mask, cfg.match_threshold)
        write_tensor(out / f"amp_L{layer}_H{head}.damt", amplified[key])
        write_tensor(out / f"mask_L{layer}_H{head}.damt", mask)
        return key, mask, matches

    results = _parallel(finish_one, _map_keys(cfg), jobs)

    masks = {key: mask for key, mask, _ in results}
    matched = {key: matches for key, _, matches in results}
    write_matched_sets(out / "matched.txt", matched)

    rows = []
    for layer, head in sorted(masks):
        mask = masks[(layer, head)]
        nnz = mask.popcount()
        total = mask.rows * (mask.rows + 1) // 2
        entries = matched[(layer, head)]
        n_diag = sum(1 for m in entries if m.pattern.kind is PatternKind.DIAGONAL)
        n_vert = len(entries) - n_diag
        rows.append(f"{layer},{head},{nnz},{1.0 - nnz / total:.6f},{n_diag},{n_vert}")
    (out / "stats.csv").write_text(STATS_HEADER + "\n" + "\n".join(rows) + "\n")

    return PipelineResult(out, means, amplified, masks, matched, rows)


def _parallel(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
