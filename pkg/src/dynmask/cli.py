"""Command-line front end.

Subcommands: capture, pipeline, render, attend, bench. Exit status is 0 on
success; any failure prints a one-line diagnostic on stderr and returns 1.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .amplify import TransformKind
from .capture import ToyModelConfig
from .config import PipelineConfig, load_config
from .containers import BitMask, DenseMap
from .maskgen import read_matched_sets
from .pipeline import run_capture, run_pipeline
from .render import write_pgm
from .sparse_attn import (
    AttentionInputs,
    dense_attention,
    efficiency_report,
    select_mask,
    sparse_attention,
)
from .tensorfile import read_tensor, write_tensor


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--config", metavar="FILE", help="key = value config file")
    g.add_argument("--max-capture-len", type=int, metavar="N")
    g.add_argument("--eps", type=float, metavar="X")
    g.add_argument(
        "--transform",
        choices=[k.value for k in TransformKind],
        help="amplification kind (default box-cox)",
    )
    g.add_argument("--lambda", dest="power_lambda", type=float, metavar="X",
                   help="power for box-cox / yeo-johnson (default 0.5)")
    g.add_argument("--mask-threshold", type=float, metavar="X",
                   help="true-mask binarization threshold (default 0.3)")
    g.add_argument("--match-threshold", type=float, metavar="X",
                   help="minimum pattern match score (default 0.8)")
    g.add_argument("--seed", type=int, metavar="N")
    g.add_argument("--no-self-attend", action="store_true",
                   help="do not force diagonal bits into emitted masks")
    g.add_argument("--layers", type=int, metavar="N")
    g.add_argument("--heads", type=int, metavar="N")
    g.add_argument("--d-model", type=int, metavar="N")
    g.add_argument("--vocab-size", type=int, metavar="N")
    g.add_argument("--model-seed", type=int, metavar="N")
    g.add_argument("--jobs", type=int, default=4, metavar="N",
                   help="worker threads for per-head stages (default 4)")


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.max_capture_len is not None:
        cfg.max_capture_len = args.max_capture_len
    if args.eps is not None:
        cfg.eps = args.eps
    if args.transform is not None:
        cfg.transform = TransformKind(args.transform)
    if args.power_lambda is not None:
        cfg.power_lambda = args.power_lambda
    if args.mask_threshold is not None:
        cfg.mask_threshold = args.mask_threshold
    if args.match_threshold is not None:
        cfg.match_threshold = args.match_threshold
    if args.seed is not None:
        cfg.seed = args.seed
    if args.no_self_attend:
        cfg.self_attend = False
    model_kw = dict(
        n_layers=cfg.model.n_layers,
        n_heads=cfg.model.n_heads,
        d_model=cfg.model.d_model,
        d_k=0,
        vocab_size=cfg.model.vocab_size,
        seed=cfg.model.seed,
    )
    if args.layers is not None:
        model_kw["n_layers"] = args.layers
    if args.heads is not None:
        model_kw["n_heads"] = args.heads
    if args.d_model is not None:
        model_kw["d_model"] = args.d_model
    if args.vocab_size is not None:
        model_kw["vocab_size"] = args.vocab_size
    if args.model_seed is not None:
        model_kw["seed"] = args.model_seed
    cfg.model = ToyModelConfig(**model_kw)
    cfg.__post_init__()
    return cfg


def cmd_capture(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    if args.corpus is None and not args.ingest:
        raise ValueError("need a corpus file and/or --ingest directories")
    acc = run_capture(cfg, args.out, args.corpus, tuple(args.ingest), args.jobs)
    print(f"accumulated {acc.batches} sequences "
          f"-> {cfg.model.n_layers * cfg.model.n_heads} mean maps in {args.out}")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    if args.corpus is None and not args.ingest:
        raise ValueError("need a corpus file and/or --ingest directories")
    result = run_pipeline(cfg, args.out, args.corpus, tuple(args.ingest), args.jobs)
    from .pipeline import STATS_HEADER

    print(STATS_HEADER)
    for row in result.stats_rows:
        print(row)
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    write_pgm(args.output, read_tensor(args.input))
    return 0


def _load_matched_entry(args: argparse.Namespace):
    if args.matched is None:
        return []
    sets = read_matched_sets(args.matched)
    if args.layer is not None or args.head is not None:
        if args.layer is None or args.head is None:
            raise ValueError("--layer and --head must be given together")
        # a head absent from the file simply matched nothing
        return sets.get((args.layer, args.head), [])
    if len(sets) == 1:
        return next(iter(sets.values()))
    raise ValueError(
        f"matched file has {len(sets)} (layer, head) entries; pick one with --layer/--head"
    )


def _load_mask(path) -> BitMask:
    t = read_tensor(path)
    if not isinstance(t, BitMask):
        raise ValueError(f"{path}: not a mask tensor")
    if t.rows != t.cols:
        raise ValueError(f"{path}: mask must be square")
    return t


def _load_inputs(path, n: int) -> AttentionInputs:
    t = read_tensor(path)
    if not isinstance(t, DenseMap) or t.rows != 3 * n:
        raise ValueError(
            f"{path}: inputs file must be a dense (3*seq_len) x d map "
            f"stacking Q, K, V (need {3 * n} rows, got {getattr(t, 'rows', '?')})"
        )
    d = t.data
    return AttentionInputs(q=d[:n], k=d[n : 2 * n], v=d[2 * n :])


def cmd_attend(args: argparse.Namespace) -> int:
    base = _load_mask(args.mask)
    n = args.seq_len
    matched = _load_matched_entry(args)
    if n > base.rows and args.matched is None:
        raise ValueError(
            f"mask is {base.rows}x{base.rows} but seq-len is {n}; "
            "pass --matched to extend it"
        )
    mask = select_mask(n, base.rows, base, matched, not args.no_self_attend)

    if args.inputs is not None:
        inp = _load_inputs(args.inputs, n)
    else:
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        inp = AttentionInputs(
            q=rng.standard_normal((n, args.d)),
            k=rng.standard_normal((n, args.d)),
            v=rng.standard_normal((n, args.d)),
        )

    out = sparse_attention(inp, mask)
    if args.out:
        write_tensor(args.out, DenseMap(out))
    print(efficiency_report(mask, inp.q.shape[1]).line())
    if args.dense_check:
        ref = dense_attention(inp, mask)
        print(f"dense-check max abs diff: {np.abs(out - ref).max():.3e}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    base = _load_mask(args.mask)
    matched = _load_matched_entry(args)
    lens = sorted({int(s) for s in args.seq_lens.split(",") if s.strip()})
    if not lens:
        raise ValueError("--seq-lens needs at least one length")
    lines = ["seq_len,nnz,sparsity,flops_sparse,flops_dense"]
    for n in lens:
        if n > base.rows and args.matched is None:
            raise ValueError(f"seq-len {n} exceeds mask size; pass --matched")
        mask = select_mask(n, base.rows, base, matched, not args.no_self_attend)
        r = efficiency_report(mask, args.d)
        lines.append(f"{n},{r.nnz},{r.sparsity:.6f},{r.flops_sparse},{r.flops_dense}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynmask",
        description="Capture attention maps, mine structural mask patterns, "
        "and apply them as sparse attention.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capture", help="accumulate mean attention maps")
    p.add_argument("corpus", nargs="?", help="token-id or text corpus, one sequence per line")
    p.add_argument("--ingest", action="append", default=[], metavar="DIR",
                   help="directory of attn_L{l}_H{h}.damt maps (repeatable)")
    p.add_argument("--out", required=True, metavar="DIR")
    _add_config_flags(p)
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("pipeline", help="capture, amplify, threshold, and match patterns")
    p.add_argument("corpus", nargs="?")
    p.add_argument("--ingest", action="append", default=[], metavar="DIR")
    p.add_argument("--out", required=True, metavar="DIR")
    _add_config_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("render", help="render a DAMT tensor as a PGM image")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("attend", help="apply a mask as sparse attention")
    p.add_argument("--mask", required=True, metavar="FILE")
    p.add_argument("--seq-len", type=int, required=True, metavar="N")
    p.add_argument("--matched", metavar="FILE", help="matched-set file for extension")
    p.add_argument("--layer", type=int, metavar="N")
    p.add_argument("--head", type=int, metavar="N")
    p.add_argument("--inputs", metavar="FILE",
                   help="dense (3*seq_len) x d DAMT stacking Q, K, V")
    p.add_argument("--seed", type=int, metavar="N", help="seed for random Q, K, V")
    p.add_argument("--d", type=int, default=16, metavar="N",
                   help="head dim for random inputs (default 16)")
    p.add_argument("--out", metavar="FILE", help="write attention output as DAMT")
    p.add_argument("--dense-check", action="store_true",
                   help="print max abs diff against a dense reference")
    p.add_argument("--no-self-attend", action="store_true")
    p.set_defaults(func=cmd_attend)

    p = sub.add_parser("bench", help="sweep sequence lengths into an efficiency CSV")
    p.add_argument("--mask", required=True, metavar="FILE")
    p.add_argument("--matched", metavar="FILE")
    p.add_argument("--layer", type=int, metavar="N")
    p.add_argument("--head", type=int, metavar="N")
    p.add_argument("--seq-lens", required=True, metavar="N,N,...")
    p.add_argument("--d", type=int, default=16, metavar="N")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--no-self-attend", action="store_true")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # one-line diagnostic, nonzero exit
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
