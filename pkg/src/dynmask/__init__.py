"""Dynamic sparse attention masks: capture maps from a causal model,
amplify and threshold them into binary masks, mine diagonal/vertical
structure, extend masks to longer sequences, and apply them as
structured-sparse attention."""

from .amplify import (
    TransformKind,
    apply_transform,
    box_cox,
    shift_nonnegative,
    stabilize,
    yeo_johnson,
)
from .capture import (
    AttentionAccumulator,
    ToyModelConfig,
    ToyTransformer,
    accumulate,
    effective_capture_len,
    load_corpus,
    toy_forward,
)
from .config import PipelineConfig, load_config, parse_config, render_config
from .containers import BitMask, DenseMap
from .maskgen import (
    PatternId,
    PatternKind,
    PatternMatch,
    build_extended,
    force_self_attend,
    gen_pattern,
    match_patterns,
    match_score,
    pattern_pool,
    read_matched_sets,
    true_mask,
    write_matched_sets,
)
from .pipeline import PipelineResult, run_capture, run_pipeline
from .render import to_pgm, write_pgm
from .sparse_attn import (
    AttentionInputs,
    EfficiencyReport,
    dense_attention,
    efficiency_report,
    masked_softmax,
    select_mask,
    sparse_attention,
)
from .tensorfile import DamtError, read_tensor, write_tensor

__version__ = "0.1.0"

__all__ = [
    "AttentionAccumulator",
    "AttentionInputs",
    "BitMask",
    "DamtError",
    "DenseMap",
    "EfficiencyReport",
    "PatternId",
    "PatternKind",
    "PatternMatch",
    "PipelineConfig",
    "PipelineResult",
    "ToyModelConfig",
    "ToyTransformer",
    "TransformKind",
    "accumulate",
    "apply_transform",
    "box_cox",
    "build_extended",
    "dense_attention",
    "effective_capture_len",
    "efficiency_report",
    "force_self_attend",
    "gen_pattern",
    "load_config",
    "load_corpus",
    "masked_softmax",
    "match_patterns",
    "match_score",
    "parse_config",
    "pattern_pool",
    "read_matched_sets",
    "read_tensor",
    "render_config",
    "run_capture",
    "run_pipeline",
    "select_mask",
    "shift_nonnegative",
    "sparse_attention",
    "stabilize",
    "to_pgm",
    "toy_forward",
    "true_mask",
    "write_matched_sets",
    "write_pgm",
    "write_tensor",
    "yeo_johnson",
]
