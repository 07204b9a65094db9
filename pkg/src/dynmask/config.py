"""Pipeline configuration: one dataclass, a diffable ``key = value`` text
form, and strict parsing. Flags layered on top by the CLI always win."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .amplify import TransformKind
from .capture import ToyModelConfig


@dataclass
class PipelineConfig:
    max_capture_len: int = 512
    eps: float = 1e-8
    transform: TransformKind = TransformKind.BOX_COX
    power_lambda: float = 0.5
    mask_threshold: float = 0.3
    match_threshold: float = 0.8
    seed: int = 0
    self_attend: bool = True
    model: ToyModelConfig = field(default_factory=ToyModelConfig)

    def __post_init__(self) -> None:
        if self.max_capture_len < 1:
            raise ValueError("max_capture_len must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.mask_threshold < 0:
            raise ValueError("mask_threshold must be >= 0")
        if not (0.0 <= self.match_threshold <= 1.0):
            raise ValueError("match_threshold must lie in [0, 1]")


def render_config(cfg: PipelineConfig) -> str:
    """Plain-text form; floats use repr so parsing reproduces them exactly."""
    m = cfg.model
    lines = [
        f"max_capture_len = {cfg.max_capture_len}",
        f"eps = {cfg.eps!r}",
        f"transform = {cfg.transform.value}",
        f"power_lambda = {cfg.power_lambda!r}",
        f"mask_threshold = {cfg.mask_threshold!r}",
        f"match_threshold = {cfg.match_threshold!r}",
        f"seed = {cfg.seed}",
        f"self_attend = {'true' if cfg.self_attend else 'false'}",
        f"n_layers = {m.n_layers}",
        f"n_heads = {m.n_heads}",
        f"d_model = {m.d_model}",
        f"d_k = {m.d_k}",
        f"vocab_size = {m.vocab_size}",
        f"model_seed = {m.seed}",
    ]
    return "\n".join(lines) + "\n"


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config(text: str) -> PipelineConfig:
    """Parse the ``key = value`` form; unknown keys are an error."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()

    cfg = PipelineConfig()
    model_kw = {
        "n_layers": cfg.model.n_layers,
        "n_heads": cfg.model.n_heads,
        "d_model": cfg.model.d_model,
        "d_k": 0,
        "vocab_size": cfg.model.vocab_size,
        "seed": cfg.model.seed,
    }
    known = {
        "max_capture_len", "eps", "transform", "power_lambda",
        "mask_threshold", "match_threshold", "seed", "self_attend",
        "n_layers", "n_heads", "d_model", "d_k", "vocab_size", "model_seed",
    }
    for key, val in values.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        try:
            if key == "max_capture_len":
                cfg.max_capture_len = int(val)
            elif key == "eps":
                cfg.eps = float(val)
            elif key == "transform":
                cfg.transform = TransformKind(val)
            elif key == "power_lambda":
                cfg.power_lambda = float(val)
            elif key == "mask_threshold":
                cfg.mask_threshold = float(val)
            elif key == "match_threshold":
                cfg.match_threshold = float(val)
            elif key == "seed":
                cfg.seed = int(val)
            elif key == "self_attend":
                cfg.self_attend = _parse_bool(val)
            elif key in ("n_layers", "n_heads", "d_model", "d_k", "vocab_size"):
                model_kw[key] = int(val)
            elif key == "model_seed":
                model_kw["seed"] = int(val)
        except ValueError as e:
            raise ValueError(f"config key {key!r}: {e}") from None
    cfg.model = ToyModelConfig(**model_kw)
    # Re-check cross-field constraints after overrides.
    cfg.__post_init__()
    return cfg


def load_config(path: str | os.PathLike) -> PipelineConfig:
    return parse_config(Path(path).read_text())
