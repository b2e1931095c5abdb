"""Plain-text experiment configuration.

Grammar: one ``section.key = value`` per line, ``#`` starts a comment,
blank lines ignored.  Every key is optional and falls back to the
default in _SCHEMA; unknown keys and duplicates are rejected with line
numbers.  serialize() renders every key in sorted order, so equal
configs produce identical text and the text drives the experiment hash.

Tuple values are comma-separated (``model.strides = 4,2,2,2``); the
token ``auto`` selects the variant default for strides and the
epoch-derived default for eval_every.
"""

import hashlib

from .degrade import DegradationRanges
from .errors import ConfigError
from .models import (
    VARIANTS,
    EmbeddingConfig,
    ModelConfig,
    PEConfig,
    SRBConfig,
)
from .train import TrainSchedule

_AUTO = "auto"

# key -> (kind, arity or choices, default); arity None = any length >= 1
_SCHEMA = {
    "model.variant": ("choice", VARIANTS, "nerv"),
    "model.strides": ("ints_or_auto", None, None),
    "model.base_width": ("int", None, 16),
    "model.width_decay": ("int", None, 2),
    "model.stem_hidden": ("int", None, 64),
    "model.pe_freq_base": ("float", None, 1.25),
    "model.pe_num_freqs": ("int", None, 8),
    "model.embedding_channels": ("int", None, 16),
    "model.srb_channels": ("int", None, 32),
    "model.srb_num_res_blocks": ("int", None, 4),
    "model.srb_scale": ("int", None, 2),
    "model.output_hw": ("ints", 2, (64, 128)),
    "schedule.total_epochs": ("int", None, 300),
    "schedule.srb_finetune_start": ("int", None, 0),
    "schedule.base_lr": ("float", None, 5e-4),
    "schedule.warmup_frac": ("float", None, 0.05),
    "schedule.eval_every": ("int_or_auto", None, None),
    "degrade.kernel_sizes": ("ints", None, (3, 5)),
    "degrade.sigma": ("floats", 2, (0.2, 1.5)),
    "degrade.saturation": ("floats", 2, (0.8, 1.2)),
    "degrade.gain": ("floats", 2, (0.9, 1.1)),
    "degrade.bias": ("floats", 2, (-0.05, 0.05)),
    "pretrain.epochs": ("int", None, 30),
    "pretrain.lr": ("float", None, 1e-4),
    "pretrain.crop": ("int", None, 64),
    "paths.corpus_dir": ("str", None, ""),
    "paths.video_dir": ("str", None, ""),
    "paths.out_dir": ("str", None, "out"),
    "run.seed": ("int", None, 0),
}


def _parse_scalar(kind, raw, extra):
    if kind == "str":
        return raw
    if kind == "choice":
        if raw not in extra:
            raise ValueError(f"must be one of {', '.join(extra)}; got {raw!r}")
        return raw
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"expected an integer, got {raw!r}") from None
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"expected a number, got {raw!r}") from None
    raise AssertionError(kind)


def _parse_value(kind, extra, raw):
    if kind in ("int_or_auto", "ints_or_auto"):
        if raw == _AUTO:
            return None
        kind = kind[: -len("_or_auto")]
    if kind in ("ints", "floats"):
        parts = [p.strip() for p in raw.split(",")]
        if parts == [""]:
            raise ValueError("expected a comma-separated list, got nothing")
        if extra is not None and len(parts) != extra:
            raise ValueError(f"expected exactly {extra} values, got {len(parts)}")
        scalar = "int" if kind == "ints" else "float"
        return tuple(_parse_scalar(scalar, p, None) for p in parts)
    return _parse_scalar(kind, raw, extra)


def _render_value(kind, value):
    if value is None and kind.endswith("_or_auto"):
        return _AUTO
    if kind in ("ints", "ints_or_auto"):
        return ",".join(str(v) for v in value)
    if kind == "floats":
        return ",".join(repr(float(v)) for v in value)
    if kind == "float":
        return repr(float(value))
    return str(value)


class ExperimentConfig:
    """Resolved, fully-defaulted view of one experiment description."""

    def __init__(self, values=None):
        values = dict(values or {})
        unknown = sorted(set(values) - set(_SCHEMA))
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(unknown)}")
        self._values = {k: values.get(k, default) for k, (_, _, default) in _SCHEMA.items()}

    def __getitem__(self, key):
        if key not in self._values:
            raise ConfigError(f"unknown key {key!r}")
        return self._values[key]

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self._values == other._values

    def __repr__(self):
        return f"ExperimentConfig(hash={self.hash})"

    def with_value(self, key, value):
        """A copy with one key replaced; the original is untouched."""
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        kind, extra, _ = _SCHEMA[key]
        # normalize through the text form so stored types stay canonical
        values = dict(self._values)
        values[key] = _parse_value(kind, extra, _render_value(kind, value))
        return ExperimentConfig(values)

    def serialize(self):
        lines = []
        for key in sorted(_SCHEMA):
            kind, _, _ = _SCHEMA[key]
            lines.append(f"{key} = {_render_value(kind, self._values[key])}".rstrip())
        return "\n".join(lines) + "\n"

    @property
    def hash(self):
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()[:16]

    def model_config(self):
        v = self._values
        return ModelConfig(
            variant=v["model.variant"],
            strides=v["model.strides"],
            base_width=v["model.base_width"],
            width_decay=v["model.width_decay"],
            stem_hidden=v["model.stem_hidden"],
            pe=PEConfig(v["model.pe_freq_base"], v["model.pe_num_freqs"]),
            embedding=EmbeddingConfig(v["model.embedding_channels"]),
            srb=SRBConfig(
                v["model.srb_channels"], v["model.srb_num_res_blocks"], v["model.srb_scale"]
            ),
            output_hw=v["model.output_hw"],
        )

    def schedule(self):
        v = self._values
        return TrainSchedule(
            total_epochs=v["schedule.total_epochs"],
            srb_finetune_start=v["schedule.srb_finetune_start"],
            seed=v["run.seed"],
            base_lr=v["schedule.base_lr"],
            warmup_frac=v["schedule.warmup_frac"],
            eval_every=v["schedule.eval_every"],
        )

    def ranges(self):
        v = self._values
        return DegradationRanges(
            kernel_sizes=v["degrade.kernel_sizes"],
            sigma=v["degrade.sigma"],
            saturation=v["degrade.saturation"],
            gain=v["degrade.gain"],
            bias=v["degrade.bias"],
        )


def parse_config(text):
    """Parse config text; errors carry line numbers and offending keys."""
    values = {}
    seen_line = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, rhs = line.partition("=")
        if not eq:
            raise ConfigError(
                f"line {lineno}: expected 'section.key = value', got {line!r}"
            )
        key = key.strip()
        rhs = rhs.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen_line:
            raise ConfigError(
                f"duplicate key {key!r} on lines {seen_line[key]} and {lineno}"
            )
        kind, extra, _ = _SCHEMA[key]
        try:
            values[key] = _parse_value(kind, extra, rhs)
        except ValueError as e:
            raise ConfigError(f"line {lineno}: {key}: {e}") from None
        seen_line[key] = lineno
    return ExperimentConfig(values)
