"""Flat ``key = value`` pipeline configuration.

One line per setting, ``#`` starts a comment, blank lines are ignored::

    # tracker
    gate_cost = 0.7
    position_filter = true
    remove_lm_floor = none

Keys are the parameter names of the owning modules. The one rename is the
dual-LM interpolation ``mode``, spelled ``lm_mode`` here so that the flat
namespace stays unambiguous.
"""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, fields
from typing import Any, Mapping

from .extractor import ExtractorParams
from .fusion import FusionConfig
from .lm import DualLmConfig
from .model import ValidationError
from .tracker import TrackerParams


@dataclass(frozen=True)
class DecoderSettings:
    beam_width: int = 10
    n_best: int = 10
    lm_weight: float = 0.3
    rescore_weight: float = 0.5
    lm_order: int = 4

    def __post_init__(self):
        if self.beam_width < 1 or self.n_best < 1:
            raise ValueError("beam_width and n_best must be >= 1")
        if self.lm_order < 1:
            raise ValueError("lm_order must be >= 1")


@dataclass(frozen=True)
class PathSettings:
    lm_universal: str | None = None
    lm_domain: str | None = None
    out_dir: str = "."


_SECTIONS = {
    "tracker": TrackerParams,
    "extractor": ExtractorParams,
    "fusion": FusionConfig,
    "lm": DualLmConfig,
    "decoder": DecoderSettings,
    "paths": PathSettings,
}
_RENAMES = {("lm", "mode"): "lm_mode"}


def _key_table() -> dict[str, tuple[str, str, Any]]:
    """flat key -> (section, field name, field type)"""
    table: dict[str, tuple[str, str, Any]] = {}
    for section, cls in _SECTIONS.items():
        hints = typing.get_type_hints(cls)
        for f in fields(cls):
            key = _RENAMES.get((section, f.name), f.name)
            if key in table:
                raise RuntimeError(f"config key {key!r} is ambiguous")
            table[key] = (section, f.name, hints[f.name])
    return table


KEYS = _key_table()


@dataclass(frozen=True)
class PipelineConfig:
    tracker: TrackerParams = TrackerParams()
    extractor: ExtractorParams = ExtractorParams()
    fusion: FusionConfig = FusionConfig()
    lm: DualLmConfig = DualLmConfig()
    decoder: DecoderSettings = DecoderSettings()
    paths: PathSettings = PathSettings()

    def with_values(self, values: Mapping[str, Any]) -> "PipelineConfig":
        """Return a copy with flat ``values`` applied (already typed)."""
        unknown = sorted(set(values) - set(KEYS))
        if unknown:
            raise ValidationError(f"unknown config key: {unknown[0]}")
        per_section: dict[str, dict[str, Any]] = {}
        for key, value in values.items():
            section, name, _ = KEYS[key]
            per_section.setdefault(section, {})[name] = value
        updates = {}
        for section, changes in per_section.items():
            try:
                updates[section] = dataclasses.replace(getattr(self, section), **changes)
            except (TypeError, ValueError) as e:
                raise ValidationError(f"invalid {section} settings: {e}") from e
        return dataclasses.replace(self, **updates)

    def to_text(self) -> str:
        lines = []
        for section in _SECTIONS:
            lines.append(f"# {section}")
            obj = getattr(self, section)
            for f in fields(obj):
                key = _RENAMES.get((section, f.name), f.name)
                lines.append(f"{key} = {_format(getattr(obj, f.name))}")
            lines.append("")
        return "\n".join(lines)


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _coerce(key: str, raw: str, kind: Any) -> Any:
    optional = False
    args = typing.get_args(kind)
    if args and type(None) in args:
        optional = True
        kind = next(a for a in args if a is not type(None))
    if optional and raw.lower() == "none":
        return None
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ValidationError(f"config key {key!r}: cannot read {raw!r} as {kind.__name__}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value'")
        if key not in KEYS:
            raise ValidationError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ValidationError(f"{source}:{lineno}: duplicate config key {key!r}")
        values[key] = _coerce(key, raw, KEYS[key][2])
    return values


def load_config(path: str | None = None, overrides: Mapping[str, Any] | None = None
                ) -> PipelineConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (CLI flags)."""
    cfg = PipelineConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            cfg = cfg.with_values(parse_config_text(fh.read(), path))
    if overrides:
        cfg = cfg.with_values({k: v for k, v in overrides.items() if v is not None})
    return cfg
