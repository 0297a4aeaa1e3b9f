"""Run configuration and its flat ``section.key = value`` text format.

Example document::

    # Fig. 7 right-hand operating point
    operator.fa = 0.1
    operator.nd = 5
    manager.adjust_error = true
    manager.cutoff_time = true
    plan.pq_grid = 1000, 300, 100, 30, 10

Bare field names (``fa = 0.1``) are accepted as aliases for the dotted form.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Any, Dict, Optional, Tuple

DEFAULT_PQ_GRID: Tuple[float, ...] = (1000.0, 300.0, 100.0, 30.0, 10.0)

SECTIONS: Dict[str, Tuple[str, ...]] = {
    "world": ("walk_sigma", "beam_step", "warmup_ticks"),
    "noise": ("sigma0", "misalign_gain", "mu"),
    "operator": ("fa", "nd", "switch_cost_per_unit", "button_left", "button_right"),
    "analyst": ("se_window", "min_events"),
    "manager": ("nominal_te", "adjust_error", "cutoff_time", "budget_ticks"),
    "plan": ("pq_grid",),
    "scan": ("replications", "base_seed"),
}

DOTTED: Dict[str, str] = {
    name: f"{section}.{name}" for section, names in SECTIONS.items() for name in names
}


class ConfigError(ValueError):
    """Base class for configuration diagnostics; names the key and line."""

    kind = "invalid config"

    def __init__(self, key: str, message: str, line: Optional[int] = None) -> None:
        self.key = key
        self.line = line
        self.detail = message
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{key}: {message}")


class UnknownKey(ConfigError):
    kind = "unknown key"


class TypeMismatch(ConfigError):
    kind = "type mismatch"


class ConstraintViolation(ConfigError):
    kind = "constraint violation"


@dataclass(frozen=True)
class RunConfig:
    walk_sigma: float = 0.05
    beam_step: float = 0.1
    warmup_ticks: int = 500
    sigma0: float = 1.0
    misalign_gain: float = 2.0
    mu: float = 0.0
    fa: float = 0.1
    nd: int = 1
    switch_cost_per_unit: float = 2.0
    button_left: float = 0.0
    button_right: float = 1.0
    se_window: int = 50
    min_events: int = 10
    nominal_te: float = 0.001
    adjust_error: bool = False
    cutoff_time: bool = False
    # None means "calibrate from the plan" (see planner.calibrated_budget)
    budget_ticks: Optional[int] = None
    pq_grid: Tuple[float, ...] = DEFAULT_PQ_GRID
    replications: int = 30
    base_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pq_grid", tuple(float(p) for p in self.pq_grid))
        for key, ok, why in self._constraints():
            if not ok:
                raise ConstraintViolation(DOTTED[key], why)

    def _constraints(self):
        finite = math.isfinite
        yield "walk_sigma", finite(self.walk_sigma) and self.walk_sigma >= 0, "must be >= 0"
        yield "beam_step", finite(self.beam_step) and self.beam_step > 0, "must be > 0"
        yield "warmup_ticks", self.warmup_ticks >= 0, "must be >= 0"
        yield "sigma0", finite(self.sigma0) and self.sigma0 > 0, "must be > 0"
        yield "misalign_gain", finite(self.misalign_gain) and self.misalign_gain >= 0, "must be >= 0"
        yield "mu", finite(self.mu), "must be finite"
        yield "fa", finite(self.fa) and self.fa > 0, "must be > 0"
        yield "nd", self.nd >= 0, "must be >= 0"
        yield "switch_cost_per_unit", finite(self.switch_cost_per_unit) and self.switch_cost_per_unit >= 0, "must be >= 0"
        yield "button_left", finite(self.button_left), "must be finite"
        yield "button_right", finite(self.button_right), "must be finite"
        yield "se_window", self.se_window >= 2, "must be >= 2"
        yield "min_events", self.min_events >= 2, "must be >= 2"
        yield "nominal_te", finite(self.nominal_te) and self.nominal_te > 0, "must be > 0"
        yield "budget_ticks", self.budget_ticks is None or self.budget_ticks >= 0, "must be >= 0 or auto"
        yield "pq_grid", len(self.pq_grid) > 0 and all(finite(p) and p > 0 for p in self.pq_grid), "must be a nonempty list of positive numbers"
        yield "pq_grid", len(set(self.pq_grid)) == len(self.pq_grid), "values must be distinct"
        yield "replications", self.replications >= 1, "must be >= 1"

    def replace(self, **changes: Any) -> RunConfig:
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def coerce_value(name: str, raw: Any) -> Any:
    """Convert a raw text (or already-typed) value to the field's type."""
    kind = _FIELD_TYPES[name]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if kind == "bool":
        return _parse_bool(text)
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "Optional[int]":
        return None if text.lower() in ("auto", "none", "") else int(text)
    if kind == "Tuple[float, ...]":
        parts = [p for p in text.replace("[", "").replace("]", "").split(",") if p.strip()]
        return tuple(float(p) for p in parts)
    raise AssertionError(f"unhandled field type {kind}")


def resolve_key(key: str) -> str:
    """Map a dotted or bare key to the RunConfig field name."""
    if key in _FIELD_TYPES:
        return key
    section, _, name = key.partition(".")
    if name and SECTIONS.get(section) and name in SECTIONS[section]:
        return name
    raise UnknownKey(key, "not a recognised configuration key")


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parse a config document; absent keys keep the defaults (or ``base``)."""
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise TypeMismatch(key or "<line>", "expected 'key = value'", lineno)
        try:
            name = resolve_key(key)
        except UnknownKey:
            raise UnknownKey(key, "not a recognised configuration key", lineno) from None
        try:
            values[name] = coerce_value(name, raw)
        except ValueError as exc:
            raise TypeMismatch(DOTTED[name], str(exc), lineno) from None
        lines[name] = lineno
    try:
        return dataclasses.replace(base or RunConfig(), **values)
    except ConstraintViolation as exc:
        name = exc.key.rpartition(".")[2]
        raise ConstraintViolation(exc.key, exc.detail, lines.get(name)) from None


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for section, names in SECTIONS.items():
        out.append(f"# {section}")
        for name in names:
            out.append(f"{section}.{name} = {_fmt(getattr(cfg, name))}")
    return "\n".join(out) + "\n"


def config_to_dict(cfg: RunConfig) -> Dict[str, Any]:
    d = dataclasses.asdict(cfg)
    d["pq_grid"] = list(cfg.pq_grid)
    return d


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    values = {}
    for key, value in data.items():
        name = resolve_key(key)
        if name == "pq_grid" and isinstance(value, list):
            value = tuple(value)
        values[name] = coerce_value(name, value)
    return RunConfig(**values)
