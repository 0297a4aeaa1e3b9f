"""Macro scale: sample ordering, beam-time budget and target-error re-planning."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

from .agents import OperatorState
from .config import RunConfig, config_to_dict
from .measurement import AgentBundle, MeasurementRecord, chase, run_measurement
from .world import Command, NoiseModel, SimClock, WalkParams, WorldState

# Budget calibration: this multiple of the analytic fixed-TE cost of the
# first CALIBRATION_SAMPLES samples, so time pressure bites on the last two.
BUDGET_FACTOR = 1.5
CALIBRATION_SAMPLES = 3


@dataclass(frozen=True, slots=True)
class Sample:
    id: str
    pq: float
    nominal_te: float = 0.001

    def __post_init__(self) -> None:
        if not self.pq > 0:
            raise ValueError(f"sample {self.id!r}: pq must be > 0")
        if not self.nominal_te > 0:
            raise ValueError(f"sample {self.id!r}: nominal_te must be > 0")


@dataclass(frozen=True)
class ExperimentPlan:
    samples: tuple
    budget_ticks: int

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.samples, key=lambda s: -s.pq))
        object.__setattr__(self, "samples", ordered)
        if len({s.id for s in ordered}) != len(ordered):
            raise ValueError("sample ids must be distinct")
        if any(a.pq == b.pq for a, b in zip(ordered, ordered[1:])):
            raise ValueError("sample pq values must be distinct")
        if self.budget_ticks < 0:
            raise ValueError("budget_ticks must be >= 0")

    @classmethod
    def from_config(cls, cfg: RunConfig) -> ExperimentPlan:
        samples = [Sample(sample_id_for(pq), pq, cfg.nominal_te) for pq in cfg.pq_grid]
        budget = cfg.budget_ticks if cfg.budget_ticks is not None else calibrated_budget(cfg)
        return cls(tuple(samples), budget)

    def __len__(self) -> int:
        return len(self.samples)


def sample_id_for(pq: float) -> str:
    return f"pq{pq:g}"


def next_sample(plan: ExperimentPlan, cursor: int) -> Optional[Sample]:
    if cursor < 0 or cursor > len(plan.samples):
        raise IndexError(cursor)
    if cursor == len(plan.samples):
        return None
    return plan.samples[cursor]


def analytic_cost(sigma0: float, pq: float, te: float) -> float:
    """Events needed for SE = te when misalignment plays no part: (sigma0 / (pq te))^2."""
    return (sigma0 / (pq * te)) ** 2


def calibrated_budget(cfg: RunConfig) -> int:
    pqs = sorted(cfg.pq_grid, reverse=True)[:CALIBRATION_SAMPLES]
    cost = sum(analytic_cost(cfg.sigma0, pq, cfg.nominal_te) for pq in pqs)
    return math.ceil(BUDGET_FACTOR * cost)


class HistoryEntry(NamedTuple):
    pq: float
    se: float  # error actually achieved
    events: int
    ticks: int


def fit_cost_constant(history: Sequence[HistoryEntry], fallback: float) -> float:
    """Least-squares (through the origin) fit of ticks = C / (pq se)^2."""
    sxx = sxy = 0.0
    for h in history:
        if h.ticks <= 0 or not math.isfinite(h.se) or h.se <= 0:
            continue
        x = 1.0 / (h.pq * h.se) ** 2
        sxx += x * x
        sxy += x * h.ticks
    if sxx == 0.0:
        return fallback
    return sxy / sxx


def estimate_cost(
    history: Sequence[HistoryEntry], pq: float, te: float, sigma0: float = 1.0
) -> float:
    if not te > 0:
        raise ValueError("te must be > 0")
    c = fit_cost_constant(history, fallback=sigma0 ** 2)
    return c / (pq * te) ** 2


@dataclass
class ManagerState:
    adjust_error: bool
    cutoff_time: bool
    nominal_te: float
    budget_ticks: int
    te_current: float = 0.0
    ticks_spent: int = 0
    history: List[HistoryEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.te_current <= 0:
            self.te_current = self.nominal_te

    def record(self, rec: MeasurementRecord) -> None:
        self.ticks_spent += rec.ticks_used
        self.history.append(HistoryEntry(rec.pq, rec.final_se, rec.events, rec.ticks_used))


def adjust_te(state: ManagerState, remaining: Sequence[Sample], sigma0: float = 1.0) -> float:
    """Rescale the target error so projected cost of ``remaining`` fits the budget left.

    Cost goes as TE^-2, so multiplying TE by sqrt(projection / budget_left)
    rebalances exactly. TE never drops below nominal.
    """
    if not state.adjust_error:
        return state.nominal_te
    if not remaining:
        return state.te_current
    budget_left = max(state.budget_ticks - state.ticks_spent, 1)
    te = state.te_current
    projection = sum(estimate_cost(state.history, s.pq, te, sigma0) for s in remaining)
    if projection <= 0:
        return max(state.nominal_te, te)
    if projection > budget_left:
        return te * math.sqrt(projection / budget_left)
    return max(state.nominal_te, te / math.sqrt(budget_left / projection))


@dataclass
class ExperimentLog:
    seed: int
    config: RunConfig
    budget_ticks: int
    records: List[MeasurementRecord]

    @property
    def total_ticks(self) -> int:
        return sum(r.ticks_used for r in self.records)

    @property
    def samples_with_data(self) -> int:
        return sum(1 for r in self.records if r.events > 0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "config": config_to_dict(self.config),
            "budget_ticks": self.budget_ticks,
            "total_ticks": self.total_ticks,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def make_operator(cfg: RunConfig) -> OperatorState:
    return OperatorState(
        fa=cfg.fa,
        nd=cfg.nd,
        switch_cost_per_unit=cfg.switch_cost_per_unit,
        button_positions={Command.LEFT: cfg.button_left, Command.RIGHT: cfg.button_right},
        motor_step=cfg.beam_step,
    )


def run_experiment(plan: ExperimentPlan, cfg: RunConfig, seed: int) -> ExperimentLog:
    """Measure every sample in plan order on one shared clock and world."""
    if not plan.samples:
        raise ValueError("plan has no samples")
    rng = random.Random(seed)
    walk = WalkParams(cfg.walk_sigma, cfg.beam_step)
    noise = NoiseModel(cfg.sigma0, cfg.misalign_gain, cfg.mu)
    world = WorldState()
    op = make_operator(cfg)
    # settle the operator/stream dynamics before beam time starts
    for _ in range(cfg.warmup_ticks):
        chase(world, op, walk, rng)

    agents = AgentBundle(op, cfg.se_window, cfg.min_events, meso_abort=cfg.adjust_error)
    clock = SimClock(0, plan.budget_ticks if cfg.cutoff_time else None)
    state = ManagerState(cfg.adjust_error, cfg.cutoff_time, plan.samples[0].nominal_te, plan.budget_ticks)
    records: List[MeasurementRecord] = []
    cursor = 0
    while (sample := next_sample(plan, cursor)) is not None:
        if cursor > 0:
            state.te_current = adjust_te(state, plan.samples[cursor:], cfg.sigma0)
        rec = run_measurement(
            sample.id,
            sample.pq,
            state.te_current,
            world,
            clock,
            agents,
            walk,
            noise,
            rng,
            samples_left=len(plan.samples) - cursor,
        )
        state.record(rec)
        records.append(rec)
        cursor += 1
    return ExperimentLog(seed, cfg, plan.budget_ticks, records)
