"""One measurement on one sample: the per-tick loop that drives every agent."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Dict

from .agents import (
    OperatorState,
    SEHistory,
    Termination,
    Verdict,
    analyst_update,
    manager_meso_decide,
    operator_act,
    operator_observe,
)
from .stats import StatAccumulator
from .world import (
    Command,
    NoiseModel,
    SimClock,
    WalkParams,
    WorldState,
    generate_event,
    step_beam,
    step_stream,
)


class ClockExhaustedBeforeFirstEvent(RuntimeError):
    """Raised (only when ``allow_empty=False``) if a sample received no data."""


@dataclass(slots=True)
class AgentBundle:
    operator: OperatorState
    se_window: int = 50
    min_events: int = 10
    meso_abort: bool = True


@dataclass(slots=True)
class MeasurementRecord:
    sample_id: str
    pq: float
    target_te: float
    start_tick: int
    ticks_used: int
    events: int
    final_se: float
    final_mean: float
    reason: Termination
    mean_misalignment: float
    moves: int

    @property
    def reached_te(self) -> bool:
        return self.reason is Termination.REACHED_TE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "pq": self.pq,
            "target_te": self.target_te,
            "start_tick": self.start_tick,
            "ticks_used": self.ticks_used,
            "events": self.events,
            "final_se": self.final_se,
            "final_mean": self.final_mean,
            "reason": self.reason.value,
            "mean_misalignment": self.mean_misalignment,
            "moves": self.moves,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> MeasurementRecord:
        d = dict(d)
        d["reason"] = Termination(d["reason"])
        return cls(**d)


def chase(
    world: WorldState, op: OperatorState, walk: WalkParams, rng: random.Random
) -> Command:
    """One micro-scale tick: stream moves, operator perceives and acts, beam moves."""
    step_stream(world, walk, rng)
    operator_observe(op, world)
    cmd = operator_act(op, world) if op.noticing_countdown == 0 else Command.HOLD
    step_beam(world, cmd, walk)
    return cmd


def run_measurement(
    sample_id: str,
    pq: float,
    te: float,
    world: WorldState,
    clock: SimClock,
    agents: AgentBundle,
    walk: WalkParams,
    noise: NoiseModel,
    rng: random.Random,
    samples_left: int = 1,
    allow_empty: bool = True,
) -> MeasurementRecord:
    """Take data on one sample until the target error, an abort, or the end of beam time.

    ``samples_left`` counts samples not yet measured including this one and
    sets the equal share of remaining beam time the manager allows it.
    """
    if not pq > 0:
        raise ValueError(f"pq must be > 0, got {pq!r}")
    if not te > 0:
        raise ValueError(f"te must be > 0, got {te!r}")
    op = agents.operator
    min_events = agents.min_events
    meso = agents.meso_abort and clock.budget_ticks is not None
    acc = StatAccumulator()
    history = SEHistory(agents.se_window)
    start = clock.tick
    misalignment_sum = 0.0
    moves = 0
    hold = Command.HOLD

    while True:
        if clock.exhausted:
            reason = Termination.CLOCK_EXHAUSTED
            break
        if chase(world, op, walk, rng) is not hold:
            moves += 1
        datum = generate_event(world, noise, pq, rng, clock.tick)
        acc.update(datum.value)
        misalignment_sum += datum.misalignment_at_emit
        tick = clock.advance()
        report = analyst_update(history, acc, tick)
        if acc.n >= min_events and report.se <= te:
            reason = Termination.REACHED_TE
            break
        if meso:
            share = clock.remaining / samples_left
            decision = manager_meso_decide(report, te, share, min_events)
            if decision.verdict is Verdict.ABORT:
                reason = decision.reason
                break

    if acc.n == 0 and not allow_empty:
        raise ClockExhaustedBeforeFirstEvent(f"sample {sample_id!r} received no data")
    return MeasurementRecord(
        sample_id=sample_id,
        pq=pq,
        target_te=te,
        start_tick=start,
        ticks_used=clock.tick - start,
        events=acc.n,
        final_se=acc.stderr(),
        final_mean=acc.mean if acc.n else math.nan,
        reason=reason,
        mean_misalignment=misalignment_sum / acc.n if acc.n else math.nan,
        moves=moves,
    )
