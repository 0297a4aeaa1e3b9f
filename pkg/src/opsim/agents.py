"""The three virtual roles, each a small state machine driven once per tick.

Operator (micro): notices misalignment above its acuity, waits out the
noticing delay, then steps the beam toward the stream, paying a busy cost
whenever it has to move to a different button.

Analyst (meso input): tracks the standard error and its trailing slope.

Manager (meso decision): decides whether the current measurement is worth
continuing given the slope and the time left for this sample.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional

from .stats import StatAccumulator
from .world import Command, WorldState


def _default_layout() -> Dict[Command, float]:
    return {Command.LEFT: 0.0, Command.RIGHT: 1.0}


@dataclass(slots=True)
class OperatorState:
    """Instrument operator.

    ``noticing_countdown`` is ``None`` while idle, a positive count while the
    operator is still noticing, and ``0`` once it is chasing the stream.
    ``motor_step`` is the beam step the operator knows each press produces;
    it is used to avoid presses that would overshoot past the stream.
    """

    fa: float
    nd: int
    switch_cost_per_unit: float = 2.0
    button_positions: Dict[Command, float] = field(default_factory=_default_layout)
    motor_step: float = 0.1
    current_button: Optional[Command] = None
    noticing_countdown: Optional[int] = None
    busy_ticks: int = 0

    def __post_init__(self) -> None:
        if not self.fa > 0:
            raise ValueError(f"fa must be > 0, got {self.fa!r}")
        if self.nd < 0:
            raise ValueError(f"nd must be >= 0, got {self.nd!r}")
        if self.switch_cost_per_unit < 0:
            raise ValueError("switch_cost_per_unit must be >= 0")

    @property
    def idle(self) -> bool:
        return self.noticing_countdown is None

    @property
    def ready(self) -> bool:
        return self.noticing_countdown == 0

    def switch_cost(self, target: Command) -> int:
        if self.current_button is None or self.current_button is target:
            return 0
        distance = abs(self.button_positions[target] - self.button_positions[self.current_button])
        return math.ceil(self.switch_cost_per_unit * distance)


def operator_observe(op: OperatorState, world: WorldState) -> OperatorState:
    m = world.misalignment
    countdown = op.noticing_countdown
    if countdown is None:
        if m >= op.fa:
            op.noticing_countdown = op.nd
    elif countdown > 0:
        if m < op.fa:
            op.noticing_countdown = None
        else:
            op.noticing_countdown = countdown - 1
    return op


def operator_act(op: OperatorState, world: WorldState) -> Command:
    """Emit this tick's command for a ready operator (mutates ``op``)."""
    if op.busy_ticks > 0:
        op.busy_ticks -= 1
        return Command.HOLD
    m = world.misalignment
    if m < op.fa or m <= op.motor_step / 2:
        op.noticing_countdown = None
        return Command.HOLD
    desired = Command.RIGHT if world.stream_pos > world.beam_pos else Command.LEFT
    cost = op.switch_cost(desired)
    op.current_button = desired
    if cost > 0:
        op.busy_ticks = cost - 1
        return Command.HOLD
    return desired


class SEHistory:
    """Trailing window of (tick, SE) pairs with an O(1) least-squares slope.

    Ticks are stored relative to the first pushed tick so the running sums
    stay small over long measurements.
    """

    __slots__ = ("window", "_points", "_origin", "_st", "_ss", "_stt", "_sts", "stalled")

    def __init__(self, window: int = 50) -> None:
        if window < 2:
            raise ValueError("window must be >= 2")
        self.window = window
        self._points: deque = deque()
        self._origin: Optional[int] = None
        self._st = self._ss = self._stt = self._sts = 0.0
        # consecutive reports with a non-negative slope
        self.stalled = 0

    def __len__(self) -> int:
        return len(self._points)

    @property
    def full(self) -> bool:
        return len(self._points) >= self.window

    def push(self, tick: int, se: float) -> None:
        if self._origin is None:
            self._origin = tick
        t = float(tick - self._origin)
        self._points.append((t, se))
        self._st += t
        self._ss += se
        self._stt += t * t
        self._sts += t * se
        if len(self._points) > self.window:
            t0, s0 = self._points.popleft()
            self._st -= t0
            self._ss -= s0
            self._stt -= t0 * t0
            self._sts -= t0 * s0

    def slope(self) -> Optional[float]:
        k = len(self._points)
        if k < 2:
            return None
        denom = k * self._stt - self._st * self._st
        if denom <= 0:
            return None
        return (k * self._sts - self._st * self._ss) / denom


@dataclass(frozen=True, slots=True)
class AnalystReport:
    n: int
    se: float
    se_rate: Optional[float]
    window: int
    observations: int = 0
    stalled_ticks: int = 0


def analyst_update(history: SEHistory, acc: StatAccumulator, tick: int) -> AnalystReport:
    se = acc.stderr()
    if math.isfinite(se):
        history.push(tick, se)
    rate = history.slope()
    if rate is not None and rate >= 0:
        history.stalled += 1
    else:
        history.stalled = 0
    return AnalystReport(acc.n, se, rate, history.window, len(history), history.stalled)


class Verdict(enum.Enum):
    CONTINUE = "continue"
    ABORT = "abort"


class Termination(str, enum.Enum):
    REACHED_TE = "reached_te"
    PROJECTED_OVERRUN = "projected_overrun"
    NO_IMPROVEMENT = "no_improvement"
    CLOCK_EXHAUSTED = "clock_exhausted"


class MesoDecision(NamedTuple):
    verdict: Verdict
    reason: Optional[Termination] = None


CONTINUE = MesoDecision(Verdict.CONTINUE)


def manager_meso_decide(
    report: AnalystReport, te: float, ticks_remaining: float, min_events: int = 2
) -> MesoDecision:
    """Continue or abort the running measurement.

    A rate is only trusted once the analyst's window is full. Improving
    measurements are aborted when the linear projection to ``te`` needs more
    ticks than remain for this sample; flat or worsening ones are aborted
    after a full window of consecutive non-negative slopes.
    """
    if te <= 0:
        raise ValueError("te must be > 0")
    rate = report.se_rate
    if rate is None or report.observations < report.window or report.se <= te:
        return CONTINUE
    if rate < 0:
        if (report.se - te) / -rate > ticks_remaining:
            return MesoDecision(Verdict.ABORT, Termination.PROJECTED_OVERRUN)
    elif report.stalled_ticks >= report.window and report.n >= min_events:
        return MesoDecision(Verdict.ABORT, Termination.NO_IMPROVEMENT)
    return CONTINUE
