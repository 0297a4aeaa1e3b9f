"""Physical substrate: clock, stream random walk, beam motion and datum generation."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import NamedTuple, Optional


class Command(enum.Enum):
    LEFT = "left"
    HOLD = "hold"
    RIGHT = "right"


@dataclass(slots=True)
class SimClock:
    """Abstract tick counter, optionally bounded by a beam-time budget."""

    tick: int = 0
    budget_ticks: Optional[int] = None

    @property
    def exhausted(self) -> bool:
        return self.budget_ticks is not None and self.tick >= self.budget_ticks

    @property
    def remaining(self) -> float:
        if self.budget_ticks is None:
            return math.inf
        return max(self.budget_ticks - self.tick, 0)

    def advance(self) -> int:
        self.tick += 1
        return self.tick


@dataclass(slots=True)
class WorldState:
    stream_pos: float = 0.0
    beam_pos: float = 0.0

    @property
    def misalignment(self) -> float:
        return abs(self.beam_pos - self.stream_pos)


@dataclass(frozen=True, slots=True)
class WalkParams:
    """Stream step scale and beam step size, both in position units.

    ``walk_sigma == 0`` is accepted and freezes the stream.
    """

    walk_sigma: float = 0.05
    beam_step: float = 0.1

    def __post_init__(self) -> None:
        if not self.walk_sigma >= 0:
            raise ValueError(f"walk_sigma must be >= 0, got {self.walk_sigma!r}")
        if not self.beam_step > 0:
            raise ValueError(f"beam_step must be > 0, got {self.beam_step!r}")


@dataclass(frozen=True, slots=True)
class NoiseModel:
    sigma0: float = 1.0
    misalign_gain: float = 2.0
    mu: float = 0.0

    def __post_init__(self) -> None:
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be > 0, got {self.sigma0!r}")
        if not self.misalign_gain >= 0:
            raise ValueError(f"misalign_gain must be >= 0, got {self.misalign_gain!r}")

    def sigma_eff(self, pq: float, misalignment: float) -> float:
        """Per-datum noise: ``(sigma0 / pq) * (1 + gain * misalignment)``."""
        return (self.sigma0 / pq) * (1.0 + self.misalign_gain * misalignment)


class Datum(NamedTuple):
    value: float
    at_tick: int
    misalignment_at_emit: float


def step_stream(world: WorldState, params: WalkParams, rng: random.Random) -> WorldState:
    """Advance the stream by one Gaussian increment (exactly one draw from ``rng``)."""
    world.stream_pos += rng.gauss(0.0, params.walk_sigma)
    return world


def step_beam(world: WorldState, command: Command, params: WalkParams) -> WorldState:
    if command is Command.RIGHT:
        world.beam_pos += params.beam_step
    elif command is Command.LEFT:
        world.beam_pos -= params.beam_step
    return world


def generate_event(
    world: WorldState, noise: NoiseModel, pq: float, rng: random.Random, tick: int = 0
) -> Datum:
    if not pq > 0:
        raise ValueError(f"pq must be > 0, got {pq!r}")
    m = world.misalignment
    value = rng.gauss(noise.mu, noise.sigma_eff(pq, m))
    return Datum(value, tick, m)
