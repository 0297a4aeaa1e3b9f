import random

import pytest

from opsim.config import RunConfig
from opsim.measurement import AgentBundle, chase, run_measurement
from opsim.planner import make_operator
from opsim.world import NoiseModel, SimClock, WalkParams, WorldState


def measure(pq, te, seed, cfg=None, budget=None, warmup=True, allow_empty=True, **agent_kw):
    """Run a single measurement on a fresh (optionally warmed-up) world."""
    cfg = cfg or RunConfig()
    rng = random.Random(seed)
    world, op = WorldState(), make_operator(cfg)
    walk = WalkParams(cfg.walk_sigma, cfg.beam_step)
    if warmup:
        for _ in range(cfg.warmup_ticks):
            chase(world, op, walk, rng)
    agents = AgentBundle(op, cfg.se_window, cfg.min_events, **agent_kw)
    return run_measurement(
        "s", pq, te, world, SimClock(0, budget), agents, walk,
        NoiseModel(cfg.sigma0, cfg.misalign_gain, cfg.mu), rng, allow_empty=allow_empty,
    )


@pytest.fixture
def measure_fn():
    return measure


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(cid, title, passed, detail=""):
        _ACCEPTANCE.append((cid, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, title, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {cid} {title}" + (f" -- {detail}" if detail else ""))
