import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opsim.agents import (
    AnalystReport,
    OperatorState,
    SEHistory,
    Termination,
    Verdict,
    analyst_update,
    manager_meso_decide,
    operator_act,
    operator_observe,
)
from opsim.measurement import chase
from opsim.stats import StatAccumulator
from opsim.world import Command, WalkParams, WorldState


def test_below_acuity_stays_idle():
    op = OperatorState(fa=0.1, nd=1)
    operator_observe(op, WorldState(0.05, 0.0))
    assert op.idle


def test_noticing_delay_countdown():
    op = OperatorState(fa=0.1, nd=5)
    w = WorldState(0.5, 0.0)
    operator_observe(op, w)
    assert op.noticing_countdown == 5
    for _ in range(4):
        operator_observe(op, w)
        assert not op.ready
    operator_observe(op, w)
    assert op.ready


def test_zero_delay_ready_same_tick():
    op = OperatorState(fa=0.1, nd=0)
    operator_observe(op, WorldState(0.2, 0.0))
    assert op.ready


def test_noticing_cancelled_when_misalignment_recedes():
    op = OperatorState(fa=0.1, nd=5)
    operator_observe(op, WorldState(0.5, 0.0))
    operator_observe(op, WorldState(0.05, 0.0))
    assert op.idle


def test_act_no_switch_needed():
    op = OperatorState(fa=0.1, nd=0, current_button=Command.RIGHT)
    w = WorldState(stream_pos=0.5, beam_pos=0.0)
    operator_observe(op, w)
    assert operator_act(op, w) is Command.RIGHT


def test_act_switch_cost_holds_then_moves():
    op = OperatorState(fa=0.1, nd=0, switch_cost_per_unit=2, current_button=Command.RIGHT)
    w = WorldState(stream_pos=-0.5, beam_pos=0.0)
    operator_observe(op, w)
    cmds = [operator_act(op, w) for _ in range(3)]
    assert cmds == [Command.HOLD, Command.HOLD, Command.LEFT]


def test_act_acuity_floor_returns_to_idle():
    op = OperatorState(fa=0.1, nd=0, noticing_countdown=0)
    w = WorldState(stream_pos=0.04, beam_pos=0.0)
    assert operator_act(op, w) is Command.HOLD
    assert op.idle


@pytest.mark.parametrize("nd", [0, 1, 5, 10])
@pytest.mark.parametrize("start_button,switch", [(Command.LEFT, 0), (Command.RIGHT, 2)])
def test_latency_frozen_stream(nd, start_button, switch):
    # stream frozen; beam drifts away by hand until misalignment first reaches fa
    op = OperatorState(fa=0.1, nd=nd, switch_cost_per_unit=2, current_button=start_button)
    w = WorldState(stream_pos=0.0, beam_pos=0.0)
    walk = WalkParams(walk_sigma=0.0, beam_step=0.1)
    rng = random.Random(0)
    first_at, first_move = None, None
    for t in range(40):
        if t < 3:
            w.beam_pos = 0.04 * (t + 1)  # 0.04, 0.08, 0.12 -> reaches fa at t = 2
        if first_at is None and w.misalignment >= op.fa:
            first_at = t
        cmd = chase(w, op, walk, rng)
        if cmd is not Command.HOLD:
            first_move = t
            assert cmd is Command.LEFT
            break
    assert first_at == 2
    assert first_move - first_at == nd + switch


@given(
    fa=st.floats(0.01, 2.0),
    stream=st.floats(-5, 5),
    beam=st.floats(-5, 5),
    step=st.floats(0.01, 1.0),
)
def test_moves_reduce_misalignment_and_respect_acuity(fa, stream, beam, step):
    op = OperatorState(fa=fa, nd=0, motor_step=step, switch_cost_per_unit=0)
    w = WorldState(stream, beam)
    operator_observe(op, w)
    if not op.ready:
        return
    before = w.misalignment
    cmd = operator_act(op, w)
    if cmd is Command.HOLD:
        return
    assert before >= fa
    w.beam_pos += step if cmd is Command.RIGHT else -step
    assert w.misalignment < before


def test_smaller_fa_tracks_closer():
    def mean_misalignment(fa, seed):
        rng = random.Random(seed)
        w, op, walk = WorldState(), OperatorState(fa=fa, nd=1), WalkParams()
        total = 0.0
        for _ in range(3000):
            chase(w, op, walk, rng)
            total += w.misalignment
        return total / 3000

    fine = [mean_misalignment(0.1, s) for s in range(30)]
    coarse = [mean_misalignment(1.0, s) for s in range(30)]
    assert sum(fine) / 30 < sum(coarse) / 30


# analyst

def test_constant_se_has_zero_rate():
    h = SEHistory(5)
    for t in range(5):
        h.push(t, 0.01)
    assert h.slope() == pytest.approx(0.0, abs=1e-18)


def test_decreasing_series_negative_rate():
    h = SEHistory(50)
    for t in range(100, 201):
        h.push(t, 1 / math.sqrt(t))
    assert h.slope() < 0


def test_two_point_slope():
    h = SEHistory(2)
    h.push(0, 0.01)
    h.push(100, 0.008)
    assert h.slope() == pytest.approx(-2e-5, rel=1e-9)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=200), st.integers(2, 60), st.integers(0, 10**6))
def test_sliding_slope_matches_polyfit(values, window, start):
    h = SEHistory(window)
    for i, v in enumerate(values):
        h.push(start + i, v)
    tail = values[-window:]
    ts = np.arange(len(values))[-window:]
    if len(tail) < 2:
        return
    ref = np.polyfit(ts, tail, 1)[0]
    assert h.slope() == pytest.approx(ref, abs=1e-9)


def test_analyst_update_reports():
    h, acc = SEHistory(3), StatAccumulator()
    acc.update(1.0)
    r = analyst_update(h, acc, 1)
    assert r.n == 1 and r.se == math.inf and r.se_rate is None and r.observations == 0
    acc.update(3.0)
    r = analyst_update(h, acc, 2)
    assert r.se == pytest.approx(1.0) and r.se_rate is None
    acc.update(2.0)
    r = analyst_update(h, acc, 3)
    assert r.se_rate is not None and r.se_rate < 0


def _report(se, rate, window=50, n=1000, observations=None, stalled=0):
    return AnalystReport(n, se, rate, window, window if observations is None else observations, stalled)


def test_meso_continue_when_improving_with_time():
    d = manager_meso_decide(_report(0.002, -1e-6), 0.001, 1e9)
    assert d.verdict is Verdict.CONTINUE and d.reason is None


def test_meso_projected_overrun():
    d = manager_meso_decide(_report(0.002, -1e-6), 0.001, 500)
    assert d == (Verdict.ABORT, Termination.PROJECTED_OVERRUN)
    # (0.002 - 0.001) / 1e-6 = 1000 ticks
    assert manager_meso_decide(_report(0.002, -1e-6), 0.001, 1001).verdict is Verdict.CONTINUE


def test_meso_no_improvement_needs_full_window():
    d = manager_meso_decide(_report(0.002, 1e-7, stalled=50), 0.001, 1e9)
    assert d == (Verdict.ABORT, Termination.NO_IMPROVEMENT)
    assert manager_meso_decide(_report(0.002, 1e-7, stalled=49), 0.001, 1e9).verdict is Verdict.CONTINUE


def test_meso_waits_for_full_window():
    d = manager_meso_decide(_report(0.002, -1e-6, observations=10), 0.001, 1)
    assert d.verdict is Verdict.CONTINUE


def test_abort_always_has_reason():
    for rate in (-1e-3, -1e-9, 0.0, 1e-3):
        for remaining in (0, 10, math.inf):
            d = manager_meso_decide(_report(0.01, rate, stalled=100), 0.001, remaining)
            assert (d.verdict is Verdict.ABORT) == (d.reason is not None)
