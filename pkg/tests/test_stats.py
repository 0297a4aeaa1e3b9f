import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opsim.stats import StatAccumulator


def batch(xs):
    """Two-pass oracle: (mean, sample variance, SE)."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    mean = xs.sum() / n
    var = ((xs - mean) ** 2).sum() / (n - 1)
    return mean, var, math.sqrt(var / n)


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


def test_single_point():
    acc = StatAccumulator().update(5.0)
    assert (acc.n, acc.mean, acc.m2) == (1, 5.0, 0.0)
    assert acc.stderr() == math.inf


def test_constant_sequence():
    acc = StatAccumulator.from_values([1, 1, 1, 1])
    assert acc.mean == 1 and acc.m2 == 0
    assert acc.stderr() == 0.0


def test_two_points_by_hand():
    acc = StatAccumulator.from_values([0, 2])
    assert acc.mean == 1
    assert acc.variance == 2
    assert acc.stderr() == pytest.approx(1.0, rel=1e-15)


def test_empty_invariants():
    acc = StatAccumulator()
    assert acc.mean == 0 and acc.m2 == 0
    assert math.isnan(acc.variance)
    assert acc.stderr() == math.inf


@pytest.mark.parametrize("c,n", [(3.7, 2), (-1e6, 17), (0.0, 100)])
def test_constant_has_zero_se(c, n):
    assert StatAccumulator.from_values([c] * n).stderr() == 0.0


def test_merge_identity_and_batch():
    a = StatAccumulator.from_values([1, 2])
    assert a.merge(StatAccumulator()) == a
    assert StatAccumulator().merge(a) == a
    m = a.merge(StatAccumulator.from_values([3, 4]))
    ref = StatAccumulator.from_values([1, 2, 3, 4])
    assert m.n == 4
    assert m.mean == pytest.approx(2.5, rel=1e-15)
    assert m.m2 == pytest.approx(5.0, rel=1e-12)
    assert m.m2 == pytest.approx(ref.m2, rel=1e-10)


@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
)
def test_merge_symmetric_mean(xs, ys):
    a, b = StatAccumulator.from_values(xs), StatAccumulator.from_values(ys)
    ab, ba = a.merge(b), b.merge(a)
    assert ab.n == ba.n
    assert ab.mean == pytest.approx(ba.mean, rel=1e-12, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=300), st.integers(0, 300))
def test_merge_equals_concatenation(xs, cut):
    cut = min(cut, len(xs))
    m = StatAccumulator.from_values(xs[:cut]).merge(StatAccumulator.from_values(xs[cut:]))
    whole = StatAccumulator.from_values(xs)
    assert m.n == whole.n
    assert m.mean == pytest.approx(whole.mean, rel=1e-10, abs=1e-9)
    assert m.m2 == pytest.approx(whole.m2, rel=1e-10, abs=1e-6)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-1e4, 1e4), min_size=2, max_size=400))
def test_streaming_matches_two_pass(xs):
    acc = StatAccumulator.from_values(xs)
    mean, var, se = batch(xs)
    assert acc.m2 >= 0
    assert acc.mean == pytest.approx(mean, rel=1e-10, abs=1e-9)
    assert acc.variance == pytest.approx(var, rel=1e-9, abs=1e-9)
    assert acc.stderr() == pytest.approx(se, rel=1e-9, abs=1e-9)


def test_se_halves_when_n_quadruples():
    # sqrt(n) law: E[SE(4m)] / E[SE(m)] = 1/2 up to the small-sample bias in s
    rng = random.Random(11)
    m = 200
    ratios = []
    for _ in range(200):
        acc = StatAccumulator()
        for _ in range(m):
            acc.update(rng.gauss(0, 3))
        se_m = acc.stderr()
        for _ in range(3 * m):
            acc.update(rng.gauss(0, 3))
        ratios.append(acc.stderr() / se_m)
    assert sum(ratios) / len(ratios) == pytest.approx(0.5, rel=0.10)
