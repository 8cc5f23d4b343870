import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pandorabox import DiscreteDist, JointVC, expect, expect_excess, max_tail, tail, trial_stream

TWO_POINT = DiscreteDist([(0.0, 0.5), (2.0, 0.5)])
UNIFORM4 = DiscreteDist([(1, 0.25), (2, 0.25), (3, 0.25), (4, 0.25)])


@st.composite
def dists(draw, max_atoms=5, lo=-4, hi=12):
    k = draw(st.integers(1, max_atoms))
    values = draw(
        st.lists(st.integers(lo * 4, hi * 4), min_size=k, max_size=k, unique=True)
    )
    weights = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
    total = sum(weights)
    return DiscreteDist([(v / 4.0, w / total) for v, w in zip(values, weights)])


def test_expect_examples():
    assert expect(TWO_POINT) == 1.0
    assert expect(DiscreteDist([(5.0, 1.0)])) == 5.0
    assert expect(UNIFORM4) == 2.5


def test_expect_excess_examples():
    assert expect_excess(TWO_POINT, 1.0) == 0.5
    assert expect_excess(TWO_POINT, 2.0) == 0.0
    assert expect_excess(TWO_POINT, -1.0) == 2.0


def test_tail_examples():
    assert tail(UNIFORM4, 3.0) == 0.5
    assert tail(DiscreteDist([(5.0, 1.0)]), 5.0) == 1.0
    assert tail(DiscreteDist([(5.0, 1.0)]), 5.1) == 0.0


def test_max_tail_examples():
    coin = DiscreteDist([(0.0, 0.5), (1.0, 0.5)])
    assert max_tail([coin, coin], 1.0) == pytest.approx(0.75, abs=1e-15)
    assert max_tail([UNIFORM4], 2.5) == tail(UNIFORM4, 2.5)
    assert max_tail([], 0.0) == 0.0


@given(dists(), st.integers(-20, 60))
def test_expect_excess_shape(d, yq):
    y = yq / 4.0
    ee = d.expect_excess(y)
    assert ee >= d.expect_excess(y + 0.25) - 1e-12  # nonincreasing
    if y <= d.min_value:
        assert ee == pytest.approx(d.expect() - y, abs=1e-12)
    if y >= d.max_value:
        assert ee == 0.0


@given(dists(max_atoms=4, lo=0), st.integers(1, 6), st.integers(0, 40))
def test_max_tail_iid_identity(d, n, yq):
    y = yq / 4.0
    t = d.tail(y)
    assert max_tail([d] * n, y) == pytest.approx(1.0 - (1.0 - t) ** n, abs=1e-12)


@given(dists())
def test_duplicate_merge_preserves_moments(d):
    # split every atom in two and let the constructor re-merge
    split = []
    for v, p in d.atoms:
        split.append((v, p / 2))
        split.append((v, p / 2))
    merged = DiscreteDist(split)
    assert merged.values == d.values
    for (_, pm), (_, pd) in zip(merged.atoms, d.atoms):
        assert pm == pytest.approx(pd, abs=1e-15)
    assert merged.expect() == pytest.approx(d.expect(), abs=1e-12)
    for v, _ in d.atoms:
        assert merged.expect_excess(v - 0.1) == pytest.approx(
            d.expect_excess(v - 0.1), abs=1e-12
        )


def test_validation_errors():
    with pytest.raises(ValueError):
        DiscreteDist([])
    with pytest.raises(ValueError):
        DiscreteDist([(0.0, 0.5), (1.0, 0.4)])  # sums to 0.9
    with pytest.raises(ValueError):
        DiscreteDist([(math.inf, 1.0)])
    with pytest.raises(ValueError):
        DiscreteDist([(0.0, 0.0), (1.0, 1.0)])
    with pytest.raises(ValueError):
        JointVC([(1.0, -0.5, 1.0)])  # negative cost
    with pytest.raises(ValueError):
        JointVC([(1.0, 0.5, 0.9)])


def test_sample_point_mass_deterministic():
    pm = DiscreteDist([(5.0, 1.0)])
    assert pm.sample(trial_stream(123, 0)) == 5.0


def test_sample_empirical_mean():
    rng = trial_stream(42, 0)
    draws = TWO_POINT.sample_many(rng, 1_000_000)
    # CLT: sd of the mean is 1/1000, so 0.01 is a 10-sigma envelope
    assert abs(draws.mean() - 1.0) < 0.01


def test_sample_seed_determinism():
    a = [TWO_POINT.sample(trial_stream(7, 3)) for _ in range(1)]
    seq1 = TWO_POINT.sample_many(trial_stream(7, 3), 100)
    seq2 = TWO_POINT.sample_many(trial_stream(7, 3), 100)
    assert np.array_equal(seq1, seq2)
    assert seq1[0] == a[0]
    # different trial index changes the stream
    assert not np.array_equal(seq1, TWO_POINT.sample_many(trial_stream(7, 4), 100))


def test_joint_marginal_and_cost():
    j = JointVC([(2.0, 1.0, 0.5), (0.0, 1.0, 0.5)])
    assert j.value_marginal().atoms == ((0.0, 0.5), (2.0, 0.5))
    assert j.expected_cost() == 1.0

    j2 = JointVC([(3.0, 0.0, 1.0)])
    assert j2.value_marginal().atoms == ((3.0, 1.0),)
    assert j2.expected_cost() == 0.0

    corr = JointVC([(4.0, 2.0, 0.5), (0.0, 0.0, 0.5)])
    assert corr.expected_cost() == 1.0
    assert corr.value_marginal().atoms == ((0.0, 0.5), (4.0, 0.5))


def test_trial_stream_contract():
    with pytest.raises(ValueError):
        trial_stream(-1, 0)
    r1 = trial_stream(0, 0).random(5)
    r2 = trial_stream(0, 0).random(5)
    assert np.array_equal(r1, r2)
