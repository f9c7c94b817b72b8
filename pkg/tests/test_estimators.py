import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from bridgelab.estimators import (InsufficientDataError, box_count_dimension, box_counts,
                                  ks_two_sample, tail_exponent)
from bridgelab.experiments import (avoids_gap, bridge_dimension, dimension_scales,
                                   first_large_segment, segment_heights, spawn_seeds, tail_grid)
from bridgelab.sle import sample_sle_trace
from bridgelab.types import GapLine, PolylineCurve


def test_uniform_points_have_dimension_one():
    x = np.random.default_rng(0).random(10000)
    fit = box_count_dimension(x, np.geomspace(1e-3, 0.1, 6))
    assert fit.exponent == pytest.approx(1.0, abs=0.05)
    assert 0 <= fit.r_squared <= 1


def test_cantor_endpoints():
    x = oracles.cantor_endpoints(8)
    fit = box_count_dimension(x, np.geomspace(1e-3, 0.1, 8))
    assert fit.exponent == pytest.approx(math.log(2) / math.log(3), abs=0.03)


def test_box_count_guards():
    x = np.random.default_rng(1).random(500)
    with pytest.raises(InsufficientDataError):
        box_count_dimension(x, [0.1, 0.05, 0.02])
    with pytest.raises(InsufficientDataError):
        box_count_dimension(x, np.geomspace(0.01, 0.2, 6))
    with pytest.raises(InsufficientDataError):
        box_count_dimension(x[:50], np.geomspace(1e-3, 0.1, 6))
    fit = box_count_dimension(x[:50], np.geomspace(1e-3, 0.1, 6), strict=False)
    assert "few_values" in fit.flags
    flat = box_count_dimension(np.full(200, 0.3), np.geomspace(1e-3, 0.1, 6))
    assert flat.exponent == 0 and "degenerate" in flat.flags
    with pytest.raises(ValueError):
        box_count_dimension(x, [-1, 0.1, 0.01, 0.001])


def test_box_counts_in_the_plane():
    z = np.array([0, 0.5, 1j, 1 + 1j])
    assert box_counts(z, [0.4, 2.0]).tolist() == [4, 1]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.125, 0.5, 4.0, 1024.0]))
def test_box_dimension_is_scale_equivariant(seed, r):
    x = np.random.default_rng(seed).random(300) ** 3
    sc = np.geomspace(1e-3, 0.1, 5)
    a = box_count_dimension(x, sc)
    b = box_count_dimension(r * x, r * sc)
    assert a.exponent == pytest.approx(b.exponent, abs=1e-12)


def test_pareto_tail():
    x = oracles.pareto(0.75, 20000, np.random.default_rng(2))
    fit = tail_exponent(x, np.geomspace(2, 200, 8))
    assert fit.exponent == pytest.approx(0.75, abs=0.05)
    assert fit.flags == []


def test_exponential_tail_is_flagged():
    x = np.random.default_rng(3).exponential(1.0, 5000)
    fit = tail_exponent(x, np.geomspace(0.1, 6, 8))
    assert "curved" in fit.flags


def test_tail_grid_is_trimmed_with_warning():
    x = oracles.pareto(0.75, 1000, np.random.default_rng(4))
    with pytest.warns(UserWarning):
        fit = tail_exponent(x, np.geomspace(1.5, 1e6, 10))
    assert "trimmed" in fit.flags and fit.scale_range[1] < 1e6
    with pytest.raises(ValueError):
        tail_exponent([-1.0, 2.0], [1.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_tail_exponent_scale_invariant(seed, r):
    x = oracles.pareto(0.8, 800, np.random.default_rng(seed))
    L = np.geomspace(1.5, 30, 6)
    a = tail_exponent(x, L)
    b = tail_exponent(r * x, r * L)
    assert a.exponent == pytest.approx(b.exponent, abs=1e-9)


def test_ks_basics():
    a = np.arange(10.0)
    assert ks_two_sample(a, a)[0] == 0
    assert ks_two_sample(a, a + 100)[0] == 1
    with pytest.raises(ValueError):
        ks_two_sample([], a)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40),
       st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_ks_symmetric_and_bounded(a, b):
    d1, p1 = ks_two_sample(a, b)
    d2, p2 = ks_two_sample(b, a)
    assert 0 <= d1 <= 1 and d1 == pytest.approx(d2)
    assert p1 == pytest.approx(p2)


def test_ks_calibration_on_uniforms():
    rng = np.random.default_rng(5)
    passes = sum(ks_two_sample(rng.random(1000), rng.random(1000))[1] > 0.01 for _ in range(10))
    assert passes >= 9


# ---------------------------------------------------------------- experiment helpers

def test_spawned_seeds_are_stable_and_distinct():
    a = spawn_seeds(3, 5)
    assert a == spawn_seeds(3, 5) and len(set(a)) == 5
    assert spawn_seeds(3, 8)[:5] == a


def test_gap_avoidance_rule():
    g = GapLine(2j, 0.2)
    through = PolylineCurve(points=[0, 1.9j, 2.1j, 3j], dt=1.0)
    outside = PolylineCurve(points=[0, 0.5 + 1.9j, 0.5 + 2.1j], dt=1.0)
    below = PolylineCurve(points=[0, 1j, 5 + 1.5j], dt=1.0)
    back = PolylineCurve(points=[0, 3j, 1 + 3j, 1 + 1j], dt=1.0)
    assert avoids_gap(through, g) and avoids_gap(below, g)
    assert not avoids_gap(outside, g) and not avoids_gap(back, g)


def test_dimension_scales_refuse_narrow_range():
    c = sample_sle_trace(8 / 3, 2000, 1e-3, seed=1)
    with pytest.raises(InsufficientDataError):
        dimension_scales(c, 0.05)
    line = PolylineCurve(points=1j * np.linspace(0, 1, 2001), dt=1e-6)
    s = dimension_scales(line, 0.001)
    assert len(s) >= 4 and math.log10(s[-1] / s[0]) >= 1.5
    # every height is a bridge height on a straight line
    assert bridge_dimension(line, 0.001).exponent == pytest.approx(1.0, abs=0.05)


def test_segment_heights_and_large_pieces():
    c = PolylineCurve(points=1j * np.array([0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10.0]), dt=1.0)
    assert segment_heights(c, 0.1).tolist() == [1.0, 1.0, 1.0, 1.0]
    hook = PolylineCurve(points=np.array([0, 0.25j, 0.5j, 1 + 2j, 1 + 1.5j, 2 + 1.8j]), dt=1.0)
    # cuts at 0.25 and 0.5; the remainder starts low and never finishes
    assert segment_heights(hook, 0.1).tolist() == [0.25, np.inf]
    assert first_large_segment(c, 0.5, 3.0) == 1.0
    assert first_large_segment(c, 2.0, 3.0) == 10.0
    assert tail_grid(0.01, 2.0)[0] == pytest.approx(0.005)
