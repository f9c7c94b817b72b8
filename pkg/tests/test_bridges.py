import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgelab.bridges import (NAIVE_LIMIT, RenewalError, concat_segments, cut_indices,
                               decompose_curve, find_bridge_points, find_bridge_points_naive,
                               first_cut_height, renewal_split, scale_curve)
from bridgelab.sle import sample_sle_trace
from bridgelab.types import PolylineCurve


def curve(pts, dt=1.0):
    return PolylineCurve(points=np.asarray(pts, dtype=complex), dt=dt)


@st.composite
def random_curve(draw):
    n = draw(st.integers(2, 60))
    lattice = draw(st.booleans())
    if lattice:
        # integer steps produce flat segments and tied heights
        steps = draw(st.lists(st.sampled_from([1, 1j, -1, -1j, 1j, 1j]), min_size=n - 1, max_size=n - 1))
        pts = np.concatenate([[0], np.cumsum(steps)])
    else:
        rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
        inc = rng.standard_normal(n - 1) + 1j * (rng.standard_normal(n - 1) + 0.3)
        pts = np.concatenate([[0], np.cumsum(inc)])
    return curve(pts)


@settings(max_examples=300, deadline=None)
@given(random_curve(), st.floats(0.05, 3.0))
def test_sweep_matches_naive(c, eps):
    a = find_bridge_points(c, eps)
    b = find_bridge_points_naive(c, eps)
    assert np.array_equal(a.time_indices, b.time_indices)
    assert np.array_equal(a.heights, b.heights)


@settings(max_examples=150, deadline=None)
@given(random_curve(), st.floats(0.05, 1.0), st.floats(1.0, 4.0))
def test_bridge_sets_grow_with_eps(c, eps, factor):
    small = set(find_bridge_points(c, eps).heights.tolist())
    big = set(find_bridge_points(c, eps * factor).heights.tolist())
    assert small <= big


@settings(max_examples=150, deadline=None)
@given(random_curve(), st.floats(0.05, 1.0), st.sampled_from([0.25, 0.5, 2.0, 8.0]))
def test_detection_is_scale_equivariant(c, eps, r):
    a = find_bridge_points(c, eps)
    b = find_bridge_points(scale_curve(c, r), r * eps)
    assert np.array_equal(a.time_indices, b.time_indices)
    assert np.array_equal(r * a.heights, b.heights)


@settings(max_examples=150, deadline=None)
@given(random_curve(), st.floats(0.01, 1.0))
def test_exact_cuts_are_bridges_at_every_eps(c, eps):
    cuts = cut_indices(c)
    cuts = cuts[c.im[cuts] > 0]
    found = set(find_bridge_points(c, eps).heights.tolist())
    assert set(c.im[cuts].tolist()) <= found


@settings(max_examples=150, deadline=None)
@given(random_curve(), st.floats(0.01, 1.0))
def test_decompose_round_trip(c, eps):
    segs = decompose_curve(c, eps)
    back = concat_segments(segs)
    assert np.array_equal(back.points, c.points)
    for s in segs:
        assert s.curve.points[0] == 0
    for s in segs[:-1]:
        assert not s.flags
    # consecutive pieces share their end vertex
    assert all(a.end_index == b.start_index for a, b in zip(segs, segs[1:]))


def test_round_trip_is_exact_on_sle():
    c = sample_sle_trace(8 / 3, 3000, 1e-3, seed=7)
    back = concat_segments(decompose_curve(c, 0.01))
    assert np.array_equal(back.points, c.points)
    assert np.allclose(back.times, c.times, rtol=0, atol=1e-12)


def test_vertical_line_is_all_bridge():
    c = curve(1j * np.arange(6))
    b = find_bridge_points(c, 0.1)
    assert b.time_indices.tolist() == [1, 2, 3, 4, 5]
    segs = decompose_curve(c, 0.1)
    assert [s.height for s in segs] == [1.0] * 5


def test_hook_hides_the_lower_heights():
    # up 2, right, down 1, right, up 2: the line y = 1 is crossed three times
    c = curve([0, 1j, 2j, 1 + 2j, 1 + 1j, 2 + 1j, 2 + 3j])
    b = find_bridge_points(c, 0.5)
    assert 1.0 not in b.heights.tolist()
    assert 3.0 in b.heights.tolist()
    assert find_bridge_points(c, 5.0).heights.tolist() == [1.0, 2.0, 3.0]
    segs = decompose_curve(c, 0.5)
    assert segs[0].end_index == 6 and segs[0].height == 3.0


def test_flags_for_tail_and_no_bridge():
    c = curve([0, 1j, 2j, 2 + 2j, 2 + 1.5j])
    segs = decompose_curve(c, 0.1)
    assert segs[-1].flags == ["tail"]
    down = curve([0, -1j, -2j])
    assert decompose_curve(down, 0.1)[0].flags == ["no_bridge"]
    with pytest.raises(ValueError):
        decompose_curve(c, 0.0)
    with pytest.raises(ValueError):
        find_bridge_points(c, -1.0)


def test_naive_limit():
    c = curve(1j * np.arange(NAIVE_LIMIT + 1))
    with pytest.raises(ValueError):
        find_bridge_points_naive(c, 0.1)


def test_renewal_split_round_trip():
    c = sample_sle_trace(8 / 3, 2000, 1e-3, seed=3)
    past, fut = renewal_split(c, 0.5, 0.01)
    assert past.im[-1] >= 0.5 and fut.points[0] == 0
    assert np.all(fut.im[1:] > 0)
    assert np.allclose(concat_segments([past, fut]).points, c.points, rtol=0, atol=1e-14)
    assert first_cut_height(c, 0.5) == past.im[-1]
    with pytest.raises(RenewalError):
        renewal_split(c, 100.0, 0.01)
    assert first_cut_height(c, 100.0) == float("inf")


def test_scale_curve():
    c = curve([0, 1j, 1 + 2j], dt=0.01)
    s = scale_curve(c, 3.0)
    assert np.allclose(s.points, 3 * c.points) and s.dt == pytest.approx(0.09)
    with pytest.raises(ValueError):
        scale_curve(c, 0.0)


def test_sweep_handles_long_sle_trace():
    c = sample_sle_trace(8 / 3, 20000, 1e-4, seed=1)
    b = find_bridge_points(c, 0.01)
    assert len(b) > 10
    assert np.all(np.diff(b.heights) > 0)
    sub = PolylineCurve(c.points[:3000], c.dt)
    assert np.array_equal(find_bridge_points(sub, 0.01).time_indices,
                          find_bridge_points_naive(sub, 0.01).time_indices)
