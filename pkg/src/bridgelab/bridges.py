"""Bridge points of planar polylines and the decomposition they induce.

A vertex ``z_i`` (with ``Im z_i > 0``) is an eps-bridge point when every
segment meeting the horizontal line ``Im w = Im z_i`` meets it at a point with
``|Re w - Re z_i| < eps``.  Detection runs a sweep over vertex heights with two
Li Chao segment trees holding, for each height, the largest and smallest
crossing abscissa over all segments spanning it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .types import PolylineCurve

NAIVE_LIMIT = 5000


class RenewalError(RuntimeError):
    pass


@dataclass
class BridgeSet:
    points: np.ndarray
    heights: np.ndarray
    time_indices: np.ndarray
    eps: float

    def __len__(self):
        return len(self.heights)


@dataclass
class IrreducibleSegment:
    """A piece of a curve moved to start at 0.

    ``residual`` holds the rounding error of that move (exact, per vertex), so
    :func:`concat_segments` can put the piece back bit for bit.
    """

    curve: PolylineCurve
    height: float
    start_index: int
    end_index: int
    flags: list = field(default_factory=list)
    residual: np.ndarray | None = None


# ---------------------------------------------------------------- Li Chao sweep

@njit(cache=True, inline="always")
def _at(x0, y0, m, y):
    return x0 + (y - y0) * m


@njit(cache=True)
def _insert(tree_x0, tree_y0, tree_m, has, q, node, lo, hi, x0, y0, m):
    # push a line into the subtree at ``node`` spanning q[lo..hi], keeping the max
    while True:
        if not has[node]:
            tree_x0[node] = x0
            tree_y0[node] = y0
            tree_m[node] = m
            has[node] = True
            return
        mid = (lo + hi) // 2
        cx0, cy0, cm = tree_x0[node], tree_y0[node], tree_m[node]
        new_mid = _at(x0, y0, m, q[mid])
        old_mid = _at(cx0, cy0, cm, q[mid])
        if new_mid > old_mid:
            tree_x0[node], tree_y0[node], tree_m[node] = x0, y0, m
            x0, y0, m = cx0, cy0, cm
        if lo == hi:
            return
        # the loser can only win on one side of mid
        if _at(x0, y0, m, q[lo]) > _at(tree_x0[node], tree_y0[node], tree_m[node], q[lo]):
            node, hi = 2 * node, mid
        elif _at(x0, y0, m, q[hi]) > _at(tree_x0[node], tree_y0[node], tree_m[node], q[hi]):
            node, lo = 2 * node + 1, mid + 1
        else:
            return


@njit(cache=True)
def _envelope(q, seg_x0, seg_y0, seg_m, seg_a, seg_b, sign):
    """For each query height q[k], max over segments with a <= k < b of sign * x(q[k])."""
    nq = q.shape[0]
    size = 1
    while size < nq:
        size *= 2
    tx0 = np.zeros(2 * size)
    ty0 = np.zeros(2 * size)
    tm = np.zeros(2 * size)
    has = np.zeros(2 * size, dtype=np.bool_)
    stack_node = np.empty(128, dtype=np.int64)
    stack_lo = np.empty(128, dtype=np.int64)
    stack_hi = np.empty(128, dtype=np.int64)
    for s in range(seg_x0.shape[0]):
        a, b = seg_a[s], seg_b[s] - 1
        if a > b:
            continue
        x0, y0, m = sign * seg_x0[s], seg_y0[s], sign * seg_m[s]
        top = 0
        stack_node[0], stack_lo[0], stack_hi[0] = 1, 0, nq - 1
        top = 1
        while top > 0:
            top -= 1
            node, lo, hi = stack_node[top], stack_lo[top], stack_hi[top]
            if b < lo or hi < a:
                continue
            if a <= lo and hi <= b:
                _insert(tx0, ty0, tm, has, q, node, lo, hi, x0, y0, m)
                continue
            mid = (lo + hi) // 2
            stack_node[top], stack_lo[top], stack_hi[top] = 2 * node, lo, mid
            stack_node[top + 1], stack_lo[top + 1], stack_hi[top + 1] = 2 * node + 1, mid + 1, hi
            top += 2
    out = np.full(nq, -np.inf)
    for k in range(nq):
        node, lo, hi = 1, 0, nq - 1
        best = -np.inf
        while True:
            if has[node]:
                v = _at(tx0[node], ty0[node], tm[node], q[k])
                if v > best:
                    best = v
            if lo == hi:
                break
            mid = (lo + hi) // 2
            if k <= mid:
                node, hi = 2 * node, mid
            else:
                node, lo = 2 * node + 1, mid + 1
        out[k] = best
    return out


def _segments(x: np.ndarray, y: np.ndarray):
    """Crossing lines x(y) = x0 + (y - y0) m for every segment; flat segments become two constants."""
    x0, x1, y0, y1 = x[:-1], x[1:], y[:-1], y[1:]
    flat = y0 == y1
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(flat, 0.0, (x1 - x0) / np.where(flat, 1.0, y1 - y0))
    lo = np.minimum(y0, y1)
    hi = np.maximum(y0, y1)
    xa = np.where(flat, np.maximum(x0, x1), x0)
    xb = np.where(flat, np.minimum(x0, x1), x0)
    return xa, xb, y0, m, lo, hi


def crossing_envelopes(curve: PolylineCurve, heights: np.ndarray):
    """(max, min) crossing abscissa at each of the sorted ``heights``."""
    x, y = curve.re, curve.im
    xa, xb, y0, m, lo, hi = _segments(x, y)
    a = np.searchsorted(heights, lo, side="left")
    b = np.searchsorted(heights, hi, side="right")
    hmax = _envelope(heights, xa, y0, m, a, b, 1.0)
    hmin = -_envelope(heights, xb, y0, m, a, b, -1.0)
    return hmax, hmin


def _collect(curve: PolylineCurve, eps: float, is_bridge: np.ndarray) -> BridgeSet:
    y = curve.im
    idx = np.flatnonzero(is_bridge & (y > 0))
    order = np.lexsort((idx, y[idx]))
    idx = idx[order]
    # one point per height: the earliest vertex
    if len(idx):
        keep = np.concatenate([[True], np.diff(y[idx]) > 0])
        idx = idx[keep]
    return BridgeSet(points=curve.points[idx].copy(), heights=y[idx].copy(),
                     time_indices=idx.astype(np.int64), eps=float(eps))


def find_bridge_points(curve: PolylineCurve, eps: float) -> BridgeSet:
    """eps-bridge points of ``curve``, ordered by height.  O(M log^2 M)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x, y = curve.re, curve.im
    q = np.unique(y)
    hmax, hmin = crossing_envelopes(curve, q)
    k = np.searchsorted(q, y)
    ok = (hmax[k] < x + eps) & (hmin[k] > x - eps)
    return _collect(curve, eps, ok)


def find_bridge_points_naive(curve: PolylineCurve, eps: float) -> BridgeSet:
    """Quadratic reference: test every vertex against every segment."""
    if len(curve) > NAIVE_LIMIT:
        raise ValueError(f"naive scan is limited to {NAIVE_LIMIT} vertices")
    x, y = curve.re, curve.im
    x0, x1, y0, y1 = x[:-1], x[1:], y[:-1], y[1:]
    flat = y0 == y1
    ok = np.zeros(len(x), dtype=bool)
    for i in range(len(x)):
        h = y[i]
        span = (np.minimum(y0, y1) <= h) & (h <= np.maximum(y0, y1))
        xs = []
        f = span & flat
        xs.append(x0[f])
        xs.append(x1[f])
        s = span & ~flat
        m = (x1[s] - x0[s]) / (y1[s] - y0[s])
        xs.append(x0[s] + (h - y0[s]) * m)
        xc = np.concatenate(xs)
        ok[i] = np.all(np.abs(xc - x[i]) < eps)
    return _collect(curve, eps, ok)


# ---------------------------------------------------------------- decomposition

def cut_indices(curve: PolylineCurve) -> np.ndarray:
    """Vertices strictly above everything before them and strictly below everything after.

    These are the exact bridge points of the polyline: the line through such a
    vertex meets the curve there only, so they lie in every eps-bridge set.
    """
    y = curve.im
    n = len(y)
    pmax = np.maximum.accumulate(y)
    smin = np.minimum.accumulate(y[::-1])[::-1]
    before = np.concatenate([[-np.inf], pmax[:-1]])
    after = np.concatenate([smin[1:], [np.inf]])
    ok = (y > before) & (y < after)
    ok[0] = False
    return np.flatnonzero(ok)


def _two_sum(a, b):
    # s + err == a + b exactly
    s = a + b
    bv = s - a
    err = (a - (s - bv)) + (b - bv)
    return s, err


def _shift(z: np.ndarray, by: complex):
    re, er = _two_sum(z.real, -by.real)
    im, ei = _two_sum(z.imag, -by.imag)
    return re + 1j * im, er + 1j * ei


def _unshift(z: np.ndarray, lo: np.ndarray, by: complex) -> np.ndarray:
    re, er = _two_sum(z.real, by.real)
    im, ei = _two_sum(z.imag, by.imag)
    return (re + (er + lo.real)) + 1j * (im + (ei + lo.imag))


def _piece(curve: PolylineCurve, i: int, j: int) -> tuple[PolylineCurve, np.ndarray]:
    pts, lo = _shift(curve.points[i:j + 1], complex(curve.points[i]))
    times = curve.times[i:j + 1] - curve.times[i]
    return PolylineCurve(points=pts, dt=curve.dt, seed=curve.seed, times=times), lo


def decompose_curve(curve: PolylineCurve, eps: float) -> list[IrreducibleSegment]:
    """Cut ``curve`` at its exact bridge points, shifting each piece to the origin.

    The remainder after the last cut (if any) is returned flagged ``"tail"``.
    With no cut at all the whole curve comes back as one segment flagged
    ``"no_bridge"``.  ``eps`` is recorded with the segments for provenance.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    cuts = cut_indices(curve)
    n = len(curve)
    out = []
    start = 0
    for j in cuts:
        seg, lo = _piece(curve, start, int(j))
        out.append(IrreducibleSegment(seg, float(seg.im[-1]), start, int(j), residual=lo))
        start = int(j)
    if start < n - 1:
        seg, lo = _piece(curve, start, n - 1)
        flag = "tail" if len(cuts) else "no_bridge"
        out.append(IrreducibleSegment(seg, float(seg.im.max()), start, n - 1, [flag], lo))
    return out


def concat_segments(segments) -> PolylineCurve:
    """Inverse of :func:`decompose_curve`: translate each piece to the end of
    the previous one and append.  Pieces carrying a residual come back exactly."""
    segs = list(segments)
    if not segs:
        raise ValueError("nothing to concatenate")
    curves = [s.curve if isinstance(s, IrreducibleSegment) else s for s in segs]
    lows = [s.residual if isinstance(s, IrreducibleSegment) else None for s in segs]
    first = curves[0].points if lows[0] is None else _unshift(curves[0].points, lows[0], 0j)
    pts = [first]
    times = [curves[0].times]
    for c, lo in zip(curves[1:], lows[1:]):
        end = complex(pts[-1][-1])
        moved = c.points + end if lo is None else _unshift(c.points, lo, end)
        pts.append(moved[1:])
        times.append(c.times[1:] + times[-1][-1])
    return PolylineCurve(points=np.concatenate(pts), dt=curves[0].dt, seed=curves[0].seed,
                         times=np.concatenate(times))


def scale_curve(curve: PolylineCurve, r: float) -> PolylineCurve:
    """Multiply every point by r; time scales by r^2 (Brownian scaling)."""
    if not r > 0:
        raise ValueError("r must be positive")
    return PolylineCurve(points=curve.points * r, dt=curve.dt * r * r, seed=curve.seed,
                         times=curve.times * r * r)


def renewal_split(curve: PolylineCurve, level: float, eps: float):
    """Split at the first exact bridge point at height >= level.

    Returns ``(past, future)`` where ``future`` is shifted so the cut point is 0.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    cuts = cut_indices(curve)
    cuts = cuts[cuts < len(curve) - 1]
    hs = curve.im[cuts]
    k = np.searchsorted(hs, level, side="left")
    if k >= len(cuts):
        raise RenewalError(f"no bridge height >= {level} with a curve after it "
                           f"(trace height {curve.height():.4g})")
    j = int(cuts[k])
    return _piece(curve, 0, j)[0], _piece(curve, j, len(curve) - 1)[0]


def first_cut_height(curve: PolylineCurve, level: float) -> float:
    """Height of the first exact bridge point at or above ``level`` (inf if none)."""
    cuts = cut_indices(curve)
    hs = curve.im[cuts]
    k = np.searchsorted(hs, level, side="left")
    return float(hs[k]) if k < len(hs) else float("inf")
