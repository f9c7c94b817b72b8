"""Trace-level statistics shared by the CLI and the test-suite.

Each helper turns one curve (or a batch of seeded curves) into the numbers the
higher-level checks compare: windowed bridge-height dimensions, irreducible
segment heights, avoidance of a gap line, renewal and scaling statistics.
"""
from __future__ import annotations

import math

import numpy as np

from .bridges import cut_indices, decompose_curve, find_bridge_points, renewal_split, scale_curve
from .estimators import (MIN_DECADES, MIN_SCALES, InsufficientDataError, box_count_dimension,
                         ks_two_sample)
from .sle import sample_sle_trace
from .types import GapLine, PolylineCurve

# bridge heights are read off in [H/8, H/2]: below H/8 the root cluster, above
# H/2 points not yet confirmed by the rest of the curve
WINDOW = (1.0 / 8.0, 1.0 / 2.0)
TOP_SCALE = 0.2
N_SCALES = 8
RES_FACTOR = 3.0


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Independent 63-bit child seeds; child k depends only on (seed, k)."""
    return [int(s.generate_state(2, np.uint64)[0] >> np.uint64(1))
            for s in np.random.SeedSequence(seed).spawn(n)]


def resolution(curve: PolylineCurve) -> float:
    return math.sqrt(curve.dt)


def windowed_bridge_heights(curve: PolylineCurve, eps: float) -> np.ndarray:
    H = curve.height()
    h = find_bridge_points(curve, eps).heights
    return h[(h >= WINDOW[0] * H) & (h < WINDOW[1] * H)]


def dimension_scales(curve: PolylineCurve, eps: float) -> np.ndarray:
    """Box sizes from max(eps, 3 * resolution) up to 0.2 * height, log-spaced.

    Raises InsufficientDataError when that range has under 1.5 decades.
    """
    lo = max(eps, RES_FACTOR * resolution(curve))
    hi = TOP_SCALE * curve.height()
    if not hi > lo or math.log10(hi / lo) < MIN_DECADES - 1e-12:
        raise InsufficientDataError(
            f"scale range [{lo:.3g}, {hi:.3g}] is under {MIN_DECADES} decades")
    return np.geomspace(lo, hi, N_SCALES)


def bridge_dimension(curve: PolylineCurve, eps: float):
    """Box-count fit of the windowed eps-bridge heights of one curve.

    Few heights are allowed (flagged); an empty window gives exponent 0.
    """
    scales = dimension_scales(curve, eps)
    h = windowed_bridge_heights(curve, eps)
    return box_count_dimension(h, scales, strict=False)


def segment_heights(curve: PolylineCurve, eps: float) -> np.ndarray:
    """Heights of the irreducible pieces of ``curve`` that start below half its height.

    Selecting on the start keeps the piece heights unbiased: a piece's size
    is independent of where it begins, while a cut on the end would drop
    the large ones.  The unfinished remainder counts as ``inf`` (it is taller
    than half the height).  The first piece carries the start-up of the
    discretization and is left out.
    """
    half = 0.5 * curve.height()
    y = curve.im
    out = [np.inf if s.flags else s.height for s in decompose_curve(curve, eps)
           if s.start_index > 0 and y[s.start_index] < half]
    return np.array(out, dtype=np.float64)


def tail_grid(eps: float, height: float, n: int = 8) -> np.ndarray:
    return np.geomspace(0.5 * eps, height / 20.0, n)


# ---------------------------------------------------------------- avoidance

def avoids_gap(curve: PolylineCurve, gap: GapLine) -> bool:
    """True if every crossing of the gap line happens inside the gap."""
    x, y = curve.re, curve.im
    d = y - gap.height
    s = np.flatnonzero(d[:-1] * d[1:] <= 0)
    if len(s) == 0:
        return True
    d0, d1 = d[s], d[s + 1]
    flat = d0 == d1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(flat, 0.0, d0 / np.where(flat, 1.0, d0 - d1))
    xc = x[s] + (x[s + 1] - x[s]) * t
    hit = np.abs(xc - gap.center.real) >= gap.half_width
    # a flat run on the line counts with both endpoints
    hit |= flat & (np.abs(x[s + 1] - gap.center.real) >= gap.half_width)
    return not bool(hit.any())


def avoidance_frequency(kappa: float, gap: GapLine, n_traces: int, seed: int,
                        n_steps: int = 6000, dt: float = 1e-3, coarsen_after: float = 4.0,
                        growth: float = 2e-3) -> tuple[float, int]:
    """Fraction of seeded traces that avoid ``gap``; returns (frequency, count)."""
    hits = 0
    for s in spawn_seeds(seed, n_traces):
        c = sample_sle_trace(kappa, n_steps, dt, s, coarsen_after=coarsen_after, growth=growth)
        hits += avoids_gap(c, gap)
    return hits / n_traces, hits


# ---------------------------------------------------------------- renewal / scaling

NO_SEGMENT = 10.0


def first_large_segment(curve: PolylineCurve, min_size: float, window: float) -> float:
    """Height of the first irreducible piece of height >= ``min_size`` that
    starts below ``window``; ``NO_SEGMENT`` if there is none.

    Pieces this large are set by the curve at scale ``min_size``, so the
    value is insensitive to how finely the curve is sampled.
    """
    h = np.concatenate([[0.0], curve.im[cut_indices(curve)]])
    for a, b in zip(h[:-1], h[1:]):
        if a >= window:
            break
        if b - a >= min_size:
            return float(b - a)
    return NO_SEGMENT


def renewal_statistics(curve: PolylineCurve, split: float, min_size: float, eps: float):
    """(fresh, future) large-piece heights of one curve, or None if it never renews.

    ``fresh`` is read on the part before the first bridge point above
    ``split``, ``future`` on the part after it, moved to the origin; both
    look only at pieces starting below ``split``.
    """
    from .bridges import RenewalError

    try:
        past, fut = renewal_split(curve, split, eps)
    except RenewalError:
        return None
    return (first_large_segment(past, min_size, split),
            first_large_segment(fut, min_size, split))


def renewal_test(kappa: float, n: int, seed: int, n_steps: int = 600, dt: float = 2e-3,
                 split: float = 0.6, min_size: float = 0.1, eps: float = 0.05) -> dict:
    """KS of future against fresh large-piece heights, ``n`` renewed traces each.

    Before and after a bridge point the curve is independent, so both
    samples come from the same traces; traces that never pass ``split`` are
    skipped and replaced by further seeds.
    """
    fresh, fut = [], []
    seeds = spawn_seeds(seed, 2 * n)
    used = 0
    for s in seeds:
        if len(fresh) == n:
            break
        used += 1
        r = renewal_statistics(sample_sle_trace(kappa, n_steps, dt, s), split, min_size, eps)
        if r is not None:
            fresh.append(r[0])
            fut.append(r[1])
    if len(fresh) < n:
        raise InsufficientDataError(f"only {len(fresh)} of {used} traces renewed above {split}")
    D, p = ks_two_sample(fresh, fut)
    return {"statistic": D, "p_value": p, "n": n, "traces_used": used,
            "fresh_median": float(np.median(fresh)), "future_median": float(np.median(fut))}


def first_bridge_height(curve: PolylineCurve, eps: float, low: float) -> float:
    h = find_bridge_points(curve, eps).heights
    k = np.searchsorted(h, low, side="left")
    return float(h[k]) if k < len(h) else float("inf")


def scale_test(kappa: float, n: int, seed: int, r: float = 2.0, n_steps: int = 600,
               dt: float = 2e-3, eps: float = 0.05, low: float = 0.3) -> dict:
    """KS of first (r eps)-bridge heights above r*low on curves scaled by r
    against r times first eps-bridge heights above low on independent curves."""
    seeds = spawn_seeds(seed, 2 * n)
    a, b = [], []
    for s in seeds[:n]:
        c = scale_curve(sample_sle_trace(kappa, n_steps, dt, s), r)
        a.append(first_bridge_height(c, r * eps, r * low))
    for s in seeds[n:]:
        b.append(r * first_bridge_height(sample_sle_trace(kappa, n_steps, dt, s), eps, low))
    a, b = np.array(a), np.array(b)
    # a missing bridge is censored at the largest finite value seen
    top = max(np.max(a[np.isfinite(a)], initial=0.0), np.max(b[np.isfinite(b)], initial=0.0))
    a[~np.isfinite(a)] = top
    b[~np.isfinite(b)] = top
    D, p = ks_two_sample(a, b)
    return {"statistic": D, "p_value": p, "n": n, "mean_scaled": float(a.mean()),
            "mean_reference": float(b.mean())}
