"""Brownian motion, Bessel-3 and half-plane excursion samplers, and a Monte-Carlo
estimator of phi'_A(0) as the probability that an excursion avoids A.

An excursion is ``(x, r)`` with ``x`` a 1d Brownian motion and ``r`` the modulus
of an independent 3d Brownian motion.  The radial move
``r' = |r e_1 + sqrt(dt) Z|`` (Z standard 3d normal) is exact for any step, so
the estimator picks its step from the distance to the nearest gap line.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .types import GapLine, McEstimate, PolylineCurve

# step = (distance to nearest line / STEP_RATIO)^2, floored at dt
STEP_RATIO = 5.0
CAP_FACTOR = 200.0


def _check_dt(dt: float, T: float | None = None):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if T is not None and T < dt:
        raise ValueError("need T >= dt")


def sample_brownian_path(dt: float, T: float, seed: int) -> PolylineCurve:
    """Planar Brownian motion from 0 on the grid 0, dt, ..., n dt with n = round(T/dt)."""
    _check_dt(dt, T)
    n = int(round(T / dt))
    rng = np.random.default_rng(seed)
    steps = math.sqrt(dt) * rng.standard_normal((n, 2))
    pts = np.zeros(n + 1, dtype=np.complex128)
    pts[1:] = np.cumsum(steps[:, 0] + 1j * steps[:, 1])
    return PolylineCurve(points=pts, dt=dt, seed=seed)


def sample_bessel3(dt: float, T: float, seed: int) -> np.ndarray:
    """Bessel-3 path from 0: modulus of a 3d Brownian motion, values at 0, dt, ..., n dt."""
    _check_dt(dt, T)
    n = int(round(T / dt))
    rng = np.random.default_rng(seed)
    b = np.zeros((n + 1, 3))
    b[1:] = np.cumsum(math.sqrt(dt) * rng.standard_normal((n, 3)), axis=0)
    return np.sqrt((b * b).sum(axis=1))


def sample_halfplane_excursion(dt: float, height_cap: float, seed: int,
                               chunk: int = 65536) -> PolylineCurve:
    """Excursion from 0 on a fixed dt grid, stopped once the height reaches ``height_cap``."""
    _check_dt(dt)
    if not height_cap > 0:
        raise ValueError("height_cap must be positive")
    rng = np.random.default_rng(seed)
    sd = math.sqrt(dt)
    pos = np.zeros(4)
    parts = [np.zeros(1, dtype=np.complex128)]
    while True:
        inc = sd * rng.standard_normal((chunk, 4))
        walk = pos + np.cumsum(inc, axis=0)
        r = np.sqrt((walk[:, 1:] ** 2).sum(axis=1))
        hit = np.flatnonzero(r >= height_cap)
        stop = hit[0] + 1 if len(hit) else chunk
        parts.append(walk[:stop, 0] + 1j * r[:stop])
        if len(hit):
            break
        pos = walk[-1]
    return PolylineCurve(points=np.concatenate(parts), dt=dt, seed=seed)


# ---------------------------------------------------------------- estimator

@njit(cache=True)
def _seed(s):
    np.random.seed(s)


@njit(cache=True)
def _killed(x0, y0, x1, y1, step, hs, cxs, ws):
    """True if the segment (x0,y0)-(x1,y1) meets a gap line outside its gap.

    A sign change is located by linear interpolation.  Without one, the
    vertical motion may still have touched the line inside the step; that
    happens with the Brownian-bridge probability exp(-2 d0 d1 / step).
    """
    for j in range(hs.shape[0]):
        d0 = y0 - hs[j]
        d1 = y1 - hs[j]
        if d0 * d1 <= 0.0:
            if d0 == d1:
                xc = x0
            else:
                xc = x0 + (x1 - x0) * d0 / (d0 - d1)
            if abs(xc - cxs[j]) >= ws[j]:
                return True
        else:
            e = 2.0 * d0 * d1 / step
            if e < 40.0 and np.random.random() < math.exp(-e):
                xc = x0 + (x1 - x0) * abs(d0) / (abs(d0) + abs(d1))
                if abs(xc - cxs[j]) >= ws[j]:
                    return True
    return False


@njit(cache=True)
def _crossed_gap(y0, y1, h):
    return (y0 - h) * (y1 - h) <= 0.0 and y0 != y1


@njit(cache=True)
def _run(xs, rs, alive, hs, cxs, ws, dt_min, ratio, target_kind, tx, ty, trad, tgap, cap):
    """Advance every live particle until it meets the target or is killed.

    target_kind 0: reach the disc |z - (tx + i ty)| <= trad, or pass through gap
    ``tgap``; kind 1: reach height ty.  Reaching ``cap`` always counts as success
    of the final stage only (kind 1 with ty = cap).
    """
    n = xs.shape[0]
    steps = 0
    for p in range(n):
        if not alive[p]:
            continue
        x = xs[p]
        r = rs[p]
        while True:
            if target_kind == 0:
                if math.hypot(x - tx, r - ty) <= trad:
                    break
            elif r >= ty:
                break
            d = 1e300
            for j in range(hs.shape[0]):
                dj = abs(r - hs[j])
                if dj < d:
                    d = dj
            step = (d / ratio) ** 2
            if step < dt_min:
                step = dt_min
            sd = math.sqrt(step)
            x1 = x + sd * np.random.standard_normal()
            a = r + sd * np.random.standard_normal()
            b = sd * np.random.standard_normal()
            c = sd * np.random.standard_normal()
            r1 = math.sqrt(a * a + b * b + c * c)
            steps += 1
            if _killed(x, r, x1, r1, step, hs, cxs, ws):
                alive[p] = False
                break
            if target_kind == 0 and tgap >= 0 and _crossed_gap(r, r1, hs[tgap]):
                x = x1
                r = r1
                break
            x = x1
            r = r1
        xs[p] = x
        rs[p] = r
    return steps


def _shard_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _stages(gaps: list[GapLine], cap: float, shrink: float = 0.5):
    """Splitting levels: shrinking discs around each gap, then clearing it, then the cap."""
    out = []
    prev = 0.0
    for j, g in enumerate(gaps):
        c = g.center
        rho = 0.5 * (g.height - prev)
        while rho > 2 * g.half_width:
            out.append((0, c.real, c.imag, rho, j))
            rho *= shrink
        out.append((0, c.real, c.imag, 2 * g.half_width, j))
        out.append((1, 0.0, g.height + 2 * g.half_width, 0.0, -1))
        prev = g.height
    out.append((1, 0.0, cap, 0.0, -1))
    return out


def estimate_phi_prime_mc(gaps, n_samples: int, dt: float | None = None, seed: int = 0,
                          method: str = "direct", n_shards: int = 10,
                          height_cap: float | None = None,
                          step_ratio: float = STEP_RATIO) -> McEstimate:
    """Probability that a half-plane excursion from 0 avoids every gap line in ``gaps``.

    ``dt`` is the smallest time step (used near the lines); by default
    ``min(1e-4, (eps_min/10)^2)``.  Paths are stopped at ``height_cap``
    (default ``200 * (h_max + 1)``); a Bessel-3 path from there returns to the
    top line with probability ``h_max / height_cap``, which is reported as
    ``bias_bound`` relative to the mean.

    ``method="direct"`` is the plain fraction with a binomial standard error.
    ``method="splitting"`` is fixed-effort multilevel splitting (``n_samples``
    particles per stage per shard is ``n_samples // n_shards``) with the error
    taken from the spread over independent shards; use it when the answer is
    far below ``1 / n_samples``.
    """
    gaps = [g if isinstance(g, GapLine) else GapLine(*g) for g in gaps]
    if not gaps:
        raise ValueError("need at least one gap line")
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    gaps = sorted(gaps, key=lambda g: g.height)
    eps_min = min(g.half_width for g in gaps)
    if dt is None:
        dt = min(1e-4, (eps_min / 10) ** 2)
    h_max = gaps[-1].height
    cap = CAP_FACTOR * (h_max + 1) if height_cap is None else float(height_cap)
    if cap <= h_max:
        raise ValueError("height_cap must exceed the highest gap line")
    hs = np.array([g.height for g in gaps])
    cxs = np.array([g.center.real for g in gaps])
    ws = np.array([g.half_width for g in gaps])
    seeds = _shard_seeds(seed, n_shards)
    sizes = [n_samples // n_shards + (1 if i < n_samples % n_shards else 0) for i in range(n_shards)]
    meta = {"method": method, "height_cap": cap, "n_shards": n_shards, "step_ratio": step_ratio}

    if method == "direct":
        hits = 0
        for s, m in zip(seeds, sizes):
            if m == 0:
                continue
            _seed(s % (2 ** 32))
            xs, rs = np.zeros(m), np.zeros(m)
            alive = np.ones(m, dtype=np.bool_)
            _run(xs, rs, alive, hs, cxs, ws, dt, step_ratio, 1, 0.0, cap, 0.0, -1, cap)
            hits += int(alive.sum())
        p = hits / n_samples
        se = math.sqrt(max(p * (1 - p), 0.0) / n_samples)
        meta["hits"] = hits
    elif method == "splitting":
        if len(set(hs.tolist())) != len(hs):
            raise ValueError("splitting needs gap lines at distinct heights")
        stages = _stages(gaps, cap)
        ests = []
        for s, m in zip(seeds, sizes):
            if m == 0:
                continue
            _seed(s % (2 ** 32))
            rng = np.random.default_rng(s)
            xs, rs = np.zeros(m), np.zeros(m)
            est = 1.0
            for kind, tx, ty, trad, tg in stages:
                alive = np.ones(m, dtype=np.bool_)
                _run(xs, rs, alive, hs, cxs, ws, dt, step_ratio, kind, tx, ty, trad, tg, cap)
                k = int(alive.sum())
                est *= k / m
                if k == 0:
                    break
                pick = np.flatnonzero(alive)[rng.integers(0, k, size=m)]
                xs, rs = xs[pick].copy(), rs[pick].copy()
            ests.append(est)
        ests = np.array(ests)
        p = float(ests.mean())
        se = float(ests.std(ddof=1) / math.sqrt(len(ests))) if len(ests) > 1 else float("nan")
        meta["n_stages"] = len(stages)
        meta["shard_estimates"] = ests.tolist()
    else:
        raise ValueError(f"unknown method {method!r}")
    return McEstimate(mean=p, std_error=se, n_samples=n_samples, seed=seed, dt=dt,
                      bias_bound=p * h_max / cap, meta=meta)
