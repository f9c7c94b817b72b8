"""Box counting, tail-exponent fits and the two-sample KS test."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import stats

from .types import PowerLawFit

MIN_SCALES = 4
MIN_DECADES = 1.5
MIN_VALUES = 100
MIN_EXCEEDANCES = 10


class InsufficientDataError(ValueError):
    pass


def _linfit(u: np.ndarray, v: np.ndarray):
    slope, intercept = np.polyfit(u, v, 1)
    resid = v - (slope * u + intercept)
    ss = float(((v - v.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss if ss > 0 else 0.0
    return float(slope), float(intercept), min(max(r2, 0.0), 1.0)


def box_counts(values, scales) -> np.ndarray:
    """Occupied boxes of side delta, grid anchored at the componentwise minimum."""
    v = np.asarray(values)
    out = []
    if np.iscomplexobj(v):
        x, y = v.real - v.real.min(), v.imag - v.imag.min()
        for d in scales:
            cells = np.stack([np.floor(x / d), np.floor(y / d)], axis=1)
            out.append(len(np.unique(cells, axis=0)))
    else:
        v = v.astype(np.float64) - v.min()
        for d in scales:
            out.append(len(np.unique(np.floor(v / d))))
    return np.array(out, dtype=np.int64)


def box_count_dimension(values, scales, strict: bool = True) -> PowerLawFit:
    """Slope of log N(delta) against log(1/delta).

    ``strict`` enforces at least 4 scales over 1.5 decades and 100 values;
    otherwise violations are only recorded in ``flags``.
    """
    v = np.asarray(values)
    scales = np.sort(np.asarray(scales, dtype=np.float64))
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    flags = []
    if len(scales) < MIN_SCALES:
        flags.append("few_scales")
    if len(scales) >= 2 and math.log10(scales[-1] / scales[0]) < MIN_DECADES - 1e-12:
        flags.append("narrow_range")
    if len(v) < MIN_VALUES:
        flags.append("few_values")
    if strict and flags:
        raise InsufficientDataError(f"box counting needs >= {MIN_SCALES} scales over "
                                    f">= {MIN_DECADES} decades and >= {MIN_VALUES} values ({flags})")
    if len(scales) < 2:
        raise InsufficientDataError("need at least two scales")
    rng = (float(scales[0]), float(scales[-1]))
    if len(v) == 0 or np.all(v == v.flat[0]):
        return PowerLawFit(0.0, 0.0, 0.0, rng, len(v), flags + ["degenerate"])
    n = box_counts(v, scales)
    slope, icpt, r2 = _linfit(np.log(1.0 / scales), np.log(n))
    return PowerLawFit(slope, icpt, r2, rng, len(v), flags)


def tail_exponent(samples, L_grid, min_exceed: int = MIN_EXCEEDANCES,
                  curvature_tol: float = 0.25) -> PowerLawFit:
    """Fit log #{X > L} against log L; the exponent is minus the slope.

    Grid points with fewer than ``min_exceed`` exceedances are trimmed (with a
    warning).  The fit is flagged ``"curved"`` when slopes on the lower and
    upper halves of the grid differ by more than ``curvature_tol`` relative.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if np.any(x <= 0):
        raise ValueError("samples must be positive")
    L = np.sort(np.asarray(L_grid, dtype=np.float64))
    if np.any(L <= 0):
        raise ValueError("L_grid must be positive")
    flags = []
    if len(x) < 500:
        flags.append("few_samples")
    counts = len(x) - np.searchsorted(x, L, side="right")
    keep = counts >= min_exceed
    if not keep.all():
        warnings.warn(f"trimmed {int((~keep).sum())} grid points with < {min_exceed} exceedances",
                      stacklevel=2)
        flags.append("trimmed")
        L, counts = L[keep], counts[keep]
    if len(L) < MIN_SCALES:
        raise InsufficientDataError(f"only {len(L)} usable grid points")
    lu, lv = np.log(L), np.log(counts)
    slope, icpt, r2 = _linfit(lu, lv)
    h = len(L) // 2
    s_lo = _linfit(lu[:h + 1], lv[:h + 1])[0]
    s_hi = _linfit(lu[h:], lv[h:])[0]
    if abs(s_hi - s_lo) > curvature_tol * max(abs(slope), 1e-12):
        flags.append("curved")
    return PowerLawFit(-slope, icpt, r2, (float(L[0]), float(L[-1])), len(x), flags)


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be non-empty")
    with warnings.catch_warnings():
        # scipy's own p-value (unused) divides by zero for one-point samples
        warnings.simplefilter("ignore", RuntimeWarning)
        d = float(stats.ks_2samp(a, b, method="asymp").statistic)
    # Kolmogorov limit law at sqrt(nm/(n+m)) D; defined for any sample sizes
    en = len(a) * len(b) / (len(a) + len(b))
    return d, float(stats.kstwobign.sf(math.sqrt(en) * d))
