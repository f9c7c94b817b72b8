"""Reference implementations written independently of the package.

Slow but obvious: plain recursion, direct sampling, finite differences.
"""
import math

import numpy as np

# c_N for the square lattice, N = 0..12, frozen from the brute-force counter below
SAW_COUNTS = [1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932]

# (b_N, lambda_N) for N = 1..10 from walks_with_bridges below
BRIDGE_COUNTS = [(1, 1), (3, 2), (7, 2), (17, 2), (41, 2), (101, 4), (251, 10), (631, 26),
                 (1591, 56), (4029, 118)]

STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def count_saws(n):
    """Number of n-step self-avoiding walks from the origin, by plain recursion."""
    seen = {(0, 0)}

    def rec(x, y, left):
        if left == 0:
            return 1
        total = 0
        for dx, dy in STEPS:
            p = (x + dx, y + dy)
            if p not in seen:
                seen.add(p)
                total += rec(p[0], p[1], left - 1)
                seen.remove(p)
        return total

    return rec(0, 0, n)


def half_plane_walks(n):
    """All n-step walks from 0 with y > 0 after the start, as site lists."""
    out = []
    path = [(0, 0)]
    seen = {(0, 0)}

    def rec():
        if len(path) == n + 1:
            out.append(list(path))
            return
        x, y = path[-1]
        for dx, dy in STEPS:
            p = (x + dx, y + dy)
            if p[1] > 0 and p not in seen:
                seen.add(p)
                path.append(p)
                rec()
                path.pop()
                seen.remove(p)

    rec()
    return out


def is_bridge(sites):
    ys = [y for _, y in sites]
    return len(ys) > 1 and all(ys[0] < y <= ys[-1] for y in ys[1:])


def is_irreducible(sites):
    return is_bridge(sites) and not any(
        is_bridge(sites[:k + 1]) and is_bridge(sites[k:]) for k in range(1, len(sites) - 1))


def walks_with_bridges(n):
    """(b_n, lambda_n) by testing every half-plane walk against the definitions."""
    b = lam = 0
    for w in half_plane_walks(n):
        if is_bridge(w):
            b += 1
            lam += is_irreducible(w)
    return b, lam


def split_into_bridges(sites):
    """Greedy factorization: cut at the first k where the prefix is a bridge and
    the rest is a bridge or a walk staying strictly above the cut."""
    parts = []
    start = 0
    for k in range(1, len(sites)):
        head = sites[start:k + 1]
        rest = sites[k:]
        if is_bridge(head) and all(y > sites[k][1] for _, y in rest[1:]):
            parts.append(head)
            start = k
    if start < len(sites) - 1:
        parts.append(sites[start:])
    return parts


def chi3_bessel_marginal(t, size, rng):
    """|B_t| for a 3d Brownian motion, sampled as sqrt(t) times a chi(3) variable."""
    return math.sqrt(t) * np.sqrt(rng.chisquare(3, size))


def derivative_fd(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def cantor_endpoints(level):
    """Left/right endpoints of the middle-thirds intervals after ``level`` removals."""
    def rec(a, b, k):
        if k == 0:
            return [a, b]
        third = (b - a) / 3
        return rec(a, a + third, k - 1) + rec(b - third, b, k - 1)

    return np.unique(np.array(rec(0.0, 1.0, level)))


def pareto(index, size, rng, xmin=1.0):
    """Inverse-CDF draw with P(X > x) = (x / xmin)^-index."""
    u = rng.random(size)
    return xmin * (1.0 - u) ** (-1.0 / index)
