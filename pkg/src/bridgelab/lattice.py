"""Self-avoiding walks on Z^2: exact counts, bridges, Kesten factorization, pivot sampling.

Sites are integer pairs ``(x, y)``; ``y`` plays the role of the imaginary part.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from numba import njit

DEFAULT_MU = 2.63816
ENUM_GUARD = 20

_DX = np.array([1, 0, -1, 0], dtype=np.int64)
_DY = np.array([0, 1, 0, -1], dtype=np.int64)


class ConcatenationError(ValueError):
    def __init__(self, index: int, site):
        super().__init__(f"concatenation revisits site {site} at index {index}")
        self.index = index
        self.site = site


@dataclass(frozen=True)
class LatticeWalk:
    """Nearest-neighbour self-avoiding path; ``len(walk)`` is the number of steps."""

    sites: tuple

    def __post_init__(self):
        sites = tuple((int(x), int(y)) for x, y in self.sites)
        if not sites:
            raise ValueError("a walk has at least one site")
        for k in range(1, len(sites)):
            (x0, y0), (x1, y1) = sites[k - 1], sites[k]
            if abs(x1 - x0) + abs(y1 - y0) != 1:
                raise ValueError(f"sites {k - 1} and {k} are not lattice neighbours")
        if len(set(sites)) != len(sites):
            raise ValueError("walk is not self-avoiding")
        object.__setattr__(self, "sites", sites)

    @classmethod
    def from_complex(cls, zs) -> "LatticeWalk":
        return cls(tuple((int(round(z.real)), int(round(z.imag))) for z in map(complex, zs)))

    @classmethod
    def from_steps(cls, steps: Sequence[int]) -> "LatticeWalk":
        """Directions 0..3 = right, up, left, down."""
        x = y = 0
        out = [(0, 0)]
        for d in steps:
            x += int(_DX[d])
            y += int(_DY[d])
            out.append((x, y))
        return cls(tuple(out))

    def __len__(self):
        return len(self.sites) - 1

    @property
    def rooted(self) -> bool:
        return self.sites[0] == (0, 0)

    @property
    def ys(self) -> list[int]:
        return [y for _, y in self.sites]

    def in_half_plane(self) -> bool:
        y0 = self.sites[0][1]
        return all(y > y0 for _, y in self.sites[1:])

    def shifted(self) -> "LatticeWalk":
        x0, y0 = self.sites[0]
        return LatticeWalk(tuple((x - x0, y - y0) for x, y in self.sites))

    def as_complex(self) -> np.ndarray:
        return np.array([complex(x, y) for x, y in self.sites])


@dataclass
class BridgeFactorization:
    bridges: list = field(default_factory=list)
    tail: LatticeWalk | None = None

    @property
    def heights(self) -> list[int]:
        return [b.sites[-1][1] for b in self.bridges]

    def parts(self) -> list:
        return self.bridges + ([self.tail] if self.tail is not None else [])


def _check_guard(N: int, guard: int):
    if N < 0:
        raise ValueError("N must be non-negative")
    if N > guard:
        raise ValueError(f"N={N} exceeds the enumeration limit {guard}; raise guard= to override")


# ---------------------------------------------------------------- enumeration

@njit(cache=True)
def _count_saws(N):
    # walks whose first step is to the right; the other three are rotations
    size = 2 * N + 3
    occ = np.zeros((size, size), dtype=np.bool_)
    dirs = np.zeros(N + 1, dtype=np.int64)
    xs = np.zeros(N + 1, dtype=np.int64)
    ys = np.zeros(N + 1, dtype=np.int64)
    xs[0] = ys[0] = N + 1
    occ[N + 1, N + 1] = True
    xs[1] = N + 2
    ys[1] = N + 1
    occ[N + 2, N + 1] = True
    if N == 1:
        return 1
    count = 0
    depth = 1
    dirs[1] = -1
    while depth >= 1:
        dirs[depth] += 1
        if dirs[depth] > 3:
            occ[xs[depth], ys[depth]] = False
            depth -= 1
            continue
        d = dirs[depth]
        nx = xs[depth] + _DX[d]
        ny = ys[depth] + _DY[d]
        if occ[nx, ny]:
            continue
        if depth + 1 == N:
            count += 1
            continue
        depth += 1
        xs[depth] = nx
        ys[depth] = ny
        occ[nx, ny] = True
        dirs[depth] = -1
    return count


def enumerate_saws(N: int, guard: int = ENUM_GUARD) -> int:
    """Exact number c_N of N-step self-avoiding walks from the origin."""
    _check_guard(N, guard)
    if N == 0:
        return 1
    return 4 * int(_count_saws(N))


@njit(cache=True)
def _half_plane_dfs(N, store, out):
    """Walk the tree of half-plane walks (y_j > 0 for j >= 1) of length N.

    Returns (n_walks, n_bridges, n_irreducible); when ``store`` the walks are
    written as step directions into ``out``.
    """
    size = 2 * N + 3
    occ = np.zeros((size, N + 2), dtype=np.bool_)
    dirs = np.zeros(N + 1, dtype=np.int64)
    xs = np.zeros(N + 1, dtype=np.int64)
    ys = np.zeros(N + 1, dtype=np.int64)
    xs[0] = N + 1
    occ[N + 1, 0] = True
    xs[1] = N + 1
    ys[1] = 1
    occ[N + 1, 1] = True
    smin = np.zeros(N + 2, dtype=np.int64)
    n_walks = 0
    n_bridge = 0
    n_irr = 0
    depth = 1
    dirs[1] = -1
    leaf = N == 1
    while depth >= 1:
        if leaf:
            leaf = False
            if store:
                for j in range(N):
                    dx = xs[j + 1] - xs[j]
                    dy = ys[j + 1] - ys[j]
                    out[n_walks, j] = 0 if dx == 1 else (2 if dx == -1 else (1 if dy == 1 else 3))
            n_walks += 1
            top = 0
            for j in range(1, N + 1):
                if ys[j] > top:
                    top = ys[j]
            if ys[N] == top:
                n_bridge += 1
                smin[N] = ys[N] + 1
                for j in range(N - 1, 0, -1):
                    smin[j] = min(ys[j + 1], smin[j + 1])
                pmax = 0
                cut = False
                for j in range(1, N):
                    if ys[j] > pmax:
                        pmax = ys[j]
                    if ys[j] == pmax and smin[j] > ys[j]:
                        cut = True
                        break
                if not cut:
                    n_irr += 1
            if N == 1:
                break
            continue
        dirs[depth] += 1
        if dirs[depth] > 3:
            occ[xs[depth], ys[depth]] = False
            depth -= 1
            continue
        d = dirs[depth]
        nx = xs[depth] + _DX[d]
        ny = ys[depth] + _DY[d]
        if ny <= 0 or occ[nx, ny]:
            continue
        xs[depth + 1] = nx
        ys[depth + 1] = ny
        if depth + 1 == N:
            leaf = True
            continue
        depth += 1
        occ[nx, ny] = True
        dirs[depth] = -1
    return n_walks, n_bridge, n_irr


def enumerate_half_plane_bridges(N: int, guard: int = ENUM_GUARD) -> tuple[int, int]:
    """(b_N, lambda_N): N-step bridges and the irreducible ones among them."""
    _check_guard(N, guard)
    if N == 0:
        return 1, 0
    _, b, lam = _half_plane_dfs(N, False, np.zeros((1, 1), dtype=np.int8))
    return int(b), int(lam)


def count_half_plane_walks(N: int, guard: int = ENUM_GUARD) -> int:
    _check_guard(N, guard)
    if N == 0:
        return 1
    return int(_half_plane_dfs(N, False, np.zeros((1, 1), dtype=np.int8))[0])


def half_plane_step_table(N: int, guard: int = 14) -> np.ndarray:
    """All N-step half-plane walks as an (h_N, N) array of step directions."""
    _check_guard(N, guard)
    n = count_half_plane_walks(N, guard)
    out = np.zeros((n, N), dtype=np.int8)
    _half_plane_dfs(N, True, out)
    return out


def enumerate_half_plane_walks(N: int, guard: int = 14) -> Iterator[LatticeWalk]:
    for row in half_plane_step_table(N, guard):
        yield LatticeWalk.from_steps(row)


# ---------------------------------------------------------------- bridges

def is_bridge(walk: LatticeWalk) -> bool:
    ys = walk.ys
    if len(ys) < 2:
        return False
    y0, yN = ys[0], ys[-1]
    return all(y0 < y <= yN for y in ys[1:])


def _cut_indices(ys: Sequence[int]) -> list[int]:
    """Indices j >= 1 where the walk splits into two bridges (or ends on a running max)."""
    n = len(ys) - 1
    smin = [0] * (n + 2)
    smin[n + 1] = float("inf")
    for j in range(n, 0, -1):
        smin[j] = min(ys[j], smin[j + 1])
    cuts = []
    pmax = ys[0]
    for j in range(1, n + 1):
        if ys[j] >= pmax:
            pmax = ys[j]
            if smin[j + 1] > ys[j]:
                cuts.append(j)
    return cuts


def decompose_walk(walk: LatticeWalk) -> BridgeFactorization:
    """Split a half-plane walk into irreducible bridges plus an optional tail."""
    if not walk.in_half_plane():
        raise ValueError("walk leaves the half plane (y_j <= y_0 for some j >= 1)")
    sites = walk.sites
    out = BridgeFactorization()
    start = 0
    for j in _cut_indices(walk.ys):
        out.bridges.append(LatticeWalk(sites[start:j + 1]).shifted())
        start = j
    if start < len(sites) - 1:
        out.tail = LatticeWalk(sites[start:]).shifted()
    return out


def concat_walks(parts: Sequence[LatticeWalk]) -> LatticeWalk:
    """Translate each part to start at the previous endpoint and append."""
    sites = [(0, 0)]
    seen = {(0, 0)}
    all_bridges = all(is_bridge(p) for p in parts)
    for p in parts:
        x0, y0 = p.sites[0]
        ex, ey = sites[-1]
        for x, y in p.sites[1:]:
            s = (x - x0 + ex, y - y0 + ey)
            if s in seen:
                # stacked bridges live in disjoint horizontal bands
                assert not all_bridges, "bridges cannot collide under concatenation"
                raise ConcatenationError(len(sites), s)
            seen.add(s)
            sites.append(s)
    return LatticeWalk(tuple(sites))


# ---------------------------------------------------------------- Kesten / mu

def irreducible_counts(N_max: int, guard: int = ENUM_GUARD) -> list[int]:
    """[lambda_1, ..., lambda_{N_max}]."""
    return [enumerate_half_plane_bridges(n, guard)[1] for n in range(1, N_max + 1)]


def kesten_partial_sum(N_max: int, mu: float = DEFAULT_MU, lambdas: Sequence[int] | None = None) -> float:
    """sum_{N=1}^{N_max} lambda_N mu^-N."""
    if mu <= 1:
        raise ValueError("mu must exceed 1")
    if lambdas is None:
        lambdas = irreducible_counts(N_max)
    if len(lambdas) < N_max:
        raise ValueError(f"need {N_max} irreducible counts, got {len(lambdas)}")
    return float(sum(lam * mu ** -(n + 1) for n, lam in enumerate(lambdas[:N_max])))


def kesten_partial_sums(N_max: int, mu: float = DEFAULT_MU) -> list[float]:
    lambdas = irreducible_counts(N_max)
    acc, out = 0.0, []
    for n, lam in enumerate(lambdas, start=1):
        acc += lam * mu ** -n
        out.append(acc)
    return out


class MuEstimate(NamedTuple):
    ratio: float
    log_slope: float


def connective_constant_estimate(counts) -> MuEstimate:
    """Growth-rate estimates from (N, c_N) pairs with consecutive N.

    ``ratio`` is c_N / c_{N-1} at the largest N; ``log_slope`` is the
    exponential of the mean increment of log c_N over the whole table.
    """
    pairs = sorted((int(n), float(c)) for n, c in counts)
    if len(pairs) < 2:
        raise ValueError("need at least two counts")
    ns = [n for n, _ in pairs]
    if any(b - a != 1 for a, b in zip(ns, ns[1:])):
        raise ValueError("counts must be for consecutive N")
    if any(c <= 0 for _, c in pairs):
        raise ValueError("counts must be positive")
    ratio = pairs[-1][1] / pairs[-2][1]
    slope = (np.log(pairs[-1][1]) - np.log(pairs[0][1])) / (ns[-1] - ns[0])
    return MuEstimate(float(ratio), float(np.exp(slope)))


# ---------------------------------------------------------------- pivot MCMC

# the seven non-identity symmetries of Z^2 as integer matrices
_SYMMETRIES = np.array([
    [[0, -1], [1, 0]],    # rotate +90
    [[-1, 0], [0, -1]],   # rotate 180
    [[0, 1], [-1, 0]],    # rotate -90
    [[1, 0], [0, -1]],    # reflect in x axis
    [[-1, 0], [0, 1]],    # reflect in y axis
    [[0, 1], [1, 0]],     # reflect in y = x
    [[0, -1], [-1, 0]],   # reflect in y = -x
], dtype=np.int64)


def staircase(N: int) -> np.ndarray:
    """up, right, up, right, ... as an (N+1, 2) site array."""
    pts = np.zeros((N + 1, 2), dtype=np.int64)
    for j in range(1, N + 1):
        pts[j] = pts[j - 1] + ((0, 1) if j % 2 == 1 else (1, 0))
    return pts


@njit(cache=True)
def _try_pivot(pts, k, g, buf):
    # rotate/reflect the part after site k about site k; accept if it stays
    # in y > 0 and avoids the part up to k
    n = pts.shape[0]
    px = pts[k, 0]
    py = pts[k, 1]
    for j in range(k + 1, n):
        dx = pts[j, 0] - px
        dy = pts[j, 1] - py
        nx = px + g[0, 0] * dx + g[0, 1] * dy
        ny = py + g[1, 0] * dx + g[1, 1] * dy
        if ny <= 0:
            return False
        buf[j, 0] = nx
        buf[j, 1] = ny
    # hash the fixed part, then probe the moved part
    cap = 1
    while cap < 4 * n:
        cap *= 2
    keys = np.full(cap, -1, dtype=np.int64)
    span = 4 * n + 7
    for j in range(k + 1):
        key = (pts[j, 0] + 2 * n) * span + pts[j, 1]
        h = (key * 0x9E3779B1) & (cap - 1)
        while keys[h] != -1:
            h = (h + 1) & (cap - 1)
        keys[h] = key
    for j in range(k + 1, n):
        key = (buf[j, 0] + 2 * n) * span + buf[j, 1]
        h = (key * 0x9E3779B1) & (cap - 1)
        while keys[h] != -1:
            if keys[h] == key:
                return False
            h = (h + 1) & (cap - 1)
    for j in range(k + 1, n):
        pts[j, 0] = buf[j, 0]
        pts[j, 1] = buf[j, 1]
    return True


def pivot_chain(N: int, seed: int, thin: int = 1) -> Iterator[LatticeWalk]:
    """Endless pivot chain on N-step half-plane walks; yields every ``thin`` moves."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    pts = staircase(N)
    buf = np.zeros_like(pts)
    while True:
        for _ in range(thin):
            k = int(rng.integers(0, N))
            g = _SYMMETRIES[int(rng.integers(0, 7))]
            _try_pivot(pts, k, g, buf)
        yield LatticeWalk(tuple(map(tuple, pts.tolist())))


def pivot_sample_half_plane(N: int, n_moves: int, seed: int) -> LatticeWalk:
    """Half-plane N-step walk after ``n_moves`` attempted pivots from the staircase."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if n_moves < 0:
        raise ValueError("n_moves must be >= 0")
    if n_moves == 0:
        return LatticeWalk(tuple(map(tuple, staircase(N).tolist())))
    return next(pivot_chain(N, seed, thin=n_moves))
