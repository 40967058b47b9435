"""Lebesgue functions and constants, mesh statistics and error bounds for
Berrut interpolation on subsets of Chebyshev points of the second kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._validation import as_points, check_count
from .exceptions import InvalidInputError, InvalidParameterError, OutOfRegimeError
from .interpolants import Scheme, basis_matrix, scheme_weights
from .pointsets import NodeSet, chebyshev_second

DEFAULT_SAMPLES_PER_INTERVAL = 64
_CHUNK = 4096


@dataclass(frozen=True)
class StragglerPattern:
    """Workers ``0..N`` of which ``stragglers`` never respond.

    ``model`` records how the pattern was generated (``"uniform"``,
    ``"worst-case"`` or ``"explicit"``); ``seed`` and ``kbar`` are the
    generator parameters when relevant.
    """

    N: int
    stragglers: tuple[int, ...] = ()
    model: str = "explicit"
    seed: int | None = None
    kbar: int | None = None

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.stragglers))
        if len(set(idx)) != len(idx):
            raise InvalidParameterError("straggler indices must be distinct")
        if idx and (idx[0] < 0 or idx[-1] > self.N):
            raise InvalidParameterError(f"straggler index outside [0, {self.N}]")
        object.__setattr__(self, "stragglers", idx)

    @property
    def s(self) -> int:
        return len(self.stragglers)

    @property
    def survivors(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.N + 1), np.asarray(self.stragglers, dtype=int))


@dataclass(frozen=True)
class LebesgueReport:
    constant_estimate: float
    argmax_x: float
    grid_size: int
    theoretical_bound: float | None = None


@dataclass(frozen=True)
class WellSpacedReport:
    C_min: float
    R_min: float
    satisfied_for: tuple[float, float]
    dominated: bool


@dataclass(frozen=True)
class MeshParams:
    h: float
    lam: float  # local mesh ratio


def lebesgue_function(scheme, nodes, x, weights=None):
    """``sum_i |l_i(x)|`` for the cardinal basis of ``scheme``."""
    pts = as_points(x)
    vals = np.concatenate(
        [
            np.abs(basis_matrix(scheme, nodes, pts[i : i + _CHUNK], weights)).sum(axis=1)
            for i in range(0, pts.size, _CHUNK)
        ]
    )
    return float(vals[0]) if np.ndim(x) == 0 else vals


def lebesgue_grid(nodes: NodeSet, samples_per_interval: int = DEFAULT_SAMPLES_PER_INTERVAL,
                  interval: tuple[float, float] | None = None) -> np.ndarray:
    """Composite grid: Chebyshev-distributed interior samples plus the midpoint
    of every gap between consecutive breakpoints (nodes and interval ends).
    """
    m = check_count(samples_per_interval, "samples_per_interval", minimum=10)
    a, b = interval if interval is not None else nodes.interval
    brk = np.unique(np.concatenate([[a], nodes.points, [b]]))
    lo, hi = brk[:-1], brk[1:]
    t = 0.5 * (1.0 + np.sin(np.pi * (2 * np.arange(m) - (m - 1)) / (2 * m)))
    t = np.append(t, 0.5)
    return (lo[:, None] + (hi - lo)[:, None] * t[None, :]).ravel()


def lebesgue_constant(scheme, nodes: NodeSet, samples_per_interval: int = DEFAULT_SAMPLES_PER_INTERVAL,
                      weights=None, interval: tuple[float, float] | None = None,
                      refine: bool = True, theoretical_bound: float | None = None) -> LebesgueReport:
    """Estimate ``max_x sum_i |l_i(x)|`` over the node interval.

    The grid maximum is polished with a bounded scalar search in the
    breakpoint gaps holding the three largest grid values; the estimate is
    never below the grid maximum.
    """
    if not isinstance(nodes, NodeSet):
        nodes = NodeSet(nodes)
    a, b = interval if interval is not None else nodes.interval
    if len(nodes) == 1:
        return LebesgueReport(1.0, float(nodes.points[0]), 1, theoretical_bound)
    w = scheme_weights(scheme, nodes, weights)
    grid = lebesgue_grid(nodes, samples_per_interval, (a, b))
    vals = lebesgue_function(scheme, nodes, grid, w)
    best = int(np.argmax(vals))
    best_x, best_v = float(grid[best]), float(vals[best])
    if refine:
        brk = np.unique(np.concatenate([[a], nodes.points, [b]]))
        for i in np.argsort(vals)[::-1][:3]:
            g = int(np.clip(np.searchsorted(brk, grid[i]) - 1, 0, brk.size - 2))
            res = minimize_scalar(
                lambda t: -lebesgue_function(scheme, nodes, t, w),
                bounds=(brk[g], brk[g + 1]), method="bounded",
                options={"xatol": 1e-12 * (b - a)},
            )
            if -res.fun > best_v:
                best_x, best_v = float(res.x), float(-res.fun)
    return LebesgueReport(best_v, best_x, int(grid.size), theoretical_bound)


def theoretical_lebesgue_bound(N: int, s: int) -> float:
    """``(R + 1)(1 + 2 C ln(N - s))`` with ``C = pi^2 (s+1)/2`` and
    ``R = (s+1)(s+3) pi^2 / 4``: the bound on Berrut's Lebesgue constant over
    any ``N + 1 - s`` of the ``N + 1`` Chebyshev points of the second kind.
    """
    N, s = _check_regime(N, s)
    C, R = _well_spaced_pair(s)
    return (R + 1.0) * (1.0 + 2.0 * C * np.log(N - s))


def _well_spaced_pair(s: int) -> tuple[float, float]:
    return np.pi**2 * (s + 1) / 2.0, (s + 1) * (s + 3) * np.pi**2 / 4.0


def _check_regime(N, s) -> tuple[int, int]:
    N = check_count(N, "N")
    s = check_count(s, "s", minimum=0)
    if s >= N - 2:
        raise OutOfRegimeError(f"bound requires s < N - 2, got N={N}, s={s}")
    return N, s


def well_spaced_constants(nodes: NodeSet, s: int = 0) -> WellSpacedReport:
    """Smallest ``C`` and ``R`` for which the three well-spacing conditions hold.

    ``C`` covers the two gap-to-distance conditions (exhaustive ``O(n^2)``
    sweep); ``R`` bounds the ratio of adjacent gaps from both sides. The
    report also says whether the closed-form pair for ``s`` stragglers
    dominates the measured constants.
    """
    x = nodes.points if isinstance(nodes, NodeSet) else NodeSet(nodes).points
    if x.size < 3:
        raise InvalidInputError("well-spacing needs at least 3 nodes")
    n = x.size - 1
    gaps = np.diff(x)
    k = np.arange(n)[:, None]
    j = np.arange(n + 1)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        left = (k + 1 - j) * gaps[:, None] / (x[1:, None] - x[None, :])
        right = (j - k) * gaps[:, None] / (x[None, :] - x[:-1, None])
    c1 = np.where(j <= k, left, -np.inf).max()
    c2 = np.where(j >= k + 1, right, -np.inf).max()
    ratio = gaps[1:] / gaps[:-1]
    R_min = float(np.max(np.maximum(ratio, 1.0 / ratio)))
    C_min = float(max(c1, c2))
    C, R = _well_spaced_pair(check_count(s, "s", minimum=0))
    return WellSpacedReport(C_min, R_min, (C, R), bool(C_min <= C and R_min <= R))


def worst_case_pattern(N: int, s: int, kbar: int) -> StragglerPattern:
    """Stragglers ``kbar+1 .. kbar+s``: the consecutive gap that maximises the
    Lebesgue constant among all size-``s`` straggler sets.

    Survivors are ``{0..kbar} U {kbar+s+1..N}``.
    """
    N = check_count(N, "N")
    s = check_count(s, "s", minimum=0)
    if s > N:
        raise InvalidParameterError(f"s={s} exceeds N={N}")
    if s == 0:
        return StragglerPattern(N, (), "worst-case", kbar=int(kbar))
    if not 0 <= kbar <= N - s - 1:
        raise InvalidParameterError(f"kbar must lie in [0, {N - s - 1}], got {kbar}")
    return StragglerPattern(N, tuple(range(kbar + 1, kbar + s + 1)), "worst-case", kbar=int(kbar))


def survivor_nodes(pattern: StragglerPattern) -> NodeSet:
    """Ascending survivor abscissae ``cos(j pi / N)`` for ``j`` not straggling."""
    z = chebyshev_second(pattern.N)
    # ascending position p holds worker N - p
    positions = np.sort(pattern.N - pattern.survivors)
    return z.subset(positions)


def mesh_params(nodes: NodeSet) -> MeshParams:
    """Largest gap ``h`` and local mesh ratio ``lam``.

    ``lam`` is the maximum over interior nodes ``i`` of the smaller of
    ``gap_i / gap_{i-1}`` and ``gap_i / gap_{i+1}``; a ratio that would need a
    gap beyond the last one is dropped. Two nodes have no interior node and
    give ``lam = 0``.
    """
    x = nodes.points if isinstance(nodes, NodeSet) else NodeSet(nodes).points
    if x.size < 2:
        raise InvalidInputError("mesh parameters need at least 2 nodes")
    gaps = np.diff(x)
    h = float(gaps.max())
    if gaps.size < 2:
        return MeshParams(h, 0.0)
    lam = 0.0
    for i in range(1, gaps.size):
        left = gaps[i] / gaps[i - 1]
        right = gaps[i] / gaps[i + 1] if i + 1 < gaps.size else np.inf
        lam = max(lam, min(left, right))
    return MeshParams(h, float(lam))


def error_bound(N: int, s: int, norm_g1: float, norm_g2: float) -> float:
    """Upper bound on ``max_z |r(z) - g(z)|`` for Berrut decoding with ``s``
    stragglers out of ``N + 1`` workers, given ``||g'||`` and ``||g''||`` on
    ``[-1, 1]``. The first-derivative term only enters when ``N - s`` is even.
    """
    N, s = _check_regime(N, s)
    if norm_g1 < 0 or norm_g2 < 0:
        raise InvalidParameterError("derivative norms must be nonnegative")
    _, R = _well_spaced_pair(s)
    lead = 2.0 * (1.0 + R) * np.sin((s + 1) * np.pi / (2 * N))
    if (N - s) % 2 == 1:
        return float(lead * norm_g2)
    return float(lead * (norm_g2 + norm_g1))


def derivative_norms(g, a: float = -1.0, b: float = 1.0, n_grid: int = 4001,
                     dg=None, d2g=None) -> tuple[float, float]:
    """Max norms ``(||g'||, ||g''||)`` on ``[a, b]``.

    Uses the analytic derivatives when given, otherwise second-order finite
    differences with step ``(b - a) / (n_grid - 1)``. ``g`` must accept an
    array of points.
    """
    n_grid = check_count(n_grid, "n_grid", minimum=5)
    x = np.linspace(a, b, n_grid)
    step = x[1] - x[0]
    if dg is not None and d2g is not None:
        return float(np.max(np.abs(dg(x)))), float(np.max(np.abs(d2g(x))))
    y = np.asarray(g(x), dtype=float)
    d1 = np.gradient(y, step, edge_order=2)
    d2 = np.empty_like(y)
    d2[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / step**2
    d2[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / step**2
    d2[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / step**2
    if dg is not None:
        d1 = np.asarray(dg(x), dtype=float)
    if d2g is not None:
        d2 = np.asarray(d2g(x), dtype=float)
    return float(np.max(np.abs(d1))), float(np.max(np.abs(d2)))
