"""Interpolation node families and their barycentric weights.

Nodes are always stored in ascending order. The textbook Chebyshev formulas
index nodes in descending order (``cos`` decreases with the index); where a
weight formula carries a sign ``(-1)**j`` we attach the parity to the stored
(ascending) position instead. Barycentric formulas are invariant under a
global sign flip of the weights, so only the alternation matters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_count
from .exceptions import (
    DegenerateNodesError,
    InvalidIntervalError,
    InvalidInputError,
    UnsupportedKindError,
)

#: Nodes closer than ``DUPLICATE_RTOL * (b - a)`` are treated as duplicates.
DUPLICATE_RTOL = 1e-12


class NodeKind(str, enum.Enum):
    CHEBYSHEV_FIRST = "chebyshev-first"
    CHEBYSHEV_SECOND = "chebyshev-second"
    EQUIDISTANT = "equidistant"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class NodeSet:
    """An ordered set of distinct interpolation abscissae.

    Parameters
    ----------
    points : array_like
        Node abscissae. They are sorted on construction.
    interval : tuple of float, optional
        Enclosing interval ``(a, b)``. Defaults to the hull of ``points``.
    kind : NodeKind
        Provenance tag.
    """

    points: np.ndarray
    interval: tuple[float, float] | None = None
    kind: NodeKind = NodeKind.CUSTOM

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float).ravel())
        if pts.size == 0:
            raise InvalidInputError("a node set needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("nodes must be finite")
        if self.interval is None:
            a, b = float(pts[0]), float(pts[-1])
        else:
            a, b = (float(v) for v in self.interval)
        if a > b or (a == b and pts.size > 1):
            raise InvalidIntervalError(f"invalid interval ({a}, {b})")
        if pts[0] < a or pts[-1] > b:
            raise InvalidIntervalError(f"nodes fall outside interval ({a}, {b})")
        if pts.size > 1 and np.min(np.diff(pts)) <= DUPLICATE_RTOL * (b - a):
            raise DegenerateNodesError("node set contains (near-)duplicate points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "kind", NodeKind(self.kind))

    def __len__(self) -> int:
        return self.points.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.points, dtype=dtype)

    @property
    def n(self) -> int:
        """Polynomial degree associated with the set (node count minus one)."""
        return self.points.size - 1

    def subset(self, positions) -> "NodeSet":
        """Return the nodes at the given positions, keeping the interval."""
        return NodeSet(self.points[np.asarray(positions, dtype=int)], self.interval)


def chebyshev_first(K: int) -> NodeSet:
    """``K`` Chebyshev points of the first kind, ``cos((2j+1)pi/2K)``.

    Computed through the equivalent sine form so that the set is exactly
    symmetric about the origin.
    """
    K = check_count(K, "K")
    j = np.arange(K)
    pts = np.sin(np.pi * (2 * j - (K - 1)) / (2 * K))
    return NodeSet(pts, (-1.0, 1.0), NodeKind.CHEBYSHEV_FIRST)


def worker_abscissae(N: int) -> np.ndarray:
    """Evaluation points ``z_i = cos(i pi / N)`` indexed by worker ``i``.

    The values are bitwise identical to ``chebyshev_second(N).points[::-1]``.
    """
    N = check_count(N, "N")
    i = np.arange(N + 1)
    return np.sin(np.pi * (N - 2 * i) / (2 * N))


def chebyshev_second(N: int) -> NodeSet:
    """``N + 1`` Chebyshev points of the second kind, ``cos(i pi / N)``."""
    return NodeSet(worker_abscissae(N)[::-1], (-1.0, 1.0), NodeKind.CHEBYSHEV_SECOND)


def equidistant(n: int, a: float = -1.0, b: float = 1.0) -> NodeSet:
    """``n + 1`` evenly spaced points from ``a`` to ``b`` inclusive."""
    n = check_count(n, "n")
    a, b = float(a), float(b)
    if not a < b:
        raise InvalidIntervalError(f"need a < b, got ({a}, {b})")
    pts = np.linspace(a, b, n + 1)
    return NodeSet(pts, (a, b), NodeKind.EQUIDISTANT)


def custom(points, interval: tuple[float, float] | None = None) -> NodeSet:
    return NodeSet(points, interval, NodeKind.CUSTOM)


def weights_general(nodes: NodeSet, normalize: bool = False) -> np.ndarray:
    """Barycentric weights ``w_i = 1 / prod_{k != i} (x_i - x_k)``.

    Magnitudes are accumulated as sums of logarithms so that no intermediate
    product over- or underflows. With ``normalize=True`` the weights are
    divided by their largest magnitude; the common factor cancels in every
    barycentric formula. Without normalization the true weights are returned,
    which can themselves under/overflow for large, badly spread node sets.
    """
    x = np.asarray(nodes.points if isinstance(nodes, NodeSet) else NodeSet(nodes).points)
    n = x.size
    if n == 1:
        return np.ones(1)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    absdiff = np.abs(diff)
    if np.any(absdiff == 0.0):
        raise DegenerateNodesError("duplicate nodes")
    logmag = -np.log(absdiff).sum(axis=1)
    # ascending nodes: x_i - x_k < 0 exactly for the n - 1 - i nodes above i
    sign = np.where((n - 1 - np.arange(n)) % 2 == 0, 1.0, -1.0)
    if normalize:
        logmag = logmag - logmag.max()
    return sign * np.exp(logmag)


def weights_explicit(kind, n: int) -> np.ndarray:
    """Closed-form barycentric weights for the standard node families.

    ``n`` is the polynomial degree, so ``n + 1`` weights are returned, aligned
    with the ascending storage order of :func:`chebyshev_first` (``n + 1``
    points), :func:`chebyshev_second` and :func:`equidistant`.
    Equidistant weights are the binomials scaled by the central one, so they
    stay finite for any ``n``.
    """
    try:
        kind = NodeKind(kind)
    except ValueError:
        raise UnsupportedKindError(f"unknown node kind {kind!r}") from None
    n = check_count(n, "n", minimum=0)
    p = np.arange(n + 1)
    sign = np.where(p % 2 == 0, 1.0, -1.0)
    if kind is NodeKind.CHEBYSHEV_FIRST:
        return sign * np.sin((2 * p + 1) * np.pi / (2 * n + 2))
    if kind is NodeKind.CHEBYSHEV_SECOND:
        delta = np.ones(n + 1)
        delta[0] = delta[-1] = 0.5
        return sign * delta
    if kind is NodeKind.EQUIDISTANT:
        central = math.comb(n, n // 2)
        return sign * np.array([math.comb(n, int(j)) / central for j in p])
    raise UnsupportedKindError(f"no closed-form weights for kind {kind.value!r}")
