"""Lagrange, barycentric and Berrut interpolants for scalar or matrix samples.

All barycentric variants (polynomial, rational with user weights, Berrut)
share a single evaluation path, :func:`barycentric_basis`, which costs
``O(n)`` per evaluation point. The direct Lagrange form is kept as the naive
``O(n^2)`` reference. Matrix-valued samples are interpolated entrywise, which
is exact because every formula here is linear in the samples.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import as_points, as_stack, check_finite_scalar
from .exceptions import (
    InvalidInputError,
    InvalidParameterError,
    NodeCoincidenceError,
    ShapeMismatchError,
)
from .pointsets import NodeSet, weights_general

#: ``|x - x_i| <= COINCIDENCE_RTOL * max(1, |x_i|)`` counts as hitting node i.
COINCIDENCE_RTOL = 1e-13


class Scheme(str, enum.Enum):
    LAGRANGE = "lagrange"
    BARYCENTRIC_POLY = "barycentric-poly"
    BARYCENTRIC_RATIONAL = "barycentric-rational"
    BERRUT = "berrut"


def alternating_signs(n_nodes: int) -> np.ndarray:
    """Berrut weights ``(-1)**i`` by ascending position."""
    return np.where(np.arange(n_nodes) % 2 == 0, 1.0, -1.0)


def _node_array(nodes) -> np.ndarray:
    if isinstance(nodes, NodeSet):
        return nodes.points
    return NodeSet(nodes).points


def _coincidences(x: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Index of the node each x coincides with, or -1."""
    diff = np.abs(x[:, None] - nodes[None, :])
    tol = COINCIDENCE_RTOL * np.maximum(1.0, np.abs(nodes))
    hits = diff <= tol[None, :]
    idx = np.where(hits.any(axis=1), np.argmin(np.where(hits, diff, np.inf), axis=1), -1)
    return idx


def barycentric_basis(x, nodes, weights) -> np.ndarray:
    """Cardinal basis values ``(w_i/(x-x_i)) / sum_j w_j/(x-x_j)``.

    Returns an array of shape ``(len(x), len(nodes))``. Rows for points that
    coincide with a node are the corresponding unit vector.
    """
    x = as_points(x)
    xn = _node_array(nodes)
    w = np.asarray(weights, dtype=float)
    if w.shape != xn.shape:
        raise ShapeMismatchError(f"{w.size} weights for {xn.size} nodes")
    hit = _coincidences(x, xn)
    free = hit < 0
    out = np.zeros((x.size, xn.size))
    if free.any():
        terms = w[None, :] / (x[free, None] - xn[None, :])
        out[free] = terms / terms.sum(axis=1, keepdims=True)
    rows = np.flatnonzero(~free)
    out[rows, hit[rows]] = 1.0
    return out


def lagrange_basis(x, nodes) -> np.ndarray:
    """Direct product form of the Lagrange basis, ``O(n^2)`` per point."""
    x = as_points(x)
    xn = _node_array(nodes)
    n = xn.size
    out = np.empty((x.size, n))
    for j in range(n):
        others = np.delete(xn, j)
        out[:, j] = np.prod((x[:, None] - others) / (xn[j] - others), axis=1)
    # the product form is exact at nodes only up to rounding
    hit = _coincidences(x, xn)
    rows = np.flatnonzero(hit >= 0)
    out[rows] = 0.0
    out[rows, hit[rows]] = 1.0
    return out


def scheme_weights(scheme, nodes, weights=None) -> np.ndarray | None:
    scheme = Scheme(scheme)
    xn = _node_array(nodes)
    if scheme is Scheme.BERRUT:
        return alternating_signs(xn.size)
    if scheme is Scheme.BARYCENTRIC_POLY:
        return weights_general(NodeSet(xn), normalize=True)
    if scheme is Scheme.BARYCENTRIC_RATIONAL:
        if weights is None:
            raise InvalidParameterError("barycentric-rational needs explicit weights")
        w = np.asarray(weights, dtype=float)
        if w.shape != xn.shape:
            raise ShapeMismatchError(f"{w.size} weights for {xn.size} nodes")
        if np.any(w == 0) or not np.all(np.isfinite(w)):
            raise InvalidParameterError("rational weights must be finite and nonzero")
        return w
    return None


def basis_matrix(scheme, nodes, x, weights=None) -> np.ndarray:
    """All basis functions of ``scheme`` at every point of ``x``."""
    scheme = Scheme(scheme)
    if scheme is Scheme.LAGRANGE:
        return lagrange_basis(x, nodes)
    return barycentric_basis(x, nodes, scheme_weights(scheme, nodes, weights))


def basis(scheme, nodes, i: int, x, weights=None):
    """Value of the ``i``-th cardinal basis function at ``x``."""
    xn = _node_array(nodes)
    if not 0 <= i < xn.size:
        raise IndexError(f"basis index {i} out of range for {xn.size} nodes")
    values = basis_matrix(scheme, xn, x, weights)[:, i]
    return float(values[0]) if np.ndim(x) == 0 else values


def berrut_denominator(nodes, x):
    """``sum_j (-1)**j / (x - x_j)`` over ascending nodes.

    This is Berrut's denominator with the node polynomial ``L(x)`` divided
    out; it never vanishes between or outside the nodes.
    """
    xn = _node_array(nodes)
    pts = as_points(x)
    if np.any(_coincidences(pts, xn) >= 0):
        raise NodeCoincidenceError("denominator is undefined at an interpolation node")
    vals = (alternating_signs(xn.size)[None, :] / (pts[:, None] - xn[None, :])).sum(axis=1)
    return float(vals[0]) if np.ndim(x) == 0 else vals


@dataclass(frozen=True, eq=False)
class Interpolant:
    """Nodes, aligned samples and an interpolation scheme.

    ``values`` has shape ``(len(nodes),) + item_shape``; scalar samples have
    an empty item shape. Calling the interpolant evaluates it.
    """

    nodes: NodeSet
    values: np.ndarray
    scheme: Scheme = Scheme.BERRUT
    weights: np.ndarray | None = None

    def __post_init__(self):
        nodes = self.nodes if isinstance(self.nodes, NodeSet) else NodeSet(self.nodes)
        values = as_stack(self.values)
        if values.shape[0] != len(nodes):
            raise ShapeMismatchError(f"{values.shape[0]} samples for {len(nodes)} nodes")
        scheme = Scheme(self.scheme)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "scheme", scheme)
        object.__setattr__(self, "weights", scheme_weights(scheme, nodes, self.weights))

    @property
    def item_shape(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    def basis_matrix(self, x) -> np.ndarray:
        if self.scheme is Scheme.LAGRANGE:
            return lagrange_basis(x, self.nodes)
        return barycentric_basis(x, self.nodes, self.weights)

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(interpolant: Interpolant, x):
    """Evaluate an interpolant at a scalar or 1-D array of points.

    A scalar ``x`` returns one sample-shaped value (a float for scalar
    samples); an array returns a stacked array of shape ``(len(x),) +
    item_shape``. Points on a node return that node's sample exactly.
    """
    if np.ndim(x) == 0:
        check_finite_scalar(x)
    B = interpolant.basis_matrix(x)
    flat = interpolant.values.reshape(len(interpolant.nodes), -1)
    out = (B @ flat).reshape((B.shape[0],) + interpolant.item_shape)
    # exact interpolation condition, free of 0 * inf or rounding in B @ flat
    hit = _coincidences(as_points(x), interpolant.nodes.points)
    rows = np.flatnonzero(hit >= 0)
    out[rows] = interpolant.values[hit[rows]]
    if np.ndim(x) == 0:
        return float(out[0]) if out[0].ndim == 0 else out[0]
    return out


class Interpolator(RegressorMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` on (nodes, samples), ``predict`` anywhere.

    Parameters
    ----------
    scheme : {"berrut", "barycentric-poly", "barycentric-rational", "lagrange"}
        Interpolation formula.
    weights : array_like, optional
        Barycentric weights, required for ``"barycentric-rational"``.

    Examples
    --------
    >>> import numpy as np
    >>> Interpolator().fit([-1.0, 0.0, 1.0], [1.0, 0.0, 1.0]).predict([0.5])
    array([0.4])
    """

    def __init__(self, scheme="berrut", weights=None):
        self.scheme = scheme
        self.weights = weights

    def fit(self, X, y):
        x = _as_abscissae(X)
        values = as_stack(y, "y")
        if values.shape[0] != x.size:
            raise ShapeMismatchError(f"{x.size} nodes but {values.shape[0]} samples")
        order = np.argsort(x, kind="stable")
        weights = None if self.weights is None else np.asarray(self.weights, float)[order]
        self.interpolant_ = Interpolant(NodeSet(x[order]), values[order], self.scheme, weights)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "interpolant_")
        return evaluate(self.interpolant_, _as_abscissae(X))


def _as_abscissae(X) -> np.ndarray:
    arr = check_array(X, ensure_2d=False, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise InvalidInputError("interpolation abscissae must be a single feature")
        arr = arr[:, 0]
    return np.atleast_1d(arr)
