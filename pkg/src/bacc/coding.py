"""Berrut approximated coded computing: encoding, decoding, share I/O, and the
Lagrange coded computing baseline.

The master holds ``K`` equally shaped matrices ``X_0..X_{K-1}`` and ``N + 1``
workers. Encoding builds the Berrut rational function ``u`` with
``u(alpha_j) = X_j`` on Chebyshev points of the first kind and hands worker
``i`` the payload ``u(z_i)``, ``z_i = cos(i pi / N)``. Whatever subset of
workers answers, the master Berrut-interpolates their results over the
surviving ``z_i`` and reads the approximations of ``f(X_j)`` off at the
``alpha_j``. There is no recovery threshold.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_stack, check_count
from .exceptions import (
    EmptySurvivorSetError,
    InvalidInputError,
    InvalidParameterError,
    RecoveryThresholdError,
    ShapeMismatchError,
)
from .functions import FunctionSpec
from .interpolants import Interpolant, Scheme, alternating_signs, barycentric_basis
from .pointsets import NodeSet, chebyshev_first, equidistant, weights_general, worker_abscissae

NODE_FAMILIES = ("chebyshev", "equidistant")


def encode_points(K: int, family: str = "chebyshev") -> NodeSet:
    """Abscissae the data are attached to: Chebyshev first kind, or ``K``
    equidistant points on ``[-1, 1]``."""
    K = check_count(K, "K")
    if family == "chebyshev":
        return chebyshev_first(K)
    if family == "equidistant":
        return equidistant(K - 1) if K > 1 else NodeSet([0.0], (-1.0, 1.0))
    raise InvalidParameterError(f"unknown node family {family!r}")


def worker_points(N: int, family: str = "chebyshev") -> np.ndarray:
    """Evaluation abscissa of each worker, indexed by worker."""
    if family == "chebyshev":
        return worker_abscissae(N)
    if family == "equidistant":
        return equidistant(check_count(N, "N")).points.copy()
    raise InvalidParameterError(f"unknown node family {family!r}")


@dataclass(frozen=True, eq=False)
class Encoder:
    """The rational encoding function ``u`` for one dataset.

    ``data[j]`` is attached to ``alphas.points[j]`` (ascending order).
    """

    data: np.ndarray
    alphas: NodeSet

    def __post_init__(self):
        data = as_stack(self.data, "data")
        if data.shape[0] != len(self.alphas):
            raise ShapeMismatchError(f"{data.shape[0]} data items for {len(self.alphas)} alphas")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "_u", Interpolant(self.alphas, data, Scheme.BERRUT))

    @property
    def K(self) -> int:
        return self.data.shape[0]

    @property
    def item_shape(self) -> tuple[int, ...]:
        return self.data.shape[1:]

    def __call__(self, z):
        return self._u(z)


def make_encoder(data, family: str = "chebyshev") -> Encoder:
    """Build ``u`` for a list of equally shaped matrices (or scalars)."""
    data = as_stack(data, "data")
    return Encoder(data, encode_points(data.shape[0], family))


@dataclass(frozen=True, eq=False)
class CodedShare:
    """One worker's coded input: worker index, abscissa and payload ``u(z)``."""

    worker: int
    z: float
    payload: np.ndarray


def encode_shares(encoder: Encoder, N: int, abscissae=None) -> list[CodedShare]:
    """Payload ``u(z_i)`` for every worker ``i = 0..N``.

    ``abscissae`` overrides the default ``z_i = cos(i pi / N)``.
    """
    N = check_count(N, "N")
    z = worker_abscissae(N) if abscissae is None else np.asarray(abscissae, dtype=float)
    if z.shape != (N + 1,):
        raise ShapeMismatchError(f"need {N + 1} worker abscissae, got {z.shape}")
    payloads = encoder(z)
    return [CodedShare(i, float(z[i]), payloads[i]) for i in range(N + 1)]


@dataclass(frozen=True, eq=False)
class DecodeInput:
    """Results returned by the surviving workers.

    ``results[k]`` is the result of worker ``survivors[k]``. ``abscissae``
    holds every worker's ``z`` (default Chebyshev second kind); ``failed``
    lists workers whose result was discarded as non-finite.
    """

    survivors: tuple[int, ...]
    results: np.ndarray
    N: int
    abscissae: np.ndarray | None = None
    failed: tuple[int, ...] = field(default=())

    def __post_init__(self):
        survivors = tuple(int(i) for i in self.survivors)
        if len(set(survivors)) != len(survivors):
            raise InvalidInputError("duplicate survivor indices")
        if any(i < 0 or i > self.N for i in survivors):
            raise InvalidInputError(f"survivor index outside [0, {self.N}]")
        results = np.asarray(self.results, dtype=float) if survivors else np.empty((0,))
        if survivors:
            results = as_stack(results, "results")
            if results.shape[0] != len(survivors):
                raise ShapeMismatchError(f"{results.shape[0]} results for {len(survivors)} survivors")
        z = worker_abscissae(self.N) if self.abscissae is None else np.asarray(self.abscissae, float)
        object.__setattr__(self, "survivors", survivors)
        object.__setattr__(self, "results", results)
        object.__setattr__(self, "abscissae", z)


def decoding_matrix(z_survivors, alphas) -> tuple[np.ndarray, np.ndarray]:
    """Berrut basis over the surviving abscissae, evaluated at each alpha.

    Returns ``(B, order)`` where ``order`` sorts the survivors ascending in
    ``z`` and ``B[j, p]`` weighs the ``p``-th sorted survivor for output ``j``.
    """
    z = np.asarray(z_survivors, dtype=float)
    order = np.argsort(z, kind="stable")
    zs = z[order]
    a = alphas.points if isinstance(alphas, NodeSet) else np.asarray(alphas, float)
    return barycentric_basis(a, NodeSet(zs, (min(zs[0], -1.0), max(zs[-1], 1.0))),
                             alternating_signs(zs.size)), order


def decode(inp: DecodeInput, alphas: NodeSet) -> np.ndarray:
    """Approximate ``f(X_j)`` for every ``j`` from the survivors' results.

    Returns an array of shape ``(K,) + item_shape``. Independent of the
    order in which the survivors are listed.
    """
    if not inp.survivors:
        raise EmptySurvivorSetError("no worker results to decode")
    idx = np.asarray(inp.survivors)
    B, order = decoding_matrix(inp.abscissae[idx], alphas)
    res = inp.results[order]
    flat = res.reshape(res.shape[0], -1)
    return (B @ flat).reshape((B.shape[0],) + res.shape[1:])


# -- binary share format ----------------------------------------------------

_HEADER = struct.Struct("<idii")


def share_to_bytes(share: CodedShare) -> bytes:
    """Header (int32 worker, float64 z, int32 rows, int32 cols), little-endian,
    followed by the payload as row-major float64."""
    payload = np.asarray(share.payload, dtype="<f8")
    mat = payload.reshape(1, -1) if payload.ndim < 2 else payload
    if mat.ndim != 2:
        raise ShapeMismatchError(f"payload must be at most 2-D, got {payload.shape}")
    rows, cols = mat.shape
    return _HEADER.pack(share.worker, share.z, rows, cols) + np.ascontiguousarray(mat).tobytes()


def share_from_bytes(buf: bytes, offset: int = 0) -> tuple[CodedShare, int]:
    if len(buf) - offset < _HEADER.size:
        raise InvalidInputError("truncated share header")
    worker, z, rows, cols = _HEADER.unpack_from(buf, offset)
    offset += _HEADER.size
    nbytes = 8 * rows * cols
    if rows < 0 or cols < 0 or len(buf) - offset < nbytes:
        raise InvalidInputError("truncated share payload")
    payload = np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
    return CodedShare(worker, z, payload.astype(float)), offset + nbytes


def shares_to_bytes(shares) -> bytes:
    return b"".join(share_to_bytes(s) for s in shares)


def shares_from_bytes(buf: bytes) -> list[CodedShare]:
    out, offset = [], 0
    while offset < len(buf):
        share, offset = share_from_bytes(buf, offset)
        out.append(share)
    return out


def read_shares(path) -> list[CodedShare]:
    return shares_from_bytes(Path(path).read_bytes())


# -- Lagrange coded computing baseline ----------------------------------------


@dataclass(frozen=True)
class LCCResult:
    values: np.ndarray
    workers_used: tuple[int, ...]
    weight_ratio: float
    vandermonde_cond: float | None = None


def lcc_threshold(K: int, degree: int) -> int:
    """Results needed to recover ``f(u(z))`` exactly: ``(K-1) deg f + 1``."""
    return (K - 1) * degree + 1


def lcc_roundtrip(data, f, N: int, survivors, encode_family: str = "chebyshev",
                  worker_family: str = "equidistant", method: str = "barycentric") -> LCCResult:
    """Encode with a Lagrange polynomial, evaluate ``f`` on the survivors and
    interpolate ``g(z) = f(u(z))`` from the first ``(K-1) deg f + 1`` of them.

    Parameters
    ----------
    data : sequence of matrices
    f : FunctionSpec or sequence of float
        Polynomial worker function (coefficients in ascending powers).
    N : int
        Workers are ``0..N``.
    survivors : StragglerPattern or sequence of int
        Responding workers in arrival order.
    method : {"barycentric", "vandermonde"}
        Decode by barycentric interpolation, or by solving the monomial
        Vandermonde system.

    Raises
    ------
    RecoveryThresholdError
        Fewer survivors than the recovery threshold.
    """
    if not isinstance(f, FunctionSpec):
        f = FunctionSpec.polynomial(f)
    if f.degree is None:
        raise InvalidParameterError("Lagrange coded computing needs a polynomial f")
    X = as_stack(data, "data")
    K = X.shape[0]
    N = check_count(N, "N")
    order = survivors.survivors if hasattr(survivors, "survivors") else survivors
    order = [int(i) for i in order]
    T = lcc_threshold(K, max(f.degree, 1))
    if len(order) < T:
        raise RecoveryThresholdError(
            f"{len(order)} results received, Lagrange decoding needs {T}"
        )
    alphas = encode_points(K, encode_family)
    beta = worker_points(N, worker_family)
    flat = X.reshape(K, -1)
    enc_w = weights_general(alphas, normalize=True)
    used = np.asarray(order[:T])
    coded = barycentric_basis(beta[used], alphas, enc_w) @ flat
    results = np.stack([np.asarray(f(c.reshape(X.shape[1:])), float).reshape(-1) for c in coded])
    dec_nodes = NodeSet(beta[used], (-1.0, 1.0))
    dec_w = weights_general(dec_nodes, normalize=True)
    ratio = float(np.max(np.abs(dec_w)) / np.min(np.abs(dec_w)))
    cond = None
    if method == "barycentric":
        perm = np.argsort(beta[used], kind="stable")
        out = barycentric_basis(alphas.points, dec_nodes, dec_w) @ results[perm]
    elif method == "vandermonde":
        V = np.vander(beta[used], T, increasing=True)
        coeffs = np.linalg.solve(V, results)
        out = P.polyval(alphas.points, coeffs).T if coeffs.ndim > 1 else P.polyval(alphas.points, coeffs)
        out = np.asarray(out).reshape(K, -1)
        cond = float(np.linalg.cond(V))
    else:
        raise InvalidParameterError(f"unknown decode method {method!r}")
    out_shape = np.asarray(f(X[0])).shape
    return LCCResult(out.reshape((K,) + out_shape), tuple(int(i) for i in used), ratio, cond)


# -- estimator ----------------------------------------------------------------


class BACCCoder(TransformerMixin, BaseEstimator):
    """Estimator-style front end to the encoder and decoder.

    ``fit`` fixes the node sets for ``K`` data items of a given shape,
    ``transform`` maps the ``K`` items to the ``N + 1`` coded payloads, and
    ``inverse_transform`` decodes worker results (optionally from a subset
    of workers) back to ``K`` approximations.

    Parameters
    ----------
    n_workers : int
        ``N``; workers are indexed ``0..N``.
    node_family : {"chebyshev", "equidistant"}
    """

    def __init__(self, n_workers=10, node_family="chebyshev"):
        self.n_workers = n_workers
        self.node_family = node_family

    def fit(self, X, y=None):
        data = as_stack(X, "X")
        check_count(self.n_workers, "n_workers")
        self.alphas_ = encode_points(data.shape[0], self.node_family)
        self.abscissae_ = worker_points(self.n_workers, self.node_family)
        self.item_shape_ = data.shape[1:]
        self.n_items_ = data.shape[0]
        return self

    def _encoder(self, X) -> Encoder:
        check_is_fitted(self, "alphas_")
        data = as_stack(X, "X")
        if data.shape[0] != self.n_items_ or data.shape[1:] != self.item_shape_:
            raise ShapeMismatchError(
                f"expected {self.n_items_} items of shape {self.item_shape_}, got {data.shape}"
            )
        return Encoder(data, self.alphas_)

    def transform(self, X):
        return self._encoder(X)(self.abscissae_)

    def shares(self, X) -> list[CodedShare]:
        return encode_shares(self._encoder(X), self.n_workers, self.abscissae_)

    def inverse_transform(self, results, survivors=None):
        check_is_fitted(self, "alphas_")
        if survivors is None:
            survivors = range(self.n_workers + 1)
        inp = DecodeInput(tuple(survivors), results, self.n_workers, self.abscissae_)
        return decode(inp, self.alphas_)
