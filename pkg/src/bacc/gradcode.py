"""Approximate gradient coding for a one-hidden-layer network.

The dataset is split into ``K`` equal batches. Each of the ``N + 1`` workers
receives a Berrut combination of the batches (features, and labels either
linearly combined or in the normalised classification form) and returns
the gradient of the loss on that coded batch. The master Berrut-interpolates
the gradients of whichever workers answered, evaluates the interpolant at the
batch abscissae and sums, which approximates the full-batch gradient.

Replication and no-redundancy baselines, and an exact full-gradient
reference, share the same training loop.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import check_count
from .coding import decoding_matrix, encode_points, worker_points
from .exceptions import (
    EmptySurvivorSetError,
    InfeasibleLayoutError,
    InvalidInputError,
    InvalidParameterError,
    InvalidPartitionError,
    ShapeMismatchError,
)
from .interpolants import alternating_signs, barycentric_basis
from .simulator import sample_stragglers, substream

ACTIVATIONS = ("sigmoid", "tanh", "relu", "linear")
LOSSES = ("mse", "sigmoid-cross-entropy")
SCHEMES = ("bacc", "replication", "none", "full")
SCHEME_ALIASES = {"no-redundancy": "none", "uncoded-full": "full"}
SYNTHETIC_SAMPLES = 256


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _activate(name: str, a: np.ndarray) -> np.ndarray:
    if name == "sigmoid":
        return _sigmoid(a)
    if name == "tanh":
        return np.tanh(a)
    if name == "relu":
        return np.maximum(a, 0.0)
    return a


def _activate_grad(name: str, a: np.ndarray) -> np.ndarray:
    if name == "sigmoid":
        s = _sigmoid(a)
        return s * (1.0 - s)
    if name == "tanh":
        return 1.0 - np.tanh(a) ** 2
    if name == "relu":
        return (a > 0).astype(float)
    return np.ones_like(a)


@dataclass(frozen=True)
class ModelParams:
    """Weights of ``x -> W2 act(W1 x)`` (no biases)."""

    W1: np.ndarray
    W2: np.ndarray
    activation: str = "sigmoid"

    def __post_init__(self):
        W1 = np.asarray(self.W1, dtype=float)
        W2 = np.asarray(self.W2, dtype=float)
        if W1.ndim != 2 or W2.ndim != 2 or W2.shape[1] != W1.shape[0]:
            raise ShapeMismatchError(f"inconsistent layer shapes {W1.shape}, {W2.shape}")
        if not (np.all(np.isfinite(W1)) and np.all(np.isfinite(W2))):
            raise InvalidParameterError("weights must be finite")
        if self.activation not in ACTIVATIONS:
            raise InvalidParameterError(f"activation must be one of {ACTIVATIONS}")
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "W2", W2)

    @classmethod
    def random(cls, d: int, hidden: int, outputs: int, rng, activation: str = "sigmoid",
               scale: float = 1.0) -> "ModelParams":
        W1 = rng.normal(0.0, scale / np.sqrt(d), size=(hidden, d))
        W2 = rng.normal(0.0, scale / np.sqrt(hidden), size=(outputs, hidden))
        return cls(W1, W2, activation)

    def predict(self, X) -> np.ndarray:
        return _activate(self.activation, np.asarray(X, float) @ self.W1.T) @ self.W2.T


@dataclass(frozen=True)
class GradientSet:
    """Per-layer gradients ``(dJ/dW1, dJ/dW2)``."""

    dW1: np.ndarray
    dW2: np.ndarray

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.dW1)) and np.all(np.isfinite(self.dW2)))

    def __add__(self, other: "GradientSet") -> "GradientSet":
        return GradientSet(self.dW1 + other.dW1, self.dW2 + other.dW2)

    def scale(self, c: float) -> "GradientSet":
        return GradientSet(c * self.dW1, c * self.dW2)


@dataclass(frozen=True)
class Minibatch:
    X: np.ndarray
    Y: np.ndarray
    index: int


@dataclass(frozen=True)
class CodedBatch:
    """Worker ``worker``'s coded batch; ``mu[j]`` weighs raw batch ``j``."""

    worker: int
    z: float
    X: np.ndarray
    Y: np.ndarray
    mu: np.ndarray


def make_synthetic(n: int = SYNTHETIC_SAMPLES, d: int = 8, hidden: int = 16, outputs: int = 1,
                   noise: float = 0.05, rng=None, seed: int = 0):
    """Regression data from a random sigmoid teacher network plus Gaussian noise."""
    rng = substream(seed, 4) if rng is None else rng
    teacher = ModelParams.random(d, hidden, outputs, rng, "sigmoid", scale=2.0)
    X = rng.normal(size=(n, d))
    Y = teacher.predict(X) + noise * rng.normal(size=(n, outputs))
    return X, Y


def partition_dataset(X, Y, K: int) -> list[Minibatch]:
    """Contiguous, equal-size split into ``K`` batches."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
    K = check_count(K, "K")
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatchError(f"{X.shape[0]} samples but {Y.shape[0]} labels")
    n = X.shape[0]
    if n % K:
        raise InvalidPartitionError(f"K={K} does not divide n={n}")
    B = n // K
    return [Minibatch(X[j * B:(j + 1) * B], Y[j * B:(j + 1) * B], j) for j in range(K)]


def coding_coefficients(K: int, N: int) -> np.ndarray:
    """``mu[r, j]``: Berrut basis of batch abscissa ``j`` evaluated at worker
    ``r``'s abscissa. Each row sums to one."""
    alphas = encode_points(K)
    return barycentric_basis(worker_points(N), alphas, alternating_signs(K))


def code_labels(Ys: np.ndarray, mu: np.ndarray, mode: str = "regression") -> np.ndarray:
    """Combine stacked label matrices ``Ys[j]`` with weights ``mu[j]``.

    ``"classification"`` takes the absolute value of the combination and
    rescales each row to unit L1 norm so it stays a distribution.
    """
    y = np.tensordot(mu, Ys, axes=1)
    if mode == "regression":
        return y
    if mode != "classification":
        raise InvalidParameterError(f"unknown label mode {mode!r}")
    y = np.abs(y)
    norm = y.sum(axis=-1, keepdims=True)
    return np.divide(y, norm, out=np.zeros_like(y), where=norm > 0)


def encode_batches(batches: list[Minibatch], N: int, label_mode: str = "regression") -> list[CodedBatch]:
    K = len(batches)
    if K == 0:
        raise InvalidInputError("no batches to encode")
    shapes = {(b.X.shape, b.Y.shape) for b in batches}
    if len(shapes) != 1:
        raise ShapeMismatchError("batches must share one shape")
    mu = coding_coefficients(K, N)
    z = worker_points(N)
    Xs = np.stack([b.X for b in batches])
    Ys = np.stack([b.Y for b in batches])
    return [CodedBatch(r, float(z[r]), np.tensordot(mu[r], Xs, axes=1),
                       code_labels(Ys, mu[r], label_mode), mu[r].copy())
            for r in range(N + 1)]


def loss_value(params: ModelParams, X, Y, loss: str = "mse") -> float:
    """Summed loss over the rows of ``X`` (``1/2 ||out - y||^2`` for mse)."""
    out = params.predict(X)
    Y = np.asarray(Y, float).reshape(out.shape)
    if loss == "mse":
        return float(0.5 * np.sum((out - Y) ** 2))
    if loss == "sigmoid-cross-entropy":
        return float(np.sum(np.logaddexp(0.0, out) - Y * out))
    raise InvalidParameterError(f"loss must be one of {LOSSES}")


def worker_gradient(batch, params: ModelParams, loss: str = "mse") -> GradientSet:
    """Backpropagated gradient of the summed loss on one (coded) batch.

    Non-finite values are returned as they are; callers check
    :attr:`GradientSet.finite` and treat such a worker as failed.
    """
    if loss not in LOSSES:
        raise InvalidParameterError(f"loss must be one of {LOSSES}")
    X = np.asarray(batch.X, dtype=float)
    A1 = X @ params.W1.T
    S1 = _activate(params.activation, A1)
    out = S1 @ params.W2.T
    Y = np.asarray(batch.Y, dtype=float).reshape(out.shape)
    delta_out = out - Y if loss == "mse" else _sigmoid(out) - Y
    dW2 = delta_out.T @ S1
    delta1 = (delta_out @ params.W2) * _activate_grad(params.activation, A1)
    return GradientSet(delta1.T @ X, dW2)


def decode_gradient(results: list[GradientSet], survivors, N: int, K: int) -> GradientSet:
    """Approximate ``sum_j g(X_j)`` from the survivors' coded gradients."""
    survivors = list(survivors)
    if not survivors:
        raise EmptySurvivorSetError("no worker gradients to decode")
    if len(results) != len(survivors):
        raise ShapeMismatchError(f"{len(results)} results for {len(survivors)} survivors")
    z = worker_points(N)[np.asarray(survivors)]
    B, order = decoding_matrix(z, encode_points(K))
    c = B.sum(axis=0)  # interpolate, evaluate at every alpha, then sum
    dW1 = np.tensordot(c, np.stack([results[k].dW1 for k in order]), axes=1)
    dW2 = np.tensordot(c, np.stack([results[k].dW2 for k in order]), axes=1)
    return GradientSet(dW1, dW2)


def sgd_step(params: ModelParams, grad: GradientSet, eta: float, dataset_size: int) -> ModelParams:
    """``W <- W - (eta / |D|) grad`` for both layers."""
    if eta < 0:
        raise InvalidParameterError("eta must be nonnegative")
    c = eta / check_count(dataset_size, "dataset_size")
    return replace(params, W1=params.W1 - c * grad.dW1, W2=params.W2 - c * grad.dW2)


def replication_layout(K: int, N: int, s: int) -> list[list[int]]:
    """Workers holding each batch: ``s + 1`` consecutive workers, round-robin."""
    if s + 1 > N + 1:
        raise InfeasibleLayoutError(f"{s + 1} replicas per batch need more than {N + 1} workers")
    return [[(j * (s + 1) + r) % (N + 1) for r in range(s + 1)] for j in range(K)]


@dataclass(frozen=True)
class TrainConfig:
    scheme: str = "bacc"
    N: int = 5
    K: int = 4
    s: int = 0
    epochs: int = 50
    eta: float = 0.1
    seed: int = 0
    hidden: int = 16
    activation: str = "sigmoid"
    loss: str = "mse"
    label_mode: str = "regression"

    def __post_init__(self):
        scheme = SCHEME_ALIASES.get(self.scheme, self.scheme)
        if scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {SCHEMES}")
        object.__setattr__(self, "scheme", scheme)
        check_count(self.N, "N")
        check_count(self.K, "K")
        check_count(self.epochs, "epochs", minimum=0)
        check_count(self.hidden, "hidden")
        if check_count(self.s, "s", minimum=0) > self.N:
            raise InvalidParameterError(f"s={self.s} leaves no worker among {self.N + 1}")
        if not self.eta > 0:
            raise InvalidParameterError("eta must be positive")
        if self.loss not in LOSSES:
            raise InvalidParameterError(f"loss must be one of {LOSSES}")
        if self.activation not in ACTIVATIONS:
            raise InvalidParameterError(f"activation must be one of {ACTIVATIONS}")


@dataclass(frozen=True)
class TrainResult:
    losses: np.ndarray  # mean training loss after 0..epochs updates
    params: ModelParams
    failures: int = 0


def _epoch_gradient(cfg: TrainConfig, params, batches, coded, survivors) -> tuple[GradientSet, int]:
    if cfg.scheme == "full":
        grads = [worker_gradient(b, params, cfg.loss) for b in batches]
        return sum(grads[1:], grads[0]), 0
    alive = set(int(i) for i in survivors)
    if cfg.scheme == "bacc":
        ids, results, failed = [], [], 0
        for r in sorted(alive):
            g = worker_gradient(coded[r], params, cfg.loss)
            if g.finite:
                ids.append(r)
                results.append(g)
            else:
                failed += 1
        return decode_gradient(results, ids, cfg.N, cfg.K), failed
    if cfg.scheme == "replication":
        holders = replication_layout(cfg.K, cfg.N, cfg.s)
    else:
        holders = [[j % (cfg.N + 1)] for j in range(cfg.K)]
    total = GradientSet(np.zeros_like(params.W1), np.zeros_like(params.W2))
    for j, workers in enumerate(holders):
        # any surviving holder returns the batch gradient; otherwise it is lost
        if alive.intersection(workers):
            total = total + worker_gradient(batches[j], params, cfg.loss)
    return total, 0


def train(config: TrainConfig, X=None, Y=None, init: ModelParams | None = None) -> TrainResult:
    """Full-batch gradient descent where each gradient goes through ``scheme``.

    Stragglers are redrawn every epoch from a per-epoch substream, so all
    schemes run with the same seed face the same straggler sets.
    """
    cfg = config
    if X is None:
        # largest multiple of K not above the default sample count
        X, Y = make_synthetic(n=SYNTHETIC_SAMPLES - SYNTHETIC_SAMPLES % cfg.K, seed=cfg.seed)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
    batches = partition_dataset(X, Y, cfg.K)
    if cfg.scheme == "replication":
        replication_layout(cfg.K, cfg.N, cfg.s)
    coded = encode_batches(batches, cfg.N, cfg.label_mode) if cfg.scheme == "bacc" else None
    params = init if init is not None else ModelParams.random(
        X.shape[1], cfg.hidden, Y.shape[1], substream(cfg.seed, 3), cfg.activation)
    n = X.shape[0]
    losses = [loss_value(params, X, Y, cfg.loss) / n]
    failures = 0
    for epoch in range(cfg.epochs):
        pattern = sample_stragglers(cfg.N, cfg.s, "uniform", substream(cfg.seed, 2, epoch))
        grad, failed = _epoch_gradient(cfg, params, batches, coded, pattern.survivors)
        failures += failed
        params = sgd_step(params, grad, cfg.eta, n)
        losses.append(loss_value(params, X, Y, cfg.loss) / n)
    return TrainResult(np.array(losses), params, failures)


_IDX_TYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


def read_idx(path) -> np.ndarray:
    """Read an IDX file (e.g. MNIST images, magic 0x00000803, or labels,
    magic 0x00000801): two zero bytes, a type code, the number of
    dimensions, big-endian 32-bit sizes, then the raw array."""
    buf = Path(path).read_bytes()
    if len(buf) < 4 or buf[0] != 0 or buf[1] != 0:
        raise InvalidInputError("not an IDX file")
    dtype = _IDX_TYPES.get(buf[2])
    if dtype is None:
        raise InvalidInputError(f"unknown IDX type code 0x{buf[2]:02x}")
    ndim = buf[3]
    if len(buf) < 4 + 4 * ndim:
        raise InvalidInputError("truncated IDX header")
    dims = struct.unpack(f">{ndim}I", buf[4:4 + 4 * ndim])
    count = int(np.prod(dims)) if dims else 1
    offset = 4 + 4 * ndim
    if len(buf) - offset < count * np.dtype(dtype).itemsize:
        raise InvalidInputError("truncated IDX payload")
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
    return data.reshape(dims).astype(dtype.replace(">", "="))


class CodedMLPRegressor(RegressorMixin, BaseEstimator):
    """One-hidden-layer regressor trained with coded gradient descent.

    Parameters
    ----------
    hidden : int
    activation : {"sigmoid", "tanh", "relu", "linear"}
    scheme : {"bacc", "replication", "none", "full"}
    n_workers : int
        ``N``; workers are ``0..N``.
    n_batches : int
        ``K``; must divide the number of samples.
    stragglers : int
        Workers lost every epoch.
    epochs : int
    eta : float
    random_state : int
    """

    def __init__(self, hidden=16, activation="sigmoid", scheme="bacc", n_workers=20,
                 n_batches=4, stragglers=0, epochs=50, eta=0.1, random_state=0):
        self.hidden = hidden
        self.activation = activation
        self.scheme = scheme
        self.n_workers = n_workers
        self.n_batches = n_batches
        self.stragglers = stragglers
        self.epochs = epochs
        self.eta = eta
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True)
        cfg = TrainConfig(self.scheme, self.n_workers, self.n_batches, self.stragglers,
                          self.epochs, self.eta, self.random_state, self.hidden, self.activation)
        result = train(cfg, X, y)
        self.params_ = result.params
        self.loss_curve_ = result.losses
        self.n_features_in_ = X.shape[1]
        self._y_1d = np.ndim(y) == 1
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ShapeMismatchError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        out = self.params_.predict(X)
        return out[:, 0] if self._y_1d else out
