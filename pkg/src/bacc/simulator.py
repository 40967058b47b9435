"""Master-worker straggler simulation and the accuracy experiments.

Every random quantity is drawn from a counter-based substream keyed by
``(master_seed, purpose, ...)``: ``(0, function_index)`` for the worker
function and data, ``(1, s, function_index, straggler_index)`` for a
straggler set. Two runs that differ only in node family or thread count
therefore see exactly the same functions, data and straggler sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.isotonic import IsotonicRegression

from ._parallel import ordered_map
from ._validation import as_stack, check_count
from .coding import (
    NODE_FAMILIES,
    CodedShare,
    DecodeInput,
    decode,
    encode_shares,
    make_encoder,
    worker_points,
)
from .diagnostics import StragglerPattern, worst_case_pattern
from .exceptions import InvalidParameterError, ShapeMismatchError
from .functions import FunctionSpec

STRAGGLER_MODELS = ("uniform", "worst-case")


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the trial identified by ``key``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def sample_stragglers(N: int, s: int, model: str = "uniform", rng=None,
                      kbar: int | None = None) -> StragglerPattern:
    """Draw ``s`` stragglers among workers ``0..N``.

    ``"uniform"`` draws without replacement; ``"worst-case"`` returns the
    consecutive block after ``kbar`` (drawn uniformly when not given).
    """
    N = check_count(N, "N")
    s = check_count(s, "s", minimum=0)
    if s > N:
        raise InvalidParameterError(f"s={s} stragglers leave no survivor among {N + 1} workers")
    if rng is None:
        rng = np.random.default_rng()
    if model == "uniform":
        idx = rng.choice(N + 1, size=s, replace=False) if s else ()
        return StragglerPattern(N, tuple(int(i) for i in idx), "uniform")
    if model == "worst-case":
        if s == 0:
            return worst_case_pattern(N, 0, 0 if kbar is None else kbar)
        if kbar is None:
            kbar = int(rng.integers(0, N - s))
        return worst_case_pattern(N, s, kbar)
    raise InvalidParameterError(f"unknown straggler model {model!r}")


def execute_workers(shares: list[CodedShare], f: FunctionSpec,
                    pattern: StragglerPattern) -> DecodeInput:
    """Apply ``f`` to the payload of every non-straggling worker.

    Workers whose result is not finite are recorded in ``failed`` and left
    out of the survivors.
    """
    N = len(shares) - 1
    if pattern.N != N:
        raise ShapeMismatchError(f"pattern is for N={pattern.N}, shares for N={N}")
    abscissae = np.array([sh.z for sh in shares])
    survivors, results, failed = [], [], []
    for i in pattern.survivors:
        with np.errstate(all="ignore"):
            y = np.asarray(f(shares[i].payload), dtype=float)
        if np.all(np.isfinite(y)):
            survivors.append(int(i))
            results.append(y)
        else:
            failed.append(int(i))
    return DecodeInput(tuple(survivors), np.array(results) if results else np.empty((0,)),
                       N, abscissae, tuple(failed))


def relative_error(approx, exact) -> float:
    """Mean over outputs and entries of ``|approx - exact| / (|exact| + 1e-12)``."""
    a = np.asarray(approx, dtype=float)
    e = np.asarray(exact, dtype=float)
    if a.shape != e.shape:
        raise ShapeMismatchError(f"approximation shape {a.shape} differs from {e.shape}")
    return float(np.mean(np.abs(a - e) / (np.abs(e) + 1e-12)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of an accuracy sweep.

    ``function=None`` draws a fresh random polynomial of degree ``deg`` per
    function trial; otherwise the given function is used throughout.
    ``inputs=None`` draws the ``K`` inputs uniformly from ``input_range``;
    otherwise the fixed inputs are attached to the ascending alphas.
    """

    N: int = 500
    K: int = 20
    s_values: tuple[int, ...] = (0,)
    deg: int = 25
    trials_functions: int = 20
    trials_stragglers: int = 100
    coefficient_range: tuple[float, float] = (-10.0, 10.0)
    input_range: tuple[float, float] = (-1.0, 1.0)
    node_family: str = "chebyshev"
    master_seed: int = 0
    function: FunctionSpec | None = None
    inputs: tuple[float, ...] | None = None
    straggler_model: str = "uniform"

    def __post_init__(self):
        check_count(self.N, "N")
        check_count(self.K, "K")
        check_count(self.deg, "deg", minimum=0)
        check_count(self.trials_functions, "trials_functions")
        check_count(self.trials_stragglers, "trials_stragglers")
        s_values = tuple(check_count(s, "s", minimum=0) for s in self.s_values)
        if not s_values:
            raise InvalidParameterError("s_values is empty")
        if max(s_values) > self.N:
            raise InvalidParameterError(f"s={max(s_values)} leaves no survivor among {self.N + 1} workers")
        for name in ("coefficient_range", "input_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise InvalidParameterError(f"{name} must be ordered, got ({lo}, {hi})")
        if self.node_family not in NODE_FAMILIES:
            raise InvalidParameterError(f"node_family must be one of {NODE_FAMILIES}")
        if self.straggler_model not in STRAGGLER_MODELS:
            raise InvalidParameterError(f"straggler_model must be one of {STRAGGLER_MODELS}")
        if self.inputs is not None and len(self.inputs) != self.K:
            raise ShapeMismatchError(f"{len(self.inputs)} fixed inputs for K={self.K}")
        object.__setattr__(self, "s_values", s_values)


@dataclass(frozen=True)
class ErrorStats:
    """Relative-error summary at one straggler count.

    ``spread`` is the (min, max) of the per-function mean errors, i.e. the
    band of the individual function curves around the overall mean.
    """

    s: int
    mean: float
    min: float
    max: float
    spread: tuple[float, float]
    n_trials: int
    n_failures: int = 0


@dataclass(frozen=True)
class PointwiseCurve:
    """Decoded versus exact outputs at each alpha for one straggler draw."""

    s: int
    alphas: np.ndarray
    inputs: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    survivors: tuple[int, ...] = field(default=())


@dataclass(frozen=True)
class _FunctionRun:
    errors: np.ndarray  # (n_s, trials_stragglers)
    failures: np.ndarray
    curve: PointwiseCurve | None


def _draw_problem(cfg: ExperimentConfig, fi: int):
    rng = substream(cfg.master_seed, 0, fi)
    if cfg.function is None:
        f = FunctionSpec.polynomial(rng.uniform(*cfg.coefficient_range, size=cfg.deg + 1))
    else:
        f = cfg.function
    if cfg.inputs is None:
        X = rng.uniform(*cfg.input_range, size=cfg.K)
    else:
        X = np.asarray(cfg.inputs, dtype=float)
    return f, X


def _run_function(cfg: ExperimentConfig, fi: int) -> _FunctionRun:
    f, X = _draw_problem(cfg, fi)
    exact = np.stack([np.asarray(f(x), dtype=float) for x in X])
    encoder = make_encoder(X, cfg.node_family)
    shares = encode_shares(encoder, cfg.N, worker_points(cfg.N, cfg.node_family))
    # f is deterministic, so every worker is evaluated once and each
    # straggler draw simply keeps a subset of the results
    full = execute_workers(shares, f, StragglerPattern(cfg.N))
    ok = np.zeros(cfg.N + 1, dtype=bool)
    ok[list(full.survivors)] = True
    row = np.full(cfg.N + 1, -1)
    row[list(full.survivors)] = np.arange(len(full.survivors))

    errors = np.empty((len(cfg.s_values), cfg.trials_stragglers))
    failures = np.zeros_like(errors, dtype=int)
    curve = None
    for a, s in enumerate(cfg.s_values):
        for si in range(cfg.trials_stragglers):
            pattern = sample_stragglers(cfg.N, s, cfg.straggler_model,
                                        substream(cfg.master_seed, 1, s, fi, si))
            alive = pattern.survivors
            keep = alive[ok[alive]]
            failures[a, si] = alive.size - keep.size
            if keep.size == 0:
                errors[a, si] = np.nan
                continue
            inp = DecodeInput(tuple(keep), full.results[row[keep]], cfg.N, full.abscissae)
            approx = decode(inp, encoder.alphas)
            errors[a, si] = relative_error(approx, exact)
            if curve is None and fi == 0:
                curve = PointwiseCurve(s, encoder.alphas.points.copy(), X.copy(), exact,
                                       approx, tuple(int(i) for i in keep))
    return _FunctionRun(errors, failures, curve)


def _aggregate(cfg: ExperimentConfig, runs: list[_FunctionRun]) -> list[ErrorStats]:
    errors = np.stack([r.errors for r in runs])  # (functions, n_s, draws)
    failures = np.stack([r.failures for r in runs])
    stats = []
    for a, s in enumerate(cfg.s_values):
        e = errors[:, a, :]
        valid = e[np.isfinite(e)]
        with np.errstate(all="ignore"):
            per_function = np.nanmean(e, axis=1) if valid.size else np.array([np.nan])
        stats.append(ErrorStats(
            s=int(s),
            mean=float(valid.mean()) if valid.size else float("nan"),
            min=float(valid.min()) if valid.size else float("nan"),
            max=float(valid.max()) if valid.size else float("nan"),
            spread=(float(np.nanmin(per_function)), float(np.nanmax(per_function))),
            n_trials=int(valid.size),
            n_failures=int(failures[:, a, :].sum()),
        ))
    return stats


def _run(cfg: ExperimentConfig) -> tuple[list[ErrorStats], list[_FunctionRun]]:
    runs = ordered_map(lambda fi: _run_function(cfg, fi), range(cfg.trials_functions))
    return _aggregate(cfg, runs), runs


def run_poly_experiment(config: ExperimentConfig) -> list[ErrorStats]:
    """Random-polynomial sweep: mean relative error per straggler count."""
    if config.function is not None and config.function.degree is None:
        raise InvalidParameterError("run_poly_experiment needs a polynomial (or random) function")
    return _run(config)[0]


def run_nonpoly_experiment(config: ExperimentConfig) -> tuple[list[ErrorStats], PointwiseCurve]:
    """Sweep for a fixed non-polynomial function (``x sin x`` by default).

    Also returns the decoded outputs of the first function trial and first
    straggler draw at the first ``s`` value.
    """
    if config.function is None:
        config = replace(config, function=FunctionSpec.named("xsinx"))
    stats, runs = _run(config)
    return stats, runs[0].curve


def compare_nodesets(config: ExperimentConfig,
                     families: tuple[str, ...] = NODE_FAMILIES) -> dict[str, list[ErrorStats]]:
    """Run the same trials (same seeds) once per node family."""
    runner = run_poly_experiment if config.function is None or config.function.degree is not None \
        else (lambda c: run_nonpoly_experiment(c)[0])
    return {fam: runner(replace(config, node_family=fam)) for fam in families}


def case2_inputs(K: int = 20, lo: float = -12.0, hi: float = 12.0) -> tuple[float, ...]:
    """Evenly spread inputs ``lo + (hi - lo) i / (K - 1)``."""
    K = check_count(K, "K", minimum=2)
    return tuple(lo + (hi - lo) * i / (K - 1) for i in range(K))


@dataclass(frozen=True)
class TrendReport:
    fitted: np.ndarray
    residual: float
    holds: bool


def trend_check(s_values, means, tolerance: float = 0.2) -> TrendReport:
    """Fit a non-decreasing curve to ``means`` and measure how far the raw
    means are from it, ``||fit - means|| / ||means||``. The trend holds when
    that residual is at most ``tolerance``.
    """
    x = np.asarray(s_values, dtype=float)
    y = as_stack(means, "means")
    fit = IsotonicRegression(increasing=True).fit_transform(x, y)
    scale = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(fit - y) / scale) if scale > 0 else 0.0
    return TrendReport(fit, residual, bool(residual <= tolerance and np.all(np.diff(fit) >= 0)))


def geometric_mean_ratio(numerator: list[ErrorStats], denominator: list[ErrorStats],
                         floor: float = 1e-9) -> float:
    """Geometric mean of ``numerator.mean / denominator.mean`` over the
    shared straggler counts, skipping counts where both are below ``floor``.
    """
    ratios = [a.mean / b.mean for a, b in zip(numerator, denominator)
              if not (a.mean < floor and b.mean < floor)]
    if not ratios:
        raise InvalidParameterError("no straggler count left after the floor filter")
    return float(np.exp(np.mean(np.log(ratios))))
