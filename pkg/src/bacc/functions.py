"""Worker functions: polynomials and a small registry of named real functions.

A :class:`FunctionSpec` is what a worker applies to its coded payload. Named
functions carry analytic first and second derivatives so that error bounds
can use exact derivative norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .exceptions import InvalidParameterError, ShapeMismatchError


@dataclass(frozen=True)
class _Named:
    f: Callable
    d1: Callable
    d2: Callable
    degree: int | None = None


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


REGISTRY: dict[str, _Named] = {
    "identity": _Named(lambda x: x, np.ones_like, np.zeros_like, degree=1),
    "square": _Named(np.square, lambda x: 2.0 * x, lambda x: np.full_like(x, 2.0), degree=2),
    "exp": _Named(np.exp, np.exp, np.exp),
    "sin": _Named(np.sin, np.cos, lambda x: -np.sin(x)),
    "xsinx": _Named(
        lambda x: x * np.sin(x),
        lambda x: np.sin(x) + x * np.cos(x),
        lambda x: 2.0 * np.cos(x) - x * np.sin(x),
    ),
    "tanh": _Named(np.tanh, lambda x: 1.0 - np.tanh(x) ** 2,
                   lambda x: -2.0 * np.tanh(x) * (1.0 - np.tanh(x) ** 2)),
    "sigmoid": _Named(
        _sigmoid,
        lambda x: _sigmoid(x) * (1.0 - _sigmoid(x)),
        lambda x: _sigmoid(x) * (1.0 - _sigmoid(x)) * (1.0 - 2.0 * _sigmoid(x)),
    ),
}

APPLICATIONS = ("scalar", "entrywise", "matrix-power-sum")


@dataclass(frozen=True)
class FunctionSpec:
    """A real function applied by workers to their payloads.

    Parameters
    ----------
    kind : {"polynomial", "xsinx", "named"}
    coefficients : tuple of float
        Polynomial coefficients in ascending powers (``kind="polynomial"``).
    name : str
        Registry key (``kind="named"``).
    application : {"entrywise", "scalar", "matrix-power-sum"}
        ``"scalar"`` requires one-entry payloads, ``"matrix-power-sum"``
        evaluates a polynomial with matrix powers on square payloads.
    """

    kind: str = "named"
    coefficients: tuple[float, ...] = ()
    name: str | None = None
    application: str = "entrywise"

    def __post_init__(self):
        if self.kind == "xsinx":
            object.__setattr__(self, "kind", "named")
            object.__setattr__(self, "name", "xsinx")
        if self.kind == "polynomial":
            coef = tuple(float(c) for c in self.coefficients)
            if not coef or not np.all(np.isfinite(coef)):
                raise InvalidParameterError("polynomial needs finite coefficients")
            object.__setattr__(self, "coefficients", coef)
        elif self.kind == "named":
            if self.name not in REGISTRY:
                raise InvalidParameterError(f"unknown function {self.name!r}; known: {sorted(REGISTRY)}")
        else:
            raise InvalidParameterError(f"unknown function kind {self.kind!r}")
        if self.application not in APPLICATIONS:
            raise InvalidParameterError(f"unknown application {self.application!r}")
        if self.application == "matrix-power-sum" and self.degree is None:
            raise InvalidParameterError("matrix-power-sum needs a polynomial function")

    @classmethod
    def polynomial(cls, coefficients, application: str = "entrywise") -> "FunctionSpec":
        return cls("polynomial", tuple(coefficients), application=application)

    @classmethod
    def named(cls, name: str, application: str = "entrywise") -> "FunctionSpec":
        return cls("named", name=name, application=application)

    @property
    def degree(self) -> int | None:
        """Polynomial degree, or ``None`` for non-polynomial functions."""
        if self.kind == "polynomial":
            nz = np.flatnonzero(self.coefficients)
            return int(nz[-1]) if nz.size else 0
        return REGISTRY[self.name].degree

    @property
    def label(self) -> str:
        if self.kind == "polynomial":
            return f"poly{self.degree}"
        return self.name

    def _poly_coefficients(self) -> np.ndarray:
        if self.kind == "polynomial":
            return np.asarray(self.coefficients)
        return np.array({"identity": [0.0, 1.0], "square": [0.0, 0.0, 1.0]}[self.name])

    def scalar(self, x):
        """The underlying real function, vectorised over arrays."""
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            return P.polyval(x, self.coefficients)
        return REGISTRY[self.name].f(x)

    def derivative(self, order: int) -> Callable:
        if order not in (1, 2):
            raise InvalidParameterError("only first and second derivatives are available")
        if self.kind == "polynomial":
            c = P.polyder(np.asarray(self.coefficients), order)
            return lambda x: P.polyval(np.asarray(x, dtype=float), c)
        named = REGISTRY[self.name]
        return named.d1 if order == 1 else named.d2

    def __call__(self, payload):
        X = np.asarray(payload, dtype=float)
        if self.application == "scalar":
            if X.size != 1:
                raise ShapeMismatchError(f"scalar application on a payload of shape {X.shape}")
            return self.scalar(X)
        if self.application == "entrywise":
            return self.scalar(X)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ShapeMismatchError(f"matrix powers need a square payload, got {X.shape}")
        coef = self._poly_coefficients()
        # Horner on matrices
        out = coef[-1] * np.eye(X.shape[0])
        for c in coef[-2::-1]:
            out = out @ X + c * np.eye(X.shape[0])
        return out


def parse_function(text: str) -> FunctionSpec:
    """``"xsinx"``, ``"exp"`` or ``"poly:1,0,-2"`` (ascending coefficients)."""
    if text.startswith("poly:"):
        return FunctionSpec.polynomial([float(c) for c in text[5:].split(",")])
    return FunctionSpec.named(text)
