import numpy as np
import pytest

from bacc.exceptions import InvalidParameterError, ShapeMismatchError
from bacc.functions import REGISTRY, FunctionSpec, parse_function


def test_polynomial_ascending_coefficients():
    f = FunctionSpec.polynomial([1.0, 0.0, -2.0])
    assert f.degree == 2
    assert f.scalar(3.0) == pytest.approx(1 - 18)
    assert f.label == "poly2"


def test_trailing_zero_degree():
    assert FunctionSpec.polynomial([1.0, 2.0, 0.0]).degree == 1


def test_xsinx_kind():
    f = FunctionSpec("xsinx")
    assert f.name == "xsinx" and f.degree is None
    np.testing.assert_allclose(f(np.array([[np.pi / 2]])), [[np.pi / 2]])


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_derivatives(name):
    f = FunctionSpec.named(name)
    x = np.linspace(-1.5, 1.5, 31)
    h = 1e-5
    d1 = (f.scalar(x + h) - f.scalar(x - h)) / (2 * h)
    d2 = (f.scalar(x + h) - 2 * f.scalar(x) + f.scalar(x - h)) / h**2
    np.testing.assert_allclose(f.derivative(1)(x), d1, atol=1e-6)
    np.testing.assert_allclose(f.derivative(2)(x), d2, atol=1e-3)


def test_polynomial_derivatives():
    f = FunctionSpec.polynomial([1.0, 2.0, 3.0])
    assert f.derivative(1)(2.0) == pytest.approx(2 + 12)
    assert f.derivative(2)(2.0) == pytest.approx(6)
    with pytest.raises(InvalidParameterError):
        f.derivative(3)


def test_matrix_power_sum():
    f = FunctionSpec.polynomial([1.0, 0.0, 1.0], application="matrix-power-sum")
    A = np.array([[0.0, 1.0], [2.0, 3.0]])
    np.testing.assert_allclose(f(A), np.eye(2) + A @ A)
    with pytest.raises(ShapeMismatchError):
        f(np.ones((2, 3)))


def test_matrix_power_sum_needs_polynomial():
    with pytest.raises(InvalidParameterError):
        FunctionSpec.named("exp", application="matrix-power-sum")
    g = FunctionSpec.named("square", application="matrix-power-sum")
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    np.testing.assert_allclose(g(A), A @ A)


def test_scalar_application():
    f = FunctionSpec.named("exp", application="scalar")
    assert f(np.array([[0.0]])) == pytest.approx(1.0)
    with pytest.raises(ShapeMismatchError):
        f(np.ones(2))


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="named", name="nope"), dict(kind="polynomial", coefficients=()),
     dict(kind="polynomial", coefficients=(np.inf,)), dict(kind="spline"),
     dict(kind="named", name="exp", application="columnwise")],
)
def test_invalid(kwargs):
    with pytest.raises(InvalidParameterError):
        FunctionSpec(**kwargs)


def test_parse():
    assert parse_function("poly:1,0,-2").coefficients == (1.0, 0.0, -2.0)
    assert parse_function("tanh").name == "tanh"
