import math
import numpy as np
import pytest
from app.exceptions import BracketingError, ConvergenceError, DimensionError, DomainError, EvaluationError
from app.services import calculus
from app.services.specialfn import norm_pdf
from app.utils.helpers import bracket_root


def quadratic(x):
    return x[0] ** 2 + x[0] * x[1] + x[1] ** 2


def cubic(x):
    return x[0] ** 2 * x[1] + x[1] ** 3


def test_fd_gradient_and_hessian():
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(calculus.fd_gradient(quadratic, x), [4.0, 5.0], rtol=1e-7)
    np.testing.assert_allclose(calculus.fd_hessian(quadratic, x), [[2.0, 1.0], [1.0, 2.0]], atol=1e-5)


def test_fd_derivatives_third_order():
    report = calculus.fd_derivatives(cubic, [1.0, 2.0], order=3, want_full_tensor=True)
    np.testing.assert_allclose(report.third_unmixed, [0.0, 6.0], atol=1e-3)
    tensor = report.third_full
    assert tensor.shape == (2, 2, 2)
    # d3/dx0 dx0 dx1 of x0^2 x1 is 2, in every permutation
    for index in [(0, 0, 1), (0, 1, 0), (1, 0, 0)]:
        assert tensor[index] == pytest.approx(2.0, abs=1e-3)
    assert tensor[1, 1, 1] == pytest.approx(6.0, abs=1e-3)


def test_fd_derivatives_skips_unrequested_orders():
    report = calculus.fd_derivatives(quadratic, [0.5, -0.5], order=1)
    np.testing.assert_array_equal(report.hessian, np.zeros((2, 2)))
    assert report.third_full is None


def test_fd_derivatives_rejects_bad_order():
    with pytest.raises(DomainError):
        calculus.fd_derivatives(quadratic, [0.0, 0.0], order=4)


def test_fd_reports_non_finite_stencil():
    f = lambda x: math.log(x[0]) if x[0] > 0 else float("nan")
    with pytest.raises(EvaluationError):
        calculus.fd_derivatives(f, [0.0], order=2)


def test_maximize_concave_quadratic():
    f = lambda x: -((x[0] - 3.0) ** 2) - 2.0 * (x[1] + 1.0) ** 2 + 0.5 * x[0] * x[1]
    x = calculus.maximize(f, [0.0, 0.0])
    grad = calculus.fd_gradient(f, x)
    assert np.max(np.abs(grad)) < 1e-6


def test_maximize_with_analytic_derivatives():
    f = lambda x: -np.cosh(x[0] - 0.4)
    grad = lambda x: np.array([-np.sinh(x[0] - 0.4)])
    hess = lambda x: np.array([[-np.cosh(x[0] - 0.4)]])
    x = calculus.maximize(f, [2.0], grad=grad, hess=hess)
    assert x[0] == pytest.approx(0.4, abs=1e-9)


def test_maximize_unbounded_raises():
    with pytest.raises(ConvergenceError) as info:
        calculus.maximize(lambda x: x[0], [0.0], max_iter=20)
    assert info.value.details["iterations"] > 0


def test_constrained_maximize():
    f = lambda x: -((x[0] - 1.0) ** 2) - (x[1] - x[0]) ** 2
    free = calculus.constrained_maximize(f, [0], [2.0], [0.0])
    assert free[0] == pytest.approx(2.0, abs=1e-7)


def test_profile_maximize_scalar_returns_empty():
    assert calculus.profile_maximize(lambda x: -x[0] ** 2, 0, 1.0, []).size == 0


def test_integrate_1d_infinite_ranges():
    assert calculus.integrate_1d(norm_pdf, -np.inf, np.inf) == pytest.approx(1.0, abs=1e-10)
    assert calculus.integrate_1d(lambda t: math.exp(-t), 0.0, np.inf) == pytest.approx(1.0, abs=1e-10)
    assert calculus.integrate_1d(lambda t: t, 1.0, 0.0) == pytest.approx(-0.5)


def test_gauss_hermite_moments():
    assert calculus.integrate_gh(lambda p: p[:, 0] ** 2, [0.0], [[4.0]]) == pytest.approx(4.0, rel=1e-12)
    cov = [[1.0, 0.5], [0.5, 2.0]]
    assert calculus.integrate_gh(lambda p: p[:, 0] * p[:, 1], [0.0, 0.0], cov, nodes=20) == pytest.approx(0.5, rel=1e-10)
    assert calculus.integrate_gh(lambda p: 1.0, [1.0], [[1.0]], vectorized=False) == pytest.approx(1.0)


def test_gauss_hermite_dimension_cap():
    with pytest.raises(DimensionError):
        calculus.gauss_hermite_rule(np.zeros(4), np.eye(4))


def test_bracket_root_honours_explicit_zero_expansions():
    with pytest.raises(BracketingError):
        bracket_root(lambda t: t - 10.0, 0.0, 1.0, max_expansions=0)
    assert bracket_root(lambda t: t - 10.0, 0.0, 1.0) == pytest.approx(10.0)
