"""
Finite differences up to third order, Newton-type maximization (full and
constrained slices) and quadrature (adaptive 1-D, tensor Gauss-Hermite).
"""
import itertools
import math
import warnings
from typing import Callable, Dict, List, Optional, Sequence
import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import integrate
from app.config import settings
from app.exceptions import AccuracyError, ConvergenceError, DimensionError, DomainError, EvaluationError
from app.models.geometry import DiffReport
from app.utils.helpers import as_vector
from app.utils.logger import get_logger

logger = get_logger("calculus")

RealFunction = Callable[[np.ndarray], float]

_EPS = np.finfo(float).eps


def _evaluate(f: RealFunction, point: np.ndarray) -> float:
    value = float(f(point))
    if not math.isfinite(value):
        raise EvaluationError(f"Non-finite function value {value} at {point.tolist()}", point)
    return value


def _steps(x: np.ndarray, power: float, step: Optional[float]) -> np.ndarray:
    base = step if step is not None else _EPS ** power
    return base * np.maximum(1.0, np.abs(x))


def fd_gradient(f: RealFunction, x, step: Optional[float] = None) -> np.ndarray:
    """Central-difference gradient with cbrt(eps) relative steps"""
    x = as_vector(x)
    h = _steps(x, 1.0 / 3.0, step)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        grad[i] = (_evaluate(f, x + e) - _evaluate(f, x - e)) / (2.0 * h[i])
    return grad


def fd_hessian(f: RealFunction, x, step: Optional[float] = None, f0: Optional[float] = None) -> np.ndarray:
    """Central-difference Hessian with eps^(1/4) relative steps"""
    x = as_vector(x)
    d = x.size
    h = _steps(x, 0.25, step)
    f0 = _evaluate(f, x) if f0 is None else f0
    hess = np.empty((d, d))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h[i]
        hess[i, i] = (_evaluate(f, x + ei) - 2.0 * f0 + _evaluate(f, x - ei)) / (h[i] * h[i])
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h[j]
            value = (
                _evaluate(f, x + ei + ej)
                - _evaluate(f, x + ei - ej)
                - _evaluate(f, x - ei + ej)
                + _evaluate(f, x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = value
    return hess


def _third_unmixed(f: RealFunction, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        out[i] = (
            -0.5 * _evaluate(f, x - 2.0 * e)
            + _evaluate(f, x - e)
            - _evaluate(f, x + e)
            + 0.5 * _evaluate(f, x + 2.0 * e)
        ) / h[i] ** 3
    return out


def _third_full(f: RealFunction, x: np.ndarray, h: np.ndarray, unmixed: np.ndarray) -> np.ndarray:
    d = x.size
    tensor = np.zeros((d, d, d))
    unit = np.eye(d)
    for i, j, k in itertools.combinations_with_replacement(range(d), 3):
        if i == j == k:
            value = unmixed[i]
        elif i == j or j == k:
            # d^3 f / dx_a^2 dx_b with a the repeated index
            a, b = (i, k) if i == j else (k, i)
            ea, eb = h[a] * unit[a], h[b] * unit[b]
            value = (
                _evaluate(f, x + ea + eb) - 2.0 * _evaluate(f, x + eb) + _evaluate(f, x - ea + eb)
                - _evaluate(f, x + ea - eb) + 2.0 * _evaluate(f, x - eb) - _evaluate(f, x - ea - eb)
            ) / (2.0 * h[b] * h[a] ** 2)
        else:
            value = 0.0
            for si, sj, sk in itertools.product((1.0, -1.0), repeat=3):
                point = x + si * h[i] * unit[i] + sj * h[j] * unit[j] + sk * h[k] * unit[k]
                value += si * sj * sk * _evaluate(f, point)
            value /= 8.0 * h[i] * h[j] * h[k]
        for a, b, c in set(itertools.permutations((i, j, k))):
            tensor[a, b, c] = value
    return tensor


def fd_derivatives(
    f: RealFunction,
    x,
    order: int = 2,
    want_full_tensor: bool = False,
    step: Optional[float] = None,
) -> DiffReport:
    """
    Finite-difference derivatives of f at x

    Gradient steps scale with cbrt(eps), Hessian steps with eps^(1/4) and
    third-order steps with eps^(1/5), each times max(1, |x_i|). Orders not
    requested are returned as zeros.

    Args:
        f: Real function of a parameter vector
        x: Evaluation point
        order: Highest derivative order (1, 2 or 3)
        want_full_tensor: Also compute mixed third derivatives
        step: Override for the relative base step

    Returns:
        DiffReport

    Raises:
        EvaluationError: If f is non-finite at a stencil point
    """
    if order not in (1, 2, 3):
        raise DomainError(f"order must be 1, 2 or 3, got {order}")
    x = as_vector(x)
    d = x.size
    f0 = _evaluate(f, x)

    gradient = fd_gradient(f, x, step)
    hessian = fd_hessian(f, x, step, f0) if order >= 2 else np.zeros((d, d))
    third_unmixed = np.zeros(d)
    third_full = None
    if order == 3:
        h3 = _steps(x, 0.2, step)
        third_unmixed = _third_unmixed(f, x, h3)
        if want_full_tensor:
            third_full = _third_full(f, x, h3, third_unmixed)

    base = step if step is not None else _EPS ** {1: 1.0 / 3.0, 2: 0.25, 3: 0.2}[order]
    return DiffReport(
        gradient=gradient,
        hessian=hessian,
        third_unmixed=third_unmixed,
        third_full=third_full,
        step=base,
    )


def maximize(
    f: RealFunction,
    x0,
    tol: Optional[float] = None,
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_iter: Optional[int] = None,
    require_interior: bool = True,
) -> np.ndarray:
    """
    Maximize f by Newton steps with backtracking line search

    Falls back to gradient ascent when the Hessian is not negative definite.
    Finite differences replace any derivative not supplied.

    Args:
        f: Objective (returns -inf or nan outside its domain)
        x0: Starting point
        tol: Gradient tolerance in the sup norm
        grad: Analytic gradient
        hess: Analytic Hessian
        max_iter: Iteration cap
        require_interior: Reject maximizers whose curvature vanishes

    Returns:
        np.ndarray: Maximizer

    Raises:
        ConvergenceError: On iteration cap, failed line search or a boundary maximum
    """
    tol = tol if tol is not None else settings.OPT_TOL
    max_iter = max_iter if max_iter is not None else settings.OPT_MAX_ITER
    grad = grad or (lambda z: fd_gradient(f, z))
    hess = hess or (lambda z: fd_hessian(f, z))

    x = as_vector(x0, "x0").copy()
    fx = _evaluate(f, x)
    trace: List[Dict[str, float]] = []

    for iteration in range(max_iter):
        g = np.asarray(grad(x), dtype=float)
        gnorm = float(np.max(np.abs(g)))
        trace.append({"iteration": iteration, "f": fx, "grad_norm": gnorm})
        if gnorm <= tol:
            return _accept(x, hess, trace, require_interior)

        H = np.atleast_2d(np.asarray(hess(x), dtype=float))
        try:
            chol = np.linalg.cholesky(-0.5 * (H + H.T))
            direction = np.linalg.solve(chol.T, np.linalg.solve(chol, g))
            kind = "newton"
        except np.linalg.LinAlgError:
            direction = g.copy()
            kind = "gradient"

        slope = float(g @ direction)
        t = 1.0
        accepted = False
        for _ in range(settings.OPT_MAX_HALVINGS):
            candidate = x + t * direction
            f_candidate = float(f(candidate))
            if math.isfinite(f_candidate) and f_candidate >= fx + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5

        if not accepted:
            # No representable ascent left: the FD gradient noise floor was reached
            if gnorm <= 1e3 * tol:
                logger.debug(f"Line search stalled at gradient {gnorm:.3e}; accepting point")
                return _accept(x, hess, trace, require_interior)
            logger.error(f"Failed to maximize: line search failed at iteration {iteration}")
            raise ConvergenceError(f"Line search failed at iteration {iteration} ({kind} step)", trace)

        x = candidate
        fx = f_candidate
        logger.debug(f"iter {iteration}: {kind} step t={t:.3g}, f={fx:.12g}, |g|={gnorm:.3e}")

    logger.error(f"Failed to maximize: no convergence in {max_iter} iterations")
    raise ConvergenceError(f"No convergence in {max_iter} iterations", trace)


def _accept(x: np.ndarray, hess, trace, require_interior: bool) -> np.ndarray:
    if require_interior:
        H = np.atleast_2d(np.asarray(hess(x), dtype=float))
        curvature = np.linalg.eigvalsh(-0.5 * (H + H.T))
        if curvature.min() <= settings.MIN_INFO_EIGENVALUE:
            logger.error(f"Failed to maximize: curvature {curvature.min():.3e} at {x.tolist()}")
            raise ConvergenceError(
                "Maximum not attained in the interior of the parameter space (vanishing curvature)",
                trace,
            )
    return x


def constrained_maximize(
    f: RealFunction,
    fixed_indices: Sequence[int],
    fixed_values: Sequence[float],
    free0,
    grad: Optional[Callable] = None,
    hess: Optional[Callable] = None,
    tol: Optional[float] = None,
) -> np.ndarray:
    """
    Maximize f over the coordinates not listed in fixed_indices

    Args:
        f: Objective on the full parameter vector
        fixed_indices: Coordinates held fixed
        fixed_values: Their values
        free0: Starting values of the free coordinates, in order
        grad: Analytic gradient on the full vector
        hess: Analytic Hessian on the full vector
        tol: Gradient tolerance

    Returns:
        np.ndarray: Maximizer over the free coordinates
    """
    free0 = np.atleast_1d(np.asarray(free0, dtype=float))
    d = free0.size + len(fixed_indices)
    fixed = np.zeros(d, dtype=bool)
    fixed[list(fixed_indices)] = True
    if free0.size == 0:
        return free0

    def embed(free: np.ndarray) -> np.ndarray:
        full = np.empty(d)
        full[fixed] = fixed_values
        full[~fixed] = free
        return full

    slice_grad = (lambda z: np.asarray(grad(embed(z)))[~fixed]) if grad else None
    slice_hess = (lambda z: np.atleast_2d(hess(embed(z)))[np.ix_(~fixed, ~fixed)]) if hess else None
    return maximize(lambda z: f(embed(z)), free0, tol=tol, grad=slice_grad, hess=slice_hess)


def profile_maximize(
    loglik: RealFunction,
    psi_index: int,
    psi_value: float,
    lambda0,
    grad: Optional[Callable] = None,
    hess: Optional[Callable] = None,
) -> np.ndarray:
    """
    Constrained maximizer of the nuisance parameters for a fixed psi

    Args:
        loglik: Log-likelihood on the full vector
        psi_index: Coordinate of the parameter of interest
        psi_value: Value psi is fixed at
        lambda0: Starting nuisance values (d - 1 entries)
        grad: Analytic gradient on the full vector
        hess: Analytic Hessian on the full vector

    Returns:
        np.ndarray: Constrained nuisance maximizer (empty when d = 1)
    """
    return constrained_maximize(loglik, [psi_index], [psi_value], lambda0, grad=grad, hess=hess)


def integrate_1d(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Optional[float] = None,
    center: float = 0.0,
    limit: Optional[int] = None,
) -> float:
    """
    Adaptive quadrature on a possibly infinite interval

    Doubly infinite ranges are split at `center`.

    Args:
        f: Integrand
        lo: Lower limit (may be -inf)
        hi: Upper limit (may be +inf)
        tol: Absolute tolerance
        center: Split point for doubly infinite ranges
        limit: Subdivision limit

    Returns:
        float: Integral estimate

    Raises:
        AccuracyError: If the subdivision limit is exhausted
    """
    tol = tol if tol is not None else settings.QUAD_TOL
    limit = limit if limit is not None else settings.QUAD_LIMIT
    if lo == hi:
        return 0.0
    if lo > hi:
        return -integrate_1d(f, hi, lo, tol, center, limit)
    if math.isinf(lo) and math.isinf(hi):
        return integrate_1d(f, lo, center, tol / 2, center, limit) + integrate_1d(f, center, hi, tol / 2, center, limit)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, lo, hi, epsabs=tol, epsrel=max(tol, 1e-13), limit=limit, full_output=1)
    value, error, info = out[0], out[1], out[2]
    if len(out) > 3:
        if info.get("last", 0) >= limit:
            logger.error(f"Failed to integrate on [{lo}, {hi}]: subdivision limit {limit} reached")
            raise AccuracyError(f"Subdivision limit {limit} reached on [{lo}, {hi}]", value, error)
        logger.debug(f"quad on [{lo}, {hi}]: {out[3]} (error {error:.2e})")
    return float(value)


def gauss_hermite_rule(center, scale, nodes: Optional[int] = None):
    """
    Tensor-product Gauss-Hermite nodes and weights for N(center, scale)

    Args:
        center: Mean vector
        scale: Positive-definite covariance matrix
        nodes: Nodes per axis

    Returns:
        Tuple of (points (m, d), weights (m,)) with weights summing to one
    """
    center = as_vector(center, "center")
    d = center.size
    if d > settings.GH_MAX_DIM:
        raise DimensionError(f"Gauss-Hermite quadrature supports at most {settings.GH_MAX_DIM} dimensions, got {d}")
    nodes = nodes or settings.GH_NODES
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    try:
        chol = np.linalg.cholesky(0.5 * (scale + scale.T))
    except np.linalg.LinAlgError as e:
        raise DomainError("scale must be positive definite") from e

    x, w = hermgauss(nodes)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    z = np.sqrt(2.0) * np.stack([g.ravel() for g in grids], axis=1)
    weight_grids = np.meshgrid(*([w] * d), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in weight_grids], axis=1), axis=1) / math.pi ** (d / 2.0)
    return center + z @ chol.T, weights


def integrate_gh(
    f: Callable[[np.ndarray], np.ndarray],
    center,
    scale,
    nodes: Optional[int] = None,
    vectorized: bool = True,
) -> float:
    """
    Expectation of f under N(center, scale) by tensor-product Gauss-Hermite

    Args:
        f: Integrand; with vectorized=True it maps an (m, d) array to m values
        center: Mean vector (d <= 3)
        scale: Positive-definite covariance matrix
        nodes: Nodes per axis (default 64)
        vectorized: Whether f accepts a batch of points

    Returns:
        float: Integral of f against the normalized Gaussian weight
    """
    points, weights = gauss_hermite_rule(center, scale, nodes)
    if vectorized:
        values = np.asarray(f(points), dtype=float).reshape(-1)
    else:
        values = np.array([float(f(p)) for p in points])
    if values.shape != weights.shape:
        raise DomainError(f"integrand returned shape {values.shape}, expected {weights.shape}")
    return float(weights @ values)
