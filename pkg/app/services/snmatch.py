"""
Skew-normal approximation by derivative matching at the posterior mode.

The fitted SN shares the mode, the negative Hessian and the unmixed third
derivatives of the log-posterior; the system reduces to a scalar root in
kappa = eta^T (m - xi).
"""
import math
from typing import Dict, List, Optional, Sequence
import numpy as np
from scipy import special, stats
from scipy.optimize import brentq
from app.config import settings
from app.exceptions import DimensionError, DomainError, InfeasibleMatchError, NoSolutionError
from app.models.geometry import DiffReport, PosteriorGeometry
from app.models.results import BdmResult
from app.models.skew import MatchInputs, SnParams
from app.services.specialfn import sn_cdf, sn_sf, zeta
from app.utils.helpers import as_vector, bracket_root, is_positive_definite
from app.utils.logger import get_logger

logger = get_logger("snmatch")

_INFEASIBLE = -1e100
_ROOT_CHECK = 1e-8


def _kappa_system(inputs: MatchInputs, kappa: float):
    """Slant and scale implied by a candidate kappa, or None when Omega^-1 is not positive definite"""
    z2, z3 = zeta(2, kappa), zeta(3, kappa)
    eta = np.cbrt(inputs.t / z3)
    precision = inputs.H + z2 * np.outer(eta, eta)
    if not is_positive_definite(precision):
        return None
    return eta, np.linalg.inv(precision)


def _residual(inputs: MatchInputs, kappa: float) -> float:
    """g(kappa) = kappa - zeta_1(kappa) eta^T Omega eta, NaN where the scale matrix is infeasible"""
    system = _kappa_system(inputs, kappa)
    if system is None:
        return math.nan
    eta, omega = system
    return kappa - zeta(1, kappa) * float(eta @ omega @ eta)


def kappa_roots(inputs: MatchInputs, width: Optional[float] = None) -> List[float]:
    """
    Roots of the kappa residual on [-width, width]

    The residual is sampled on a grid of spacing KAPPA_SCAN_STEP; a root is
    refined only between two neighbouring feasible points of opposite sign,
    and kept only if the residual really vanishes there. Poles at the edge
    of the feasible set therefore never pass for roots.

    Args:
        inputs: Mode, negative Hessian and third derivatives
        width: Half-width of the scanned interval (default KAPPA_BRACKET_MAX)

    Returns:
        Sorted list of roots
    """
    width = settings.KAPPA_BRACKET_MAX if width is None else float(width)
    half_steps = max(1, int(math.ceil(width / settings.KAPPA_SCAN_STEP)))
    grid = np.linspace(-width, width, 2 * half_steps + 1)
    values = np.array([_residual(inputs, float(k)) for k in grid])

    def g(k: float) -> float:
        value = _residual(inputs, k)
        return _INFEASIBLE if math.isnan(value) else value

    roots = [float(k) for k, v in zip(grid, values) if v == 0.0]
    for a, b, g_a, g_b in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if not (np.isfinite(g_a) and np.isfinite(g_b)) or g_a * g_b >= 0:
            continue
        kappa = brentq(g, float(a), float(b), xtol=1e-14, rtol=4.0 * np.finfo(float).eps)
        value = _residual(inputs, kappa)
        if math.isnan(value) or abs(value) > _ROOT_CHECK * max(1.0, abs(kappa)):
            logger.debug(f"Discarding kappa={kappa:.6g}: sign change without a root (residual {value})")
            continue
        roots.append(kappa)
    return sorted(roots)


def sn_fit(inputs: MatchInputs, tolerance: Optional[float] = None) -> SnParams:
    """
    Fit a skew-normal by matching mode, negative Hessian and unmixed third derivatives

    The kappa scan starts on [-1, 1] and doubles up to KAPPA_BRACKET_MAX;
    when several roots share the first interval that has any, the one
    nearest zero is used.

    Args:
        inputs: Mode, negative Hessian and third derivatives
        tolerance: Largest accepted relative matching residual (default from settings)

    Returns:
        SnParams

    Raises:
        NoSolutionError: If the kappa residual has no root on any feasible segment
        InfeasibleMatchError: If the scale matrix is not positive definite at the root,
            or the matching residual exceeds the tolerance
    """
    tolerance = settings.SN_MATCH_TOLERANCE if tolerance is None else tolerance

    width, limit = 1.0, settings.KAPPA_BRACKET_MAX
    while True:
        roots = kappa_roots(inputs, width)
        if roots:
            break
        if width >= limit:
            ends = [_residual(inputs, -limit), _residual(inputs, limit)]
            raise NoSolutionError(
                f"kappa residual has no root on a feasible segment of [-{limit}, {limit}]",
                [0.0 if math.isnan(v) else float(np.sign(v)) for v in ends],
            )
        width = min(2.0 * width, limit)
    if len(roots) > 1:
        logger.warning(f"kappa residual has {len(roots)} roots {roots}; using the one nearest zero")
    kappa = min(roots, key=abs)

    system = _kappa_system(inputs, kappa)
    if system is None:
        logger.error(f"Failed to match skew-normal: scale matrix not positive definite at kappa={kappa:.6g}")
        raise InfeasibleMatchError("skew-normal scale matrix not positive definite at the root", {"kappa": kappa})
    eta, omega = system
    xi = inputs.m - zeta(1, kappa) * omega @ eta
    try:
        params = SnParams.from_slant(xi, omega, eta)
    except ValueError as e:
        raise InfeasibleMatchError(f"invalid skew-normal parameters: {e}", {"kappa": kappa}) from e

    residuals = match_residuals(params, inputs)
    worst = max(residuals.values())
    if worst > tolerance:
        logger.error(f"Failed to match skew-normal: residual {worst:.2e} above tolerance {tolerance:.2e}")
        raise InfeasibleMatchError("matching residual above tolerance", {"kappa": kappa, **residuals})
    logger.info(f"Matched skew-normal: kappa={kappa:.6g}, alpha={params.alpha.tolist()}")
    return params


def match_inputs_from_geometry(geom: PosteriorGeometry, source: str = "posterior") -> MatchInputs:
    """Collect mode, negative Hessian and unmixed third derivatives from a fitted geometry"""
    third = geom.third_at(source)
    d = geom.dim
    return MatchInputs(m=geom.map_point, H=geom.info_at_map(source), t=third[np.arange(d), np.arange(d), np.arange(d)])


def sn_logpdf(params: SnParams, x) -> np.ndarray:
    """
    Skew-normal log-density

    Args:
        params: SN parameters
        x: Point (d,) or batch (m, d)

    Returns:
        Log-density value(s)
    """
    x = np.asarray(x, dtype=float)
    batch = x.reshape(-1, params.d)
    resid = batch - params.xi
    value = (
        math.log(2.0)
        + stats.multivariate_normal.logpdf(batch, mean=params.xi, cov=params.omega, allow_singular=False)
        + special.log_ndtr(resid @ params.slant)
    )
    value = np.atleast_1d(value)
    if x.ndim == 2 or (params.d == 1 and x.ndim == 1 and x.size > 1):
        return value
    return float(value[0])


def sn_pdf(params: SnParams, x) -> np.ndarray:
    """Skew-normal density"""
    return np.exp(sn_logpdf(params, x))


def sn_logpdf_derivatives(params: SnParams, x) -> DiffReport:
    """
    Analytic gradient, Hessian and third derivatives of the SN log-density

    Args:
        params: SN parameters
        x: Point (d,)

    Returns:
        DiffReport with the full third tensor zeta_3 eta (x) eta (x) eta
    """
    x = as_vector(x, "x")
    eta = params.slant
    precision = np.linalg.inv(params.omega)
    kappa = float(eta @ (x - params.xi))
    z1, z2, z3 = zeta(1, kappa), zeta(2, kappa), zeta(3, kappa)
    return DiffReport(
        gradient=-precision @ (x - params.xi) + z1 * eta,
        hessian=-precision + z2 * np.outer(eta, eta),
        third_unmixed=z3 * eta ** 3,
        third_full=z3 * np.einsum("i,j,k->ijk", eta, eta, eta),
        step=0.0,
    )


def match_residuals(params: SnParams, inputs: MatchInputs) -> Dict[str, float]:
    """
    Relative residuals of the four matching equations

    Returns:
        Dict with keys mode, hessian, third, kappa
    """
    report = sn_logpdf_derivatives(params, inputs.m)
    eta = params.slant
    kappa = float(eta @ (inputs.m - params.xi))
    scale = max(1.0, float(np.linalg.norm(np.linalg.inv(params.omega) @ (inputs.m - params.xi))))
    return {
        "mode": float(np.linalg.norm(report.gradient)) / scale,
        "hessian": float(np.max(np.abs(-report.hessian - inputs.H))) / float(np.max(np.abs(inputs.H))),
        "third": float(np.max(np.abs(report.third_unmixed - inputs.t))) / max(1.0, float(np.max(np.abs(inputs.t)))),
        "kappa": abs(kappa - zeta(1, kappa) * float(eta @ params.omega @ eta)) / max(1.0, abs(kappa)),
    }


def sn_marginal(params: SnParams, keep: Sequence[int]) -> SnParams:
    """
    Skew-normal parameters of the marginal of the coordinates in `keep`

    Args:
        params: Joint SN parameters
        keep: Retained coordinates, in output order

    Returns:
        SnParams of the marginal
    """
    keep = [int(k) for k in keep]
    if not keep or len(set(keep)) != len(keep) or any(not 0 <= k < params.d for k in keep):
        raise DomainError(f"invalid coordinate subset {keep} for d = {params.d}")
    omega = params.omega[np.ix_(keep, keep)]
    delta = params.delta[keep]
    solved = np.linalg.solve(omega, delta)
    denom = 1.0 - float(delta @ solved)
    if denom <= 0.0:
        raise InfeasibleMatchError("marginal skew-normal has |delta| >= 1")
    return SnParams.from_slant(params.xi[keep], omega, solved / math.sqrt(denom))


def _require_univariate(params: SnParams) -> None:
    if params.d != 1:
        raise DimensionError(f"univariate SN operation requires d = 1, got d = {params.d}")


def bdm_sn_univariate(params: SnParams, theta0: float) -> BdmResult:
    """
    Discrepancy measure under a univariate skew-normal, |2 F(theta0) - 1|

    Args:
        params: SN parameters with d = 1
        theta0: Hypothesized value

    Returns:
        BdmResult with method "sn"
    """
    _require_univariate(params)
    xi, omega2, alpha = float(params.xi[0]), float(params.omega[0, 0]), float(params.alpha[0])
    lower = sn_cdf(theta0, xi, omega2, alpha)
    upper = sn_sf(theta0, xi, omega2, alpha)
    return BdmResult.from_tail("sn", theta0, lower, {"tail_high": upper, "xi": xi, "omega2": omega2, "alpha": alpha})


def sn_quantile(params: SnParams, p: float) -> float:
    """Quantile of a univariate skew-normal by Brent's method"""
    _require_univariate(params)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must be in (0, 1), got {p}")
    xi, omega2, alpha = float(params.xi[0]), float(params.omega[0, 0]), float(params.alpha[0])
    sd = math.sqrt(float(params.covariance[0, 0]))
    if p <= 0.5:
        return bracket_root(lambda x: sn_cdf(x, xi, omega2, alpha) - p, float(params.mean[0]), sd)
    return bracket_root(lambda x: (1.0 - p) - sn_sf(x, xi, omega2, alpha), float(params.mean[0]), sd)


def sn_sample(params: SnParams, n: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Draw from a skew-normal via X = xi + delta |U0| + W, W ~ N(0, Omega - delta delta^T)

    Args:
        params: SN parameters
        n: Number of draws
        seed: Generator seed (default from settings)

    Returns:
        np.ndarray: (n, d) draws
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    delta = params.delta
    residual_cov = params.omega - np.outer(delta, delta)
    chol = np.linalg.cholesky(0.5 * (residual_cov + residual_cov.T))
    u0 = np.abs(rng.standard_normal(n))
    w = rng.standard_normal((n, params.d)) @ chol.T
    return params.xi + np.outer(u0, delta) + w
