"""
First-order and higher-order discrepancy measures for scalar parameters,
with and without nuisance parameters, and the chi-squared joint forms.
"""
import math
from typing import Callable, List, Optional, Sequence, Tuple
import numpy as np
from app.config import settings
from app.exceptions import BdmError, DimensionError, DomainError, NumericError
from app.models.dataset import Dataset, ModelSpec
from app.models.geometry import PosteriorGeometry
from app.models.results import BdmResult, RootStatistic, equi_tailed_delta
from app.services.calculus import constrained_maximize, fd_hessian, profile_maximize
from app.services.specialfn import chi2_cdf, norm_cdf, norm_quantile
from app.services.statmodels import expected_information, loglik_gradient, loglik_hessian
from app.utils.helpers import bracket_root, sign0
from app.utils.logger import get_logger

logger = get_logger("univariate")

PRIOR_MODES = ("general", "jeffreys")

# (r, q, r*) at a point
RootParts = Tuple[float, float, float]


def _require_scalar(geom: PosteriorGeometry) -> None:
    if geom.dim != 1:
        raise DimensionError(f"scalar method requires d = 1, got d = {geom.dim}")


def _require_nuisance(geom: PosteriorGeometry, psi_index: int) -> None:
    if geom.dim < 2:
        raise DimensionError(f"profile method requires d >= 2, got d = {geom.dim}")
    if not 0 <= psi_index < geom.dim:
        raise DomainError(f"psi_index {psi_index} out of range for d = {geom.dim}")


def _others(d: int, psi_index: int) -> List[int]:
    return [i for i in range(d) if i != psi_index]


def profile_information(geom: PosteriorGeometry, psi_index: int) -> float:
    """j_p(psi_hat) = 1 / [j(theta_hat)^-1]_psi,psi"""
    covariance = np.linalg.inv(geom.obs_info_mle)
    return 1.0 / float(covariance[psi_index, psi_index])


def bdm_io(geom: PosteriorGeometry, theta0: float) -> BdmResult:
    """
    First-order discrepancy measure from the Wald statistic

    Args:
        geom: Posterior geometry (d = 1)
        theta0: Hypothesized value

    Returns:
        BdmResult with method "io"
    """
    _require_scalar(geom)
    theta_hat = float(geom.mle[0])
    info = float(geom.obs_info_mle[0, 0])
    w = (float(theta0) - theta_hat) * math.sqrt(info)
    return BdmResult.from_tail("io", theta0, norm_cdf(w), {"wald": w, "theta_hat": theta_hat, "info": info})


def bdm_io_profile(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, psi_index: int, psi0: float) -> BdmResult:
    """
    First-order discrepancy measure for one coordinate from the profile Wald statistic

    The profile information comes from the inverse observed information; the
    curvature of the numerically profiled log-likelihood is reported as a
    cross-check.
    """
    _require_nuisance(geom, psi_index)
    psi_hat = float(geom.mle[psi_index])
    info = profile_information(geom, psi_index)
    w = (float(psi0) - psi_hat) * math.sqrt(info)

    diagnostics = {"wald": w, "psi_hat": psi_hat, "profile_info": info, "psi_index": psi_index}
    try:
        lam_hat = geom.mle[_others(geom.dim, psi_index)]

        def profile_loglik(psi: np.ndarray) -> float:
            lam = profile_maximize(
                lambda t: model.loglik(t, data),
                psi_index,
                float(psi[0]),
                lam_hat,
                grad=lambda t: loglik_gradient(model, data, t),
                hess=lambda t: loglik_hessian(model, data, t),
            )
            return float(model.loglik(_embed(geom.dim, psi_index, float(psi[0]), lam), data))

        fd_info = -float(fd_hessian(profile_loglik, np.array([psi_hat]))[0, 0])
        diagnostics["profile_info_fd"] = fd_info
        diagnostics["profile_info_rel_diff"] = abs(fd_info - info) / info
    except BdmError as e:
        logger.warning(f"Profile curvature cross-check skipped: {e.message}")

    return BdmResult.from_tail("io", psi0, norm_cdf(w), diagnostics)


def _embed(d: int, psi_index: int, psi: float, lam: np.ndarray) -> np.ndarray:
    theta = np.empty(d)
    theta[psi_index] = psi
    theta[_others(d, psi_index)] = lam
    return theta


def _combine(r: float, q: float) -> float:
    if r == 0.0 or q / r <= 0.0:
        raise NumericError(f"r* undefined at r = {r}, q = {q}")
    return r + math.log(q / r) / r


def _bridge(parts: Callable[[float], RootParts], center: float, sd: float, bounds: Tuple[float, float], x0: float) -> float:
    """
    Cubic interpolation of r* across its removable singularity at the MLE

    Solves r(x) = +-level for both configured levels and interpolates r*
    through the four points.
    """
    nodes = []
    for level in settings.RSTAR_BRIDGE_LEVELS:
        for target in (level, -level):
            nodes.append(
                bracket_root(lambda x, t=target: parts(x)[0] - t, center, 2.0 * level * sd, bounds=bounds)
            )
    nodes = np.array(nodes)
    values = np.array([parts(float(x))[2] for x in nodes])
    coefficients = np.polyfit(nodes - center, values, 3)
    return float(np.polyval(coefficients, x0 - center))


def _root_statistic(parts: Callable[[float], RootParts], center: float, sd: float, bounds: Tuple[float, float], x0: float, fallback: bool) -> RootStatistic:
    r, q, _ = _raw_parts(parts, x0)
    if abs(r) < settings.RSTAR_GUARD:
        value = _bridge(parts, center, sd, bounds, x0)
        logger.warning(f"r* bridged across the singularity at {x0:.6g} (|r| = {abs(r):.2e})")
        return RootStatistic(value=value, r=r, q=q, bridged=True, expected_info_fallback=fallback)
    return RootStatistic(value=_combine(r, q), r=r, q=q, expected_info_fallback=fallback)


def _raw_parts(parts: Callable[[float], RootParts], x0: float) -> RootParts:
    try:
        return parts(x0)
    except NumericError:
        raise
    except (ValueError, ZeroDivisionError, OverflowError) as e:
        logger.error(f"Failed to evaluate r at {x0}: {e}")
        raise NumericError(f"r undefined at {x0}: {e}") from e


def _scalar_parts(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, prior_mode: str) -> Tuple[Callable[[float], RootParts], bool]:
    if prior_mode not in PRIOR_MODES:
        raise DomainError(f"prior_mode must be one of {PRIOR_MODES}, got {prior_mode!r}")
    theta_hat = float(geom.mle[0])
    loglik_hat = float(geom.loglik_at_mle)
    root_info = math.sqrt(float(geom.obs_info_mle[0, 0]))
    fallback = False
    if prior_mode == "jeffreys":
        info_hat, fallback = expected_information(model, data, [theta_hat])
        root_expected_hat = math.sqrt(float(info_hat[0, 0]))
    else:
        logprior_hat = float(model.logprior(np.array([theta_hat])))

    def parts(theta: float) -> RootParts:
        point = np.array([theta])
        drop = max(loglik_hat - float(model.loglik(point, data)), 0.0)
        r = sign0(theta_hat - theta) * math.sqrt(2.0 * drop)
        score = float(loglik_gradient(model, data, point)[0])
        if prior_mode == "jeffreys":
            info0, _ = expected_information(model, data, point)
            q = score / root_info * root_expected_hat / math.sqrt(float(info0[0, 0]))
        else:
            q = score / root_info * math.exp(logprior_hat - float(model.logprior(point)))
        rstar = _combine(r, q) if r != 0.0 else math.nan
        return r, q, rstar

    return parts, fallback


def rstar(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, theta0: float, prior_mode: str = "jeffreys") -> RootStatistic:
    """
    Modified signed likelihood root r* for a scalar parameter

    Inside the guard band around the MLE the value is bridged by cubic
    interpolation and flagged.

    Args:
        model: Model specification (d = 1)
        data: Dataset
        geom: Posterior geometry
        theta0: Evaluation point
        prior_mode: "general" (prior ratio) or "jeffreys" (expected information ratio)

    Returns:
        RootStatistic
    """
    _require_scalar(geom)
    parts, fallback = _scalar_parts(model, data, geom, prior_mode)
    sd = 1.0 / math.sqrt(float(geom.obs_info_mle[0, 0]))
    return _root_statistic(parts, float(geom.mle[0]), sd, model.coordinate_bounds(0), float(theta0), fallback)


def _tail_result(method: str, theta0: float, stat: RootStatistic, extra: dict) -> BdmResult:
    tail_low = norm_cdf(-stat.value)
    diagnostics = {**stat.to_dict(), **extra}
    if stat.expected_info_fallback:
        diagnostics["note"] = "observed information used in place of expected information"
    if stat.bridged and settings.HO_GUARD_CONVENTION == "zero":
        diagnostics["bridged_tail_low"] = tail_low
        diagnostics["bridged_delta"] = equi_tailed_delta(tail_low)
        return BdmResult.from_tail(method, theta0, 0.5, diagnostics)
    return BdmResult.from_tail(method, theta0, tail_low, diagnostics)


def bdm_ho(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, theta0: float, prior_mode: str = "jeffreys") -> BdmResult:
    """Higher-order discrepancy measure, P(theta >= theta0 | y) ~ Phi(r*)"""
    stat = rstar(model, data, geom, theta0, prior_mode)
    return _tail_result("ho", theta0, stat, {"prior_mode": prior_mode})


def _profile_parts(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, psi_index: int) -> Callable[[float], RootParts]:
    d = geom.dim
    others = _others(d, psi_index)
    theta_hat = np.asarray(geom.mle)
    psi_hat = float(theta_hat[psi_index])
    lam_hat = theta_hat[others]
    loglik_hat = float(geom.loglik_at_mle)
    root_jp = math.sqrt(profile_information(geom, psi_index))
    _, logdet_hat = np.linalg.slogdet(geom.obs_info_mle[np.ix_(others, others)])
    logprior_hat = float(model.logprior(theta_hat))

    def parts(psi: float) -> RootParts:
        lam = profile_maximize(
            lambda t: model.loglik(t, data),
            psi_index,
            psi,
            lam_hat,
            grad=lambda t: loglik_gradient(model, data, t),
            hess=lambda t: loglik_hessian(model, data, t),
        )
        point = _embed(d, psi_index, psi, lam)
        drop = max(loglik_hat - float(model.loglik(point, data)), 0.0)
        r = sign0(psi_hat - psi) * math.sqrt(2.0 * drop)
        score = float(loglik_gradient(model, data, point)[psi_index])
        j_constrained = -loglik_hessian(model, data, point)[np.ix_(others, others)]
        sign, logdet = np.linalg.slogdet(j_constrained)
        if sign <= 0:
            raise NumericError(f"nuisance information not positive definite at psi = {psi}")
        q = (
            score / root_jp
            * math.exp(0.5 * (logdet - logdet_hat))
            * math.exp(logprior_hat - float(model.logprior(point)))
        )
        rstar_b = _combine(r, q) if r != 0.0 else math.nan
        return r, q, rstar_b

    return parts


def rstar_profile(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, psi_index: int, psi0: float) -> RootStatistic:
    """
    Modified profile root r*_B for one coordinate in the presence of nuisance parameters

    Args:
        model: Model specification (d >= 2)
        data: Dataset
        geom: Posterior geometry
        psi_index: Coordinate of interest
        psi0: Evaluation point

    Returns:
        RootStatistic
    """
    _require_nuisance(geom, psi_index)
    parts = _profile_parts(model, data, geom, psi_index)
    sd = 1.0 / math.sqrt(profile_information(geom, psi_index))
    return _root_statistic(parts, float(geom.mle[psi_index]), sd, model.coordinate_bounds(psi_index), float(psi0), False)


def bdm_ho_profile(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, psi_index: int, psi0: float) -> BdmResult:
    """Higher-order discrepancy measure for one coordinate, tail via Phi(r*_B)"""
    stat = rstar_profile(model, data, geom, psi_index, psi0)
    return _tail_result("ho", psi0, stat, {"psi_index": psi_index})


def _rstar_function(model: ModelSpec, data: Dataset, geom: PosteriorGeometry, psi_index: Optional[int], prior_mode: str):
    if psi_index is None:
        _require_scalar(geom)
        parts, fallback = _scalar_parts(model, data, geom, prior_mode)
        center = float(geom.mle[0])
        sd = 1.0 / math.sqrt(float(geom.obs_info_mle[0, 0]))
        bounds = model.coordinate_bounds(0)
    else:
        _require_nuisance(geom, psi_index)
        parts, fallback = _profile_parts(model, data, geom, psi_index), False
        center = float(geom.mle[psi_index])
        sd = 1.0 / math.sqrt(profile_information(geom, psi_index))
        bounds = model.coordinate_bounds(psi_index)

    def value(x: float) -> float:
        return _root_statistic(parts, center, sd, bounds, x, fallback).value

    return value, center, sd, bounds


def posterior_median_rstar(
    model: ModelSpec,
    data: Dataset,
    geom: PosteriorGeometry,
    psi_index: Optional[int] = None,
    prior_mode: str = "jeffreys",
) -> float:
    """
    Posterior median approximated as the root of r* (or r*_B)

    Returns:
        float: Approximate posterior median

    Raises:
        BracketingError: If no sign change is found
    """
    value, center, sd, bounds = _rstar_function(model, data, geom, psi_index, prior_mode)
    median = bracket_root(value, center, sd, bounds=bounds)
    logger.info(f"r* median: {median:.6g}")
    return median


def credible_interval_rstar(
    model: ModelSpec,
    data: Dataset,
    geom: PosteriorGeometry,
    alpha: float,
    psi_index: Optional[int] = None,
    prior_mode: str = "jeffreys",
) -> Tuple[float, float]:
    """
    Equi-tailed credible interval {theta : |r*(theta)| <= z_(1 - alpha/2)}

    Args:
        model: Model specification
        data: Dataset
        geom: Posterior geometry
        alpha: Tail level in (0, 1)
        psi_index: Coordinate of interest when d >= 2
        prior_mode: Prior handling of the scalar r*

    Returns:
        Tuple of (lower, upper)
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    z = norm_quantile(1.0 - 0.5 * alpha)
    value, center, sd, bounds = _rstar_function(model, data, geom, psi_index, prior_mode)
    median = bracket_root(value, center, sd, bounds=bounds)
    if z == 0.0:
        return median, median
    lower = bracket_root(lambda x: value(x) - z, median, sd, bounds=bounds)
    upper = bracket_root(lambda x: value(x) + z, median, sd, bounds=bounds)
    return lower, upper


def ho_density(
    model: ModelSpec,
    data: Dataset,
    geom: PosteriorGeometry,
    grid: Sequence[float],
    psi_index: Optional[int] = None,
    prior_mode: str = "jeffreys",
) -> np.ndarray:
    """
    Density implied by the higher-order tail, by central differences of Phi(-r*)

    Args:
        model: Model specification
        data: Dataset
        geom: Posterior geometry
        grid: Evaluation points
        psi_index: Coordinate of interest when d >= 2
        prior_mode: Prior handling of the scalar r*

    Returns:
        np.ndarray: Density values on the grid
    """
    value, _, sd, (lo, hi) = _rstar_function(model, data, geom, psi_index, prior_mode)
    h = 1e-4 * sd
    out = np.zeros(len(grid))
    for k, x in enumerate(grid):
        if not (lo < x - h and x + h < hi):
            continue
        out[k] = (norm_cdf(-value(x + h)) - norm_cdf(-value(x - h))) / (2.0 * h)
    return np.maximum(out, 0.0)


def bdm_wald_multi(
    geom: PosteriorGeometry,
    theta0: Sequence[float],
    use_loglik_ratio: bool = False,
    model: Optional[ModelSpec] = None,
    data: Optional[Dataset] = None,
    indices: Optional[Sequence[int]] = None,
) -> BdmResult:
    """
    First-order joint discrepancy measure from a chi-squared statistic

    With `indices` the hypothesis fixes only those coordinates: the Wald
    form uses the matching block of the inverse information and the
    likelihood-ratio form maximizes over the remaining coordinates.

    Args:
        geom: Posterior geometry
        theta0: Hypothesized values (length d, or len(indices))
        use_loglik_ratio: Use 2(l(theta_hat) - l(theta0)) instead of the Wald quadratic form
        model: Model specification (needed for the likelihood ratio)
        data: Dataset (needed for the likelihood ratio)
        indices: Coordinates fixed by the hypothesis

    Returns:
        BdmResult with method "wald" or "lr"
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    d = geom.dim
    idx = list(range(d)) if indices is None else [int(i) for i in indices]
    if len(set(idx)) != len(idx) or any(not 0 <= i < d for i in idx):
        raise DomainError(f"invalid coordinate subset {idx} for d = {d}")
    if theta0.size != len(idx):
        raise DimensionError(f"theta0 has {theta0.size} entries, hypothesis fixes {len(idx)}")

    theta_hat = np.asarray(geom.mle)
    if use_loglik_ratio:
        if model is None or data is None:
            raise DomainError("the likelihood-ratio form needs the model and data")
        free = [i for i in range(d) if i not in idx]
        point = np.empty(d)
        point[idx] = theta0
        if free:
            point[free] = constrained_maximize(
                lambda t: model.loglik(t, data),
                idx,
                theta0,
                theta_hat[free],
                grad=lambda t: loglik_gradient(model, data, t),
                hess=lambda t: loglik_hessian(model, data, t),
            )
        statistic = max(2.0 * (float(geom.loglik_at_mle) - float(model.loglik(point, data))), 0.0)
        method = "lr"
    else:
        diff = theta0 - theta_hat[idx]
        if len(idx) == d:
            block = geom.obs_info_mle
        else:
            block = np.linalg.inv(np.linalg.inv(geom.obs_info_mle)[np.ix_(idx, idx)])
        statistic = float(diff @ block @ diff)
        method = "wald"

    delta = float(chi2_cdf(statistic, len(idx)))
    return BdmResult(
        method=method,
        theta0=theta0.tolist(),
        delta=delta,
        diagnostics={"statistic": statistic, "df": len(idx), "indices": idx},
    )
