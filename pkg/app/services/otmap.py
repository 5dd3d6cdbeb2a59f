"""
Transport map from a fitted skew-normal to the standard multivariate normal,
built around a univariate Gaussianization of the skewed axis, and the
multivariate SN discrepancy measure it induces.
"""
import math
from typing import Optional, Tuple
import numpy as np
from scipy import special, stats
from app.config import settings
from app.exceptions import DomainError
from app.models.results import BdmResult, PushforwardReport
from app.models.skew import OtMap, SnParams
from app.services.calculus import integrate_1d
from app.services.snmatch import sn_quantile, sn_sample
from app.services.specialfn import chi2_cdf, chi2_quantile, sn_cdf, sn_pdf, sn_sf
from app.utils.helpers import inv_sqrt_symmetric
from app.utils.logger import get_logger

logger = get_logger("otmap")


CONSTRUCTIONS = ("whitened", "rotation")


def _rotation(eta: np.ndarray) -> np.ndarray:
    d = eta.size
    if d == 1 or not np.any(eta):
        return np.eye(d)
    Q, _ = np.linalg.qr(eta.reshape(d, 1), mode="complete")
    if Q[:, 0] @ eta < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def _gaussianize(y1, omega1_sq: float, shape1: float) -> Tuple[np.ndarray, int]:
    """Phi^-1(F_SN(y1)), taking whichever tail is smaller; saturates at the configured bound"""
    y1 = np.asarray(y1, dtype=float)
    lower = np.asarray(sn_cdf(y1, 0.0, omega1_sq, shape1), dtype=float)
    upper = np.asarray(sn_sf(y1, 0.0, omega1_sq, shape1), dtype=float)
    with np.errstate(divide="ignore"):
        z = np.where(lower < 0.5, special.ndtri(lower), -special.ndtri(upper))
    bound = settings.QUANTILE_SATURATION
    saturated = int(np.count_nonzero(~(np.abs(z) < bound)))
    return np.clip(np.nan_to_num(z, nan=0.0, posinf=bound, neginf=-bound), -bound, bound), saturated


def _build_whitened(params: SnParams) -> OtMap:
    # Omega^-1/2 (x - xi) ~ SN(0, I, gamma) with gamma = Omega^1/2 eta
    W = inv_sqrt_symmetric(params.omega)
    gamma = np.linalg.solve(W, params.slant)
    Q = _rotation(gamma)
    d = params.d
    return OtMap(
        construction="whitened",
        W=W,
        Q=Q,
        omega1_sq=1.0,
        shape1=float(np.linalg.norm(gamma)),
        mu=np.zeros(d),
        V=np.eye(d),
        V_inv_sqrt=np.eye(d),
    )


def _build_rotation(params: SnParams) -> OtMap:
    d = params.d
    Q = _rotation(params.slant)
    sigma = Q.T @ params.omega @ Q
    sigma = 0.5 * (sigma + sigma.T)
    delta_rot = Q.T @ params.delta
    omega1_sq = float(sigma[0, 0])

    # standardized shape of the first rotated coordinate
    ratio = delta_rot[0] / math.sqrt(omega1_sq)
    shape1 = float(ratio / math.sqrt(1.0 - ratio * ratio))

    mu = np.zeros(d)
    mu[1:] = delta_rot[1:] * math.sqrt(2.0 / math.pi)

    V = np.empty((d, d))
    V[0, 0] = 1.0
    if d > 1:
        sd1 = math.sqrt(omega1_sq)
        cross = integrate_1d(
            lambda y: float(_gaussianize(y, omega1_sq, shape1)[0]) * y * sn_pdf(y, 0.0, omega1_sq, shape1),
            -math.inf,
            math.inf,
            tol=1e-12 * sd1,
        )
        V[1:, 0] = V[0, 1:] = sigma[1:, 0] / omega1_sq * cross
        V[1:, 1:] = sigma[1:, 1:] - (2.0 / math.pi) * np.outer(delta_rot[1:], delta_rot[1:])

    return OtMap(
        construction="rotation",
        W=np.eye(d),
        Q=Q,
        omega1_sq=omega1_sq,
        shape1=shape1,
        mu=mu,
        V=V,
        V_inv_sqrt=inv_sqrt_symmetric(V),
    )


def build_ot(params: SnParams, construction: Optional[str] = None) -> OtMap:
    """
    Build the transport map of a skew-normal onto N(0, I)

    "whitened" standardizes by Omega^-1/2, rotates the whitened slant onto
    the first axis, Gaussianizes that axis and rotates back; its pushforward
    is exactly N(0, I) for every slant direction. "rotation" rotates the raw
    slant onto the first axis and standardizes the remaining coordinates by
    their first two moments, which is exact only when the slant is an
    eigenvector of Omega.

    Args:
        params: Fitted SN parameters
        construction: "whitened" or "rotation" (default from settings)

    Returns:
        OtMap
    """
    construction = construction or settings.OT_CONSTRUCTION
    if construction not in CONSTRUCTIONS:
        raise DomainError(f"construction must be one of {CONSTRUCTIONS}, got {construction!r}")
    ot = _build_whitened(params) if construction == "whitened" else _build_rotation(params)
    logger.info(f"Built {construction} transport map: d={ot.d}, omega1_sq={ot.omega1_sq:.6g}, shape1={ot.shape1:.6g}")
    return ot


def _apply(ot: OtMap, params: SnParams, x) -> Tuple[np.ndarray, int]:
    x = np.asarray(x, dtype=float)
    batch = x.reshape(-1, ot.d)
    y = (batch - params.xi) @ ot.W @ ot.Q
    z1, saturated = _gaussianize(y[:, 0], ot.omega1_sq, ot.shape1)
    w = y.copy()
    w[:, 0] = z1
    u = (w - ot.mu) @ ot.V_inv_sqrt
    if ot.construction == "whitened":
        u = u @ ot.Q.T
    return (u[0] if x.ndim <= 1 and batch.shape[0] == 1 else u), saturated


def ot_apply(ot: OtMap, params: SnParams, x) -> np.ndarray:
    """
    Evaluate T(x) = T3(T2(T1(x)))

    Args:
        ot: Transport map built from `params`
        params: SN parameters
        x: Point (d,) or batch (m, d)

    Returns:
        np.ndarray: Image(s) in the reference space
    """
    u, saturated = _apply(ot, params, x)
    if saturated:
        logger.warning(f"{saturated} point(s) hit the Gaussianization saturation bound")
    return u


def ot_inverse(ot: OtMap, params: SnParams, u) -> np.ndarray:
    """Closed-form inverse of the transport map for a single reference point"""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (ot.d,):
        raise DomainError(f"u must have {ot.d} entries, got shape {u.shape}")
    if ot.construction == "whitened":
        u = ot.Q.T @ u
    w = np.linalg.solve(ot.V_inv_sqrt, u) + ot.mu
    axis = SnParams(xi=[0.0], omega=[[ot.omega1_sq]], alpha=[ot.shape1])
    y = w.copy()
    y[0] = sn_quantile(axis, float(special.ndtr(w[0])))
    return params.xi + np.linalg.solve(ot.W, ot.Q @ y)


def ot_center(ot: OtMap, params: SnParams) -> np.ndarray:
    """The unique point mapped to the origin"""
    return ot_inverse(ot, params, np.zeros(ot.d))


def ot_radius(ot: OtMap, params: SnParams, x) -> float:
    """||T(x)||"""
    return float(np.linalg.norm(ot_apply(ot, params, x)))


def in_central_region(ot: OtMap, params: SnParams, x, level: float) -> bool:
    """Whether x lies in the center-outward quantile region of probability `level`"""
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must be in (0, 1), got {level}")
    return bool(chi2_cdf(ot_radius(ot, params, x) ** 2, ot.d) <= level)


def bdm_sn_multi(params: SnParams, theta0, ot: Optional[OtMap] = None) -> BdmResult:
    """
    Multivariate SN discrepancy measure chi2_cdf(||T(theta0)||^2, d)

    Args:
        params: SN parameters
        theta0: Hypothesized point
        ot: Prebuilt transport map

    Returns:
        BdmResult with method "sn"
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if theta0.shape != (params.d,):
        raise DomainError(f"theta0 must have {params.d} entries, got {theta0.size}")
    ot = ot or build_ot(params)
    u = ot_apply(ot, params, theta0)
    radius_sq = float(u @ u)
    return BdmResult(
        method="sn",
        theta0=theta0.tolist(),
        delta=float(chi2_cdf(radius_sq, params.d)),
        diagnostics={"u": u.tolist(), "norm": math.sqrt(radius_sq)},
    )


def pushforward_diagnostic(
    params: SnParams,
    n_draws: Optional[int] = None,
    seed: Optional[int] = None,
    ot: Optional[OtMap] = None,
    check_stability: bool = False,
) -> PushforwardReport:
    """
    Monte Carlo check that T pushes the SN forward to N(0, I)

    Args:
        params: SN parameters
        n_draws: Number of draws (>= 10^4, default from settings)
        seed: Generator seed (default from settings)
        ot: Prebuilt transport map
        check_stability: Re-run with twice the draws and record whether the
            acceptance decision is unchanged

    Returns:
        PushforwardReport
    """
    n_draws = settings.MC_DRAWS if n_draws is None else int(n_draws)
    seed = settings.DEFAULT_SEED if seed is None else int(seed)
    if n_draws < 10_000:
        raise DomainError(f"n_draws must be at least 10000, got {n_draws}")
    ot = ot or build_ot(params)

    report = _report(ot, params, n_draws, seed)
    if check_stability:
        doubled = _report(ot, params, 2 * n_draws, seed)
        report = report.model_copy(update={"stable": report.passes() == doubled.passes()})
    logger.info(
        f"Pushforward: mean={report.max_abs_mean:.4f}, cov={report.cov_error:.4f}, "
        f"skew={report.max_abs_skewness:.4f}, qq={report.qq_correlation:.5f}"
    )
    return report


def _report(ot: OtMap, params: SnParams, n_draws: int, seed: int) -> PushforwardReport:
    draws = sn_sample(params, n_draws, seed)
    u, saturated = _apply(ot, params, draws)
    u = u.reshape(n_draws, ot.d)
    cov = np.atleast_2d(np.cov(u, rowvar=False))
    radii = np.sort(np.sum(u * u, axis=1))
    expected = chi2_quantile((np.arange(1, n_draws + 1) - 0.5) / n_draws, ot.d)
    return PushforwardReport(
        n_draws=n_draws,
        seed=seed,
        max_abs_mean=float(np.max(np.abs(u.mean(axis=0)))),
        cov_error=float(np.max(np.abs(cov - np.eye(ot.d)))),
        max_abs_skewness=float(np.max(np.abs(stats.skew(u, axis=0)))),
        qq_correlation=float(np.corrcoef(radii, expected)[0, 1]),
        saturated=saturated,
    )
