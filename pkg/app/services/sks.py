"""
Skew-modal (SKS) approximation: scalar density, closed-form and numeric
tail areas, and the marginal SKS for one coordinate of a vector parameter.
"""
import math
from typing import Optional
import numpy as np
from scipy import special
from app.config import settings
from app.exceptions import CapabilityError, DimensionError, DomainError
from app.models.geometry import PosteriorGeometry
from app.models.results import BdmResult
from app.models.skew import MarginalSksFit, SkewModalFit
from app.services.calculus import integrate_1d
from app.services.specialfn import norm_cdf, norm_pdf
from app.utils.helpers import bracket_root, sign0
from app.utils.logger import get_logger

logger = get_logger("sks")

SOURCES = ("posterior", "likelihood")
VARIANTS = ("conditional", "printed")


def _resolve_source(source: Optional[str]) -> str:
    source = source or settings.SKS_DERIVATIVE_SOURCE
    if source not in SOURCES:
        raise DomainError(f"derivative source must be one of {SOURCES}, got {source!r}")
    return source


def sks_fit(geom: PosteriorGeometry, source: Optional[str] = None) -> SkewModalFit:
    """
    Fit the scalar skew-modal approximation at the posterior mode

    Args:
        geom: Posterior geometry (d = 1)
        source: "posterior" or "likelihood" derivatives (default from settings)

    Returns:
        SkewModalFit
    """
    if geom.dim != 1:
        raise DimensionError(f"scalar SKS requires d = 1, got d = {geom.dim}")
    source = _resolve_source(source)
    info = float(geom.info_at_map(source)[0, 0])
    ell3 = float(geom.third_at(source)[0, 0, 0])
    fit = SkewModalFit(center=float(geom.map_point[0]), omega_tilde=geom.n / info, ell3=ell3, n=geom.n, source=source)
    logger.debug(f"SKS fit: center={fit.center:.6g}, omega_tilde={fit.omega_tilde:.6g}, ell3={ell3:.6g}")
    return fit


def _skew_density(h, variance: float, linear: float, cubic: float):
    """2 phi(h; 0, variance) Phi(linear h + cubic h^3)"""
    h = np.asarray(h, dtype=float)
    sd = math.sqrt(variance)
    value = 2.0 * norm_pdf(h / sd) / sd * special.ndtr(linear * h + cubic * h ** 3)
    return float(value) if value.ndim == 0 else value


def sks_density(fit: SkewModalFit, h):
    """
    SKS density on the local scale h = sqrt(n)(theta - center)

    Args:
        fit: Scalar SKS fit
        h: Local coordinate(s)

    Returns:
        Density value(s), nonnegative
    """
    return _skew_density(h, fit.omega_tilde, 0.0, fit.skew_coefficient)


def sks_density_theta(fit: SkewModalFit, theta):
    """SKS density on the parameter scale"""
    return math.sqrt(fit.n) * sks_density(fit, fit.to_h(theta))


def _correction(fit: SkewModalFit, z0: float) -> float:
    return fit.ell3 / (6.0 * fit.n ** 1.5) * fit.omega_tilde ** 1.5 * norm_pdf(z0) * (z0 * z0 + 2.0)


def sks_tail_closed(fit: SkewModalFit, theta0: float) -> float:
    """
    Closed-form SKS upper tail P(theta >= theta0 | y) from the linearized skewing factor

    The value may fall outside [0, 1]; it is returned unclamped.
    """
    z0 = float(fit.to_h(theta0)) / math.sqrt(fit.omega_tilde)
    return (1.0 - norm_cdf(z0)) + _correction(fit, z0)


def bdm_sks(fit: SkewModalFit, theta0: float) -> BdmResult:
    """
    Closed-form SKS discrepancy measure, clamped into [0, 1]

    Args:
        fit: Scalar SKS fit
        theta0: Hypothesized value

    Returns:
        BdmResult with method "sks"; the raw value and tail stay in diagnostics
    """
    h0 = float(fit.to_h(theta0))
    z0 = h0 / math.sqrt(fit.omega_tilde)
    raw = 2.0 * norm_cdf(abs(z0)) - 2.0 * sign0(h0) * _correction(fit, z0) - 1.0
    result = BdmResult.from_raw(
        "sks",
        theta0,
        raw,
        {"h0": h0, "tail_high_raw": sks_tail_closed(fit, theta0), "raw_delta": raw, "source": fit.source},
    )
    if result.clamped:
        logger.warning(f"SKS measure {raw:.4g} clamped to {result.delta} at theta0={theta0}")
    return result


def _tails(variance: float, linear: float, cubic: float, h0: float):
    """(lower, upper) tail masses of the skew density, each integrated on its own side"""
    density = lambda h: _skew_density(h, variance, linear, cubic)
    if h0 <= 0.0:
        lower = integrate_1d(density, -math.inf, h0)
        return lower, 1.0 - lower
    upper = integrate_1d(density, h0, math.inf)
    return 1.0 - upper, upper


def sks_tail_numeric(fit: SkewModalFit, theta0: float) -> float:
    """Upper tail P(theta >= theta0 | y) by quadrature of the SKS density"""
    _, upper = _tails(fit.omega_tilde, 0.0, fit.skew_coefficient, float(fit.to_h(theta0)))
    return min(max(upper, 0.0), 1.0)


def sks_cdf(fit: SkewModalFit, theta: float) -> float:
    """Lower tail P(theta' <= theta | y) by quadrature of the SKS density"""
    lower, _ = _tails(fit.omega_tilde, 0.0, fit.skew_coefficient, float(fit.to_h(theta)))
    return min(max(lower, 0.0), 1.0)


def sks_median(fit: SkewModalFit) -> float:
    """Median of the SKS approximation"""
    sd = math.sqrt(fit.omega_tilde / fit.n)
    return bracket_root(lambda t: sks_cdf(fit, t) - 0.5, fit.center, sd)


def bdm_sks_numeric(fit: SkewModalFit, theta0: float) -> BdmResult:
    """SKS discrepancy measure from the numeric tail area"""
    lower, upper = _tails(fit.omega_tilde, 0.0, fit.skew_coefficient, float(fit.to_h(theta0)))
    return BdmResult.from_tail("sks-num", theta0, lower, {"tail_high": upper, "source": fit.source})


def _permuted(geom: PosteriorGeometry, psi_index: int, source: str):
    d = geom.dim
    order = [psi_index] + [i for i in range(d) if i != psi_index]
    Omega = geom.n * np.linalg.inv(geom.info_at_map(source))
    T = geom.third_at(source)
    return Omega, Omega[np.ix_(order, order)], T[np.ix_(order, order, order)]


def marginal_sks_fit(
    geom: PosteriorGeometry,
    psi_index: int,
    source: Optional[str] = None,
    variant: Optional[str] = None,
) -> MarginalSksFit:
    """
    Fit the marginal SKS approximation of one coordinate

    With variant "conditional" the skewing coefficients are the conditional
    moments of the cubic skewing factor given psi; "printed" evaluates the
    uncollapsed summation form term by term.

    Args:
        geom: Posterior geometry (d >= 2)
        psi_index: Coordinate of interest
        source: "posterior" or "likelihood" derivatives
        variant: "conditional" or "printed"

    Returns:
        MarginalSksFit

    Raises:
        CapabilityError: If mixed third derivatives are unavailable
    """
    if geom.dim < 2:
        raise DimensionError(f"marginal SKS requires d >= 2, got d = {geom.dim}")
    if not 0 <= psi_index < geom.dim:
        raise DomainError(f"psi_index {psi_index} out of range for d = {geom.dim}")
    if not geom.third_complete:
        raise CapabilityError("marginal SKS needs the full third-derivative tensor")
    source = _resolve_source(source)
    variant = variant or settings.MARGINAL_SKS_VARIANT
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}, got {variant!r}")

    Omega, W, T = _permuted(geom, psi_index, source)
    w1 = W[:, 0]
    w11 = float(W[0, 0])

    if variant == "conditional":
        C = W - np.outer(w1, w1) / w11
        v3111 = float(np.einsum("stl,s,t,l->", T, w1, w1, w1)) / w11 ** 3
        v11 = 3.0 * float(np.einsum("stl,st,l->", T, C, w1)) / w11
    else:
        v11 = 3.0 * float(np.einsum("ij,ij->", T[0], W)) + 3.0 * float(np.einsum("ijk,ij,k->", T, W, w1))
        v3111 = (
            float(T[0, 0, 0])
            + 3.0 * float(T[0, 0, :] @ w1)
            + 3.0 * float(np.einsum("ij,ij,j->", T[0], W, w1))
            + float(np.einsum("ijk,ij,k->", T, W, w1)) * w11
        )

    logger.info(f"Marginal SKS ({variant}) for coordinate {psi_index}: v11={v11:.6g}, v3111={v3111:.6g}")
    return MarginalSksFit(
        Omega=Omega,
        Omega11=float(Omega[psi_index, psi_index]),
        v11=v11,
        v3111=v3111,
        n=geom.n,
        psi_index=psi_index,
        center=float(geom.map_point[psi_index]),
        variant=variant,
    )


def _marginal_coefficients(fit: MarginalSksFit):
    scale = math.sqrt(2.0 * math.pi) / (12.0 * fit.n ** 1.5)
    return scale * fit.v11, scale * fit.v3111


def marginal_sks_density(fit: MarginalSksFit, psi):
    """Marginal SKS density on the parameter scale"""
    linear, cubic = _marginal_coefficients(fit)
    h = math.sqrt(fit.n) * (np.asarray(psi, dtype=float) - fit.center)
    return math.sqrt(fit.n) * _skew_density(h, fit.Omega11, linear, cubic)


def marginal_sks_cdf(fit: MarginalSksFit, psi: float) -> float:
    """Lower tail of the marginal SKS approximation"""
    linear, cubic = _marginal_coefficients(fit)
    lower, _ = _tails(fit.Omega11, linear, cubic, math.sqrt(fit.n) * (psi - fit.center))
    return min(max(lower, 0.0), 1.0)


def bdm_marginal_sks(fit: MarginalSksFit, psi_tilde: Optional[float], psi0: float) -> BdmResult:
    """
    Marginal SKS discrepancy measure by quadrature of the marginal density

    Args:
        fit: Marginal SKS fit
        psi_tilde: Mode coordinate of psi (defaults to the fit center)
        psi0: Hypothesized value

    Returns:
        BdmResult with method "sks"
    """
    center = fit.center if psi_tilde is None else float(psi_tilde)
    linear, cubic = _marginal_coefficients(fit)
    h0 = math.sqrt(fit.n) * (float(psi0) - center)
    lower, upper = _tails(fit.Omega11, linear, cubic, h0)
    return BdmResult.from_tail(
        "sks",
        psi0,
        lower,
        {"tail_high": upper, "v11": fit.v11, "v3111": fit.v3111, "variant": fit.variant, "psi_index": fit.psi_index},
    )
