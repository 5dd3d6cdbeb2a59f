"""
Special functions: normal distribution, chi-squared CDF, Owen's T,
univariate skew-normal CDF and the derivatives of log Phi.
"""
import math
from typing import Union
import numpy as np
from scipy import integrate, special
from app.config import settings
from app.exceptions import DomainError
from app.utils.logger import get_logger

logger = get_logger("specialfn")

ArrayLike = Union[float, np.ndarray]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# Below this the closed form loses relative accuracy in the short tail
_SHORT_TAIL = 1e-8
_LOG_TINY = -745.0


def _scalar_or_array(value: np.ndarray, like) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(value)
    return value


def norm_pdf(x: ArrayLike) -> ArrayLike:
    """Standard normal density"""
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(np.exp(-0.5 * x * x - _LOG_SQRT_2PI), x)


def norm_logpdf(x: ArrayLike) -> ArrayLike:
    """Standard normal log-density"""
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(-0.5 * x * x - _LOG_SQRT_2PI, x)


def norm_cdf(x: ArrayLike) -> ArrayLike:
    """
    Standard normal distribution function

    Args:
        x: Real argument(s)

    Returns:
        Phi(x), saturating to 0/1 in the deep tails
    """
    x = np.asarray(x, dtype=float)
    return _scalar_or_array(special.ndtr(x), x)


def norm_quantile(p: ArrayLike) -> ArrayLike:
    """
    Standard normal quantile function

    Args:
        p: Probability (or array) strictly inside (0, 1)

    Returns:
        Phi^-1(p)

    Raises:
        DomainError: If any p is outside (0, 1)
    """
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0.0) | ~(p < 1.0)):
        raise DomainError(f"norm_quantile requires 0 < p < 1, got {p.tolist()}")
    return _scalar_or_array(special.ndtri(p), p)


def chi2_cdf(x: ArrayLike, d: int) -> ArrayLike:
    """
    Chi-squared distribution function, P(d/2, x/2)

    Args:
        x: Nonnegative argument(s)
        d: Degrees of freedom (>= 1)

    Returns:
        Regularized lower incomplete gamma at (d/2, x/2)
    """
    x = np.asarray(x, dtype=float)
    if int(d) != d or d < 1:
        raise DomainError(f"chi2_cdf requires a positive integer d, got {d}")
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError(f"chi2_cdf requires x >= 0, got {x.tolist()}")
    return _scalar_or_array(special.gammainc(0.5 * d, 0.5 * x), x)


def chi2_quantile(p: ArrayLike, d: int) -> ArrayLike:
    """Chi-squared quantile function"""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError(f"chi2_quantile requires 0 <= p <= 1, got {p.tolist()}")
    return _scalar_or_array(2.0 * special.gammaincinv(0.5 * d, p), p)


def regularized_lower_gamma(a: float, x: ArrayLike) -> ArrayLike:
    """Regularized lower incomplete gamma P(a, x)"""
    x = np.asarray(x, dtype=float)
    if a <= 0 or np.any(x < 0):
        raise DomainError(f"regularized_lower_gamma requires a > 0 and x >= 0, got a={a}")
    return _scalar_or_array(special.gammainc(a, x), x)


def owens_t(h: ArrayLike, a: ArrayLike) -> ArrayLike:
    """
    Owen's T function

    T(h, a) = (1/2pi) int_0^a exp(-h^2 (1 + x^2) / 2) / (1 + x^2) dx

    Args:
        h: Real argument(s)
        a: Real argument(s)

    Returns:
        T(h, a), in [-1/4, 1/4]
    """
    h = np.asarray(h, dtype=float)
    a = np.asarray(a, dtype=float)
    value = special.owens_t(h, a)
    return _scalar_or_array(value, h + a)


def _short_tail(z: float, alpha: float) -> float:
    """
    2 int_{-inf}^z phi(t) Phi(alpha t) dt for z < 0 < alpha

    The integrand is scaled by its value at z and the variable by its
    log-slope there, so the mass keeps full relative accuracy where
    Phi(z) - 2 T(z, alpha) cancels.
    """
    log_peak = float(norm_logpdf(z) + special.log_ndtr(alpha * z))
    if log_peak < _LOG_TINY:
        return 0.0
    rate = -z + alpha * math.exp(float(norm_logpdf(alpha * z)) - float(special.log_ndtr(alpha * z)))

    def scaled(r: float) -> float:
        t = z - r / rate
        return math.exp(float(norm_logpdf(t)) + float(special.log_ndtr(alpha * t)) - log_peak)

    mass, _ = integrate.quad(scaled, 0.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return 2.0 * math.exp(log_peak) * mass / rate


def _sn_lower(z: np.ndarray, alpha: float) -> np.ndarray:
    """Standardized skew-normal distribution function, accurate in the short tail"""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    value = np.array(special.ndtr(z) - 2.0 * special.owens_t(z, alpha), dtype=float)
    if alpha > 0:
        short = (z < 0.0) & (value < _SHORT_TAIL)
        for idx in np.flatnonzero(short):
            value.flat[idx] = _short_tail(float(z.flat[idx]), float(alpha))
    return np.clip(value, 0.0, 1.0)


def sn_cdf(x: ArrayLike, xi: float, omega2: float, alpha: float) -> ArrayLike:
    """
    Univariate skew-normal distribution function

    Computed as Phi(z) - 2 T(z, alpha) with z = (x - xi) / sqrt(omega2),
    except in the short lower tail (z < 0 < alpha) below 1e-8 where the
    difference cancels; there the tail mass is integrated directly.

    Args:
        x: Evaluation point(s)
        xi: Location
        omega2: Squared scale (> 0)
        alpha: Shape

    Returns:
        F(x), monotone nondecreasing in x
    """
    if not omega2 > 0:
        raise DomainError(f"sn_cdf requires omega2 > 0, got {omega2}")
    x = np.asarray(x, dtype=float)
    z = (x - xi) / math.sqrt(omega2)
    value = _sn_lower(z, float(alpha)).reshape(x.shape)
    return _scalar_or_array(value, x)


def sn_sf(x: ArrayLike, xi: float, omega2: float, alpha: float) -> ArrayLike:
    """
    Univariate skew-normal survival function

    Uses F(x; alpha) = 1 - F(-x; -alpha) so that neither tail is computed
    by subtraction from one.
    """
    if not omega2 > 0:
        raise DomainError(f"sn_sf requires omega2 > 0, got {omega2}")
    x = np.asarray(x, dtype=float)
    z = (x - xi) / math.sqrt(omega2)
    value = _sn_lower(-z, -float(alpha)).reshape(x.shape)
    return _scalar_or_array(value, x)


def sn_pdf(x: ArrayLike, xi: float, omega2: float, alpha: float) -> ArrayLike:
    """Univariate skew-normal density 2 phi(z) Phi(alpha z) / omega"""
    if not omega2 > 0:
        raise DomainError(f"sn_pdf requires omega2 > 0, got {omega2}")
    x = np.asarray(x, dtype=float)
    omega = math.sqrt(omega2)
    z = (x - xi) / omega
    value = 2.0 * np.exp(norm_logpdf(z) + special.log_ndtr(alpha * z)) / omega
    return _scalar_or_array(value, x)


def _mills_correction(x: np.ndarray) -> np.ndarray:
    """
    kappa + zeta_1(kappa) for kappa = -x, x >= 30, from the Mills-ratio series

    Phi(-x)/phi(x) ~ (1/x)(1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8)
    """
    u = 1.0 / (x * x)
    return (1.0 / x) * (1.0 - 2.0 * u + 10.0 * u * u - 74.0 * u ** 3)


def zeta(k: int, kappa: ArrayLike) -> ArrayLike:
    """
    k-th derivative of log Phi(kappa), k in {1, 2, 3}

    zeta_1 = phi/Phi, zeta_2 = -zeta_1 (kappa + zeta_1),
    zeta_3 = -zeta_2 (kappa + zeta_1) - zeta_1 (1 + zeta_2).
    Below the asymptotic cut-off the sum kappa + zeta_1 comes from the
    Mills-ratio series, avoiding 0/0 when Phi underflows.

    Args:
        k: Derivative order
        kappa: Real argument(s)

    Returns:
        zeta_k(kappa)
    """
    if k not in (1, 2, 3):
        raise DomainError(f"zeta is defined for k in {{1, 2, 3}}, got {k}")
    kappa_arr = np.asarray(kappa, dtype=float)
    if not np.all(np.isfinite(kappa_arr)):
        raise DomainError("zeta requires a finite argument")

    kap = np.atleast_1d(kappa_arr)
    cutoff = settings.ZETA_ASYMPTOTIC_CUTOFF
    deep = kap < cutoff

    z1 = np.empty_like(kap)
    s = np.empty_like(kap)
    regular = ~deep
    if np.any(regular):
        kr = kap[regular]
        z1[regular] = np.exp(norm_logpdf(kr) - special.log_ndtr(kr))
        s[regular] = kr + z1[regular]
    if np.any(deep):
        x = -kap[deep]
        s[deep] = _mills_correction(x)
        z1[deep] = x + s[deep]

    if k == 1:
        out = z1
    else:
        z2 = -z1 * s
        if k == 2:
            out = z2
        else:
            out = -z2 * s - z1 * (1.0 + z2)

    if kappa_arr.ndim == 0:
        return float(out[0])
    return out.reshape(kappa_arr.shape)
