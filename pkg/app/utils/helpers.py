import math
from typing import Callable, Optional, Tuple
import numpy as np
from scipy.optimize import brentq
from app.config import settings
from app.exceptions import BracketingError, DomainError, SingularInformationError
from app.utils.logger import get_logger

logger = get_logger("helpers")


def sign0(x: float) -> float:
    """
    Sign with the convention sign(0) = 0

    Args:
        x: Real number

    Returns:
        float: -1.0, 0.0 or 1.0
    """
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def as_vector(x, name: str = "x") -> np.ndarray:
    """
    Coerce a scalar or sequence into a 1-D float array

    Args:
        x: Scalar or sequence of reals
        name: Argument name used in error messages

    Returns:
        np.ndarray: 1-D float array
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DomainError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {arr.tolist()}")
    return arr


def cholesky_or_raise(matrix: np.ndarray, what: str = "matrix") -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive-definite matrix

    Args:
        matrix: Symmetric matrix
        what: Description used in error messages

    Returns:
        np.ndarray: Lower-triangular factor

    Raises:
        SingularInformationError: If the matrix is not positive definite
    """
    sym = 0.5 * (matrix + matrix.T)
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as e:
        raise SingularInformationError(f"{what} is not positive definite", {"eigenvalues": np.linalg.eigvalsh(sym).tolist()}) from e


def is_positive_definite(matrix: np.ndarray) -> bool:
    """Check positive definiteness via Cholesky"""
    try:
        np.linalg.cholesky(0.5 * (matrix + matrix.T))
        return True
    except np.linalg.LinAlgError:
        return False


def inv_sqrt_symmetric(matrix: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of a positive-definite matrix"""
    values, vectors = np.linalg.eigh(0.5 * (matrix + matrix.T))
    if np.any(values <= 0):
        raise SingularInformationError("matrix is not positive definite", {"eigenvalues": values.tolist()})
    return (vectors / np.sqrt(values)) @ vectors.T


def bracket_root(
    fn: Callable[[float], float],
    center: float,
    step: float,
    bounds: Tuple[float, float] = (-math.inf, math.inf),
    max_expansions: Optional[int] = None,
    xtol: float = 1e-12,
) -> float:
    """
    Find a root of a monotone-ish function by geometric bracket expansion and Brent's method

    The bracket [center - step·2^k, center + step·2^k] is widened until the
    function changes sign, clipped to the open interval `bounds`.

    Args:
        fn: Scalar function
        center: Expansion center
        step: Initial half-width
        bounds: Open domain of fn
        max_expansions: Number of doublings before giving up
        xtol: Absolute tolerance passed to brentq

    Returns:
        float: Root of fn

    Raises:
        BracketingError: If no sign change is found
    """
    if max_expansions is None:
        max_expansions = settings.BRACKET_MAX_EXPANSIONS
    lower_bound, upper_bound = bounds
    lo_margin = 1e-12 * max(1.0, abs(lower_bound)) if math.isfinite(lower_bound) else 0.0
    hi_margin = 1e-12 * max(1.0, abs(upper_bound)) if math.isfinite(upper_bound) else 0.0

    f_center = fn(center)
    if f_center == 0.0:
        return center

    half = step
    for k in range(max_expansions):
        lo = max(center - half, lower_bound + lo_margin) if math.isfinite(lower_bound) else center - half
        hi = min(center + half, upper_bound - hi_margin) if math.isfinite(upper_bound) else center + half
        f_lo, f_hi = fn(lo), fn(hi)
        if np.isfinite(f_lo) and f_lo * f_center < 0:
            return brentq(fn, lo, center, xtol=xtol)
        if np.isfinite(f_hi) and f_hi * f_center < 0:
            return brentq(fn, center, hi, xtol=xtol)
        logger.debug(f"Bracket expansion {k}: [{lo:.6g}, {hi:.6g}] without sign change")
        half *= 2.0

    raise BracketingError(
        f"No sign change in {max_expansions} expansions around {center}",
        {"center": center, "step": step},
    )
