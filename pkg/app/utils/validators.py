from typing import List, Optional
import numpy as np
from app.exceptions import ConfigError
from app.utils.logger import get_logger

logger = get_logger("validators")


def parse_vector(text: str, name: str = "theta0") -> List[float]:
    """
    Parse a comma-separated list of reals

    Args:
        text: Text such as "0.9" or "0,0"
        name: Flag name used in error messages

    Returns:
        List[float]: Parsed values

    Raises:
        ConfigError: If any entry is empty, non-numeric or non-finite
    """
    if text is None or not str(text).strip():
        raise ConfigError(f"{name} cannot be empty")
    values = []
    for part in str(text).split(","):
        part = part.strip()
        try:
            value = float(part)
        except ValueError:
            raise ConfigError(f"{name}: '{part}' is not a number")
        if not np.isfinite(value):
            raise ConfigError(f"{name}: '{part}' is not finite")
        values.append(value)
    return values


def parse_grid(text: str) -> tuple[float, float, int]:
    """
    Parse a grid specification lo:hi:steps

    Args:
        text: Grid text, e.g. "0.3:3.0:300"

    Returns:
        tuple: (lo, hi, steps)
    """
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like lo:hi:steps, got '{text}'")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid entries must be numeric, got '{text}'")
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ConfigError(f"grid requires lo < hi, got {lo}:{hi}")
    if steps < 2:
        raise ConfigError(f"grid requires at least 2 steps, got {steps}")
    return lo, hi, steps


def validate_index(index: Optional[int], dim: int, name: str = "psi-index") -> Optional[int]:
    """Check that an optional coordinate index lies in [0, dim)"""
    if index is None:
        return None
    if not 0 <= index < dim:
        raise ConfigError(f"{name} {index} out of range for d = {dim}")
    return index
