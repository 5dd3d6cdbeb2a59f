from typing import Any
import numpy as np
from pydantic import BaseModel, ConfigDict


def frozen_array(value: Any, ndim: int = None) -> np.ndarray:
    """
    Coerce a value to a read-only float array

    Args:
        value: Array-like value
        ndim: Required number of dimensions, if any

    Returns:
        np.ndarray: Read-only copy
    """
    arr = np.array(value, dtype=float, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class ArrayModel(BaseModel):
    """Immutable model that may hold numpy arrays"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
