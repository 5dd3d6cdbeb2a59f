from typing import Optional
import numpy as np
from pydantic import Field, field_validator, model_validator
from app.models.base import ArrayModel, frozen_array


class DiffReport(ArrayModel):
    """Finite-difference derivatives of a real function at a point"""
    gradient: np.ndarray = Field(..., description="Gradient vector")
    hessian: np.ndarray = Field(..., description="Symmetric Hessian matrix")
    third_unmixed: np.ndarray = Field(..., description="Unmixed third derivatives d^3f/dx_i^3")
    third_full: Optional[np.ndarray] = Field(None, description="Full symmetric third-derivative tensor")
    step: float = Field(..., description="Base step size")

    @field_validator("gradient", "third_unmixed", mode="before")
    @classmethod
    def coerce_vector(cls, v):
        return frozen_array(v, ndim=1)

    @field_validator("hessian", mode="before")
    @classmethod
    def coerce_matrix(cls, v):
        return frozen_array(v, ndim=2)

    @field_validator("third_full", mode="before")
    @classmethod
    def coerce_tensor(cls, v):
        if v is None:
            return None
        return frozen_array(v, ndim=3)


class PosteriorGeometry(ArrayModel):
    """
    Local posterior information every approximation consumes.

    obs_info_* are negative log-likelihood Hessians; post_info_map is the
    negative log-posterior Hessian at the MAP. Third-derivative tensors at the
    MAP are stored for both the log-posterior and the log-likelihood.
    """
    family: str = Field(..., description="Model the geometry was fitted for")
    map_point: np.ndarray = Field(..., description="Posterior mode")
    mle: np.ndarray = Field(..., description="Maximum likelihood estimate")
    obs_info_mle: np.ndarray = Field(..., description="j at the MLE")
    obs_info_map: np.ndarray = Field(..., description="j at the MAP")
    post_info_map: np.ndarray = Field(..., description="Negative log-posterior Hessian at the MAP")
    third_at_map: np.ndarray = Field(..., description="Log-posterior third-derivative tensor at the MAP")
    third_lik_at_map: np.ndarray = Field(..., description="Log-likelihood third-derivative tensor at the MAP")
    loglik_at_mle: float = Field(..., description="l at the MLE")
    third_complete: bool = Field(default=True, description="Mixed third derivatives are available")
    n: int = Field(..., ge=1, description="Sample size")

    @field_validator("map_point", "mle", mode="before")
    @classmethod
    def coerce_vector(cls, v):
        return frozen_array(np.atleast_1d(v), ndim=1)

    @field_validator("obs_info_mle", "obs_info_map", "post_info_map", mode="before")
    @classmethod
    def coerce_matrix(cls, v):
        return frozen_array(np.atleast_2d(v), ndim=2)

    @field_validator("third_at_map", "third_lik_at_map", mode="before")
    @classmethod
    def coerce_tensor(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1, 1)
        return frozen_array(arr, ndim=3)

    @model_validator(mode="after")
    def check_shapes(self):
        d = self.map_point.shape[0]
        if self.mle.shape != (d,):
            raise ValueError("mle and map_point dimensions differ")
        for name in ("obs_info_mle", "obs_info_map", "post_info_map"):
            if getattr(self, name).shape != (d, d):
                raise ValueError(f"{name} must be {d}x{d}")
        for name in ("third_at_map", "third_lik_at_map"):
            if getattr(self, name).shape != (d, d, d):
                raise ValueError(f"{name} must be {d}x{d}x{d}")
        return self

    @property
    def dim(self) -> int:
        return int(self.map_point.shape[0])

    def info_at_map(self, source: str = "posterior") -> np.ndarray:
        """Negative Hessian at the MAP from the log-posterior or the log-likelihood"""
        return self.post_info_map if source == "posterior" else self.obs_info_map

    def third_at(self, source: str = "posterior") -> np.ndarray:
        """Third-derivative tensor at the MAP from the log-posterior or the log-likelihood"""
        return self.third_at_map if source == "posterior" else self.third_lik_at_map

    def to_dict(self):
        """Convert to a JSON-ready dictionary"""
        return {
            "model": self.family,
            "n": self.n,
            "map_point": self.map_point.tolist(),
            "mle": self.mle.tolist(),
            "obs_info_mle": self.obs_info_mle.tolist(),
            "obs_info_map": self.obs_info_map.tolist(),
            "post_info_map": self.post_info_map.tolist(),
        }
