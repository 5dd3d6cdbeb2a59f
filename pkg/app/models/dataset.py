from typing import Callable, Dict, List, Optional, Tuple
import numpy as np
from pydantic import Field, field_validator, model_validator
from app.models.base import ArrayModel, frozen_array


class Dataset(ArrayModel):
    """Observations for a statistical model"""
    observations: np.ndarray = Field(..., description="n x p matrix of covariates or observations")
    response: Optional[np.ndarray] = Field(None, description="Binary response vector for regression models")
    columns: List[str] = Field(default_factory=list, description="Column names in file order")
    sufficient: Dict[str, float] = Field(default_factory=dict, description="Sufficient statistics carried by synthetic datasets")

    @field_validator("observations", mode="before")
    @classmethod
    def coerce_observations(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        return frozen_array(arr, ndim=2)

    @field_validator("response", mode="before")
    @classmethod
    def coerce_response(cls, v):
        if v is None:
            return None
        return frozen_array(v, ndim=1)

    @model_validator(mode="after")
    def check_shapes(self):
        if self.observations.shape[0] < 1:
            raise ValueError("dataset must contain at least one row")
        if self.response is not None and self.response.shape[0] != self.observations.shape[0]:
            raise ValueError("response length does not match the number of rows")
        return self

    @property
    def n(self) -> int:
        """Sample size"""
        return int(self.observations.shape[0])

    @property
    def p(self) -> int:
        """Number of observation columns"""
        return int(self.observations.shape[1])


class ModelSpec(ArrayModel):
    """
    Log-likelihood, log-prior and optional analytic derivatives.

    Likelihood callables take (theta, data); prior callables take theta.
    Batch callables take an (m, d) array of parameter points and return m values.
    Callables return -inf outside the parameter domain instead of raising.
    """
    name: str = Field(..., description="Model identifier")
    dim: int = Field(..., ge=1, description="Parameter dimension d")
    param_names: List[str] = Field(default_factory=list, description="Parameter labels")
    loglik: Callable = Field(..., description="l(theta; data)")
    logprior: Callable = Field(..., description="log pi(theta)")
    loglik_grad: Optional[Callable] = None
    loglik_hess: Optional[Callable] = None
    loglik_third: Optional[Callable] = None
    logprior_grad: Optional[Callable] = None
    logprior_hess: Optional[Callable] = None
    logprior_third: Optional[Callable] = None
    expected_info: Optional[Callable] = Field(None, description="i(theta; data), used by the Jeffreys-type r*")
    loglik_batch: Optional[Callable] = None
    logprior_batch: Optional[Callable] = None
    initial: Optional[Callable] = Field(None, description="Starting point for optimization, given data")
    bounds: List[Tuple[float, float]] = Field(default_factory=list, description="Open parameter domain per coordinate")

    @model_validator(mode="after")
    def check_dimensions(self):
        if self.param_names and len(self.param_names) != self.dim:
            raise ValueError("param_names length must equal dim")
        if self.bounds and len(self.bounds) != self.dim:
            raise ValueError("bounds length must equal dim")
        return self

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.loglik_grad is not None and self.loglik_hess is not None

    def coordinate_bounds(self, index: int) -> Tuple[float, float]:
        """Open domain of one coordinate"""
        if not self.bounds:
            return (-np.inf, np.inf)
        return self.bounds[index]

    def label(self, index: int) -> str:
        """Name of one coordinate"""
        if self.param_names:
            return self.param_names[index]
        return f"theta{index}"
