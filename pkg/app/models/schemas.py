from typing import List, Literal, Optional
import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from app.config import settings

MethodName = Literal["io", "ho", "sks", "sks-num", "sn", "wald", "exact"]
ModelName = Literal["exponential", "logistic"]

SCALAR_ONLY_METHODS = ("sks-num",)
JOINT_METHODS = ("wald", "sn")


class RunConfig(BaseModel):
    """Validated configuration of one CLI run"""
    model: ModelName = Field(..., description="Built-in model")
    n: Optional[int] = Field(None, ge=1, description="Sample size (exponential summary input)")
    mle: Optional[float] = Field(None, gt=0.0, description="MLE (exponential summary input)")
    data: Optional[str] = Field(None, description="CSV data path")
    prior_sd: Optional[float] = Field(None, gt=0.0, description="Prior sd of the logistic coefficients")
    method: MethodName = Field("ho", description="Approximation method")
    theta0: List[float] = Field(default_factory=list, description="Hypothesized value(s)")
    psi_index: Optional[int] = Field(None, ge=0, description="Coordinate of interest")
    output: Literal["json", "csv"] = Field("json", description="Output format")
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, description="Random seed")
    prior_mode: Literal["general", "jeffreys"] = Field("jeffreys", description="Prior handling of the scalar r*")
    loglik_ratio: bool = Field(False, description="Use the likelihood-ratio joint statistic")
    export_sn: Optional[str] = Field(None, description="Path of the SN/OT JSON document")
    export_draws: Optional[str] = Field(None, description="Path of the SN draws CSV")
    draws: int = Field(10_000, ge=1, description="Number of exported draws")
    out: Optional[str] = Field(None, description="Output path (stdout when absent)")

    @field_validator("theta0")
    @classmethod
    def finite_theta0(cls, v):
        if not all(np.isfinite(x) for x in v):
            raise ValueError("theta0 must be finite")
        return v

    @model_validator(mode="after")
    def check_compatibility(self):
        if self.model == "exponential":
            if self.data is None and (self.n is None or self.mle is None):
                raise ValueError("exponential model needs --n and --mle, or --data")
            if self.psi_index not in (None, 0):
                raise ValueError("exponential model has a single parameter (psi-index 0)")
            if len(self.theta0) > 1:
                raise ValueError("exponential model takes a scalar theta0")
        else:
            if self.method in SCALAR_ONLY_METHODS:
                raise ValueError(f"method {self.method} is defined for scalar models only")
            if self.psi_index is None and self.theta0 and self.method not in JOINT_METHODS:
                raise ValueError(f"method {self.method} on the logistic model needs --psi-index")
            if self.psi_index is not None and len(self.theta0) > 1:
                raise ValueError("--psi-index takes a scalar theta0")
        return self

    @property
    def data_path(self) -> Optional[str]:
        if self.model == "logistic":
            return self.data or settings.CUSHINGS_CSV_PATH
        return self.data


class GridSpec(BaseModel):
    """Evaluation grid lo:hi:steps"""
    lo: float
    hi: float
    steps: int = Field(..., ge=2)

    @model_validator(mode="after")
    def check_order(self):
        if not self.lo < self.hi:
            raise ValueError("grid requires lo < hi")
        return self

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)
