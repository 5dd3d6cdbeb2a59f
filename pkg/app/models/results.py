from typing import Any, Dict, List, Optional
from pydantic import BaseModel, Field, field_validator, model_validator


def equi_tailed_delta(tail_low: float) -> float:
    """Discrepancy measure 1 - 2 min(F, 1 - F) for a lower tail F"""
    return 1.0 - 2.0 * min(tail_low, 1.0 - tail_low)


class BdmResult(BaseModel):
    """Discrepancy measure for a precise hypothesis under one approximation"""
    method: str = Field(..., description="Approximation method identifier")
    theta0: List[float] = Field(..., description="Hypothesized value")
    delta: float = Field(..., ge=0.0, le=1.0, description="Discrepancy measure in [0, 1]")
    tail_low: Optional[float] = Field(None, ge=0.0, le=1.0, description="P(theta <= theta0 | y) under the method")
    clamped: bool = Field(default=False, description="Raw value fell outside [0, 1] and was clamped")
    raw_delta: Optional[float] = Field(None, description="Unclamped value when the method can leave [0, 1]")
    diagnostics: Dict[str, Any] = Field(default_factory=dict, description="Method-specific diagnostics")

    model_config = {"frozen": True}

    @field_validator("theta0", mode="before")
    @classmethod
    def ensure_list(cls, v):
        if isinstance(v, (int, float)):
            return [float(v)]
        return [float(x) for x in v]

    @model_validator(mode="after")
    def check_equi_tailed(self):
        if self.tail_low is not None and abs(self.delta - equi_tailed_delta(self.tail_low)) > 1e-12:
            raise ValueError("delta is inconsistent with tail_low")
        return self

    @classmethod
    def from_tail(cls, method: str, theta0, tail_low: float, diagnostics: Optional[Dict[str, Any]] = None) -> "BdmResult":
        """Build a result from the lower tail probability"""
        tail_low = min(max(float(tail_low), 0.0), 1.0)
        return cls(
            method=method,
            theta0=theta0,
            delta=equi_tailed_delta(tail_low),
            tail_low=tail_low,
            diagnostics=diagnostics or {},
        )

    @classmethod
    def from_raw(cls, method: str, theta0, raw_delta: float, diagnostics: Optional[Dict[str, Any]] = None) -> "BdmResult":
        """Build a result from a raw value, clamping into [0, 1]"""
        delta = min(max(float(raw_delta), 0.0), 1.0)
        return cls(
            method=method,
            theta0=theta0,
            delta=delta,
            clamped=delta != raw_delta,
            raw_delta=float(raw_delta),
            diagnostics=diagnostics or {},
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the frozen output document"""
        return {
            "method": self.method,
            "theta0": self.theta0,
            "delta": self.delta,
            "tail_low": self.tail_low,
            "diagnostics": self.diagnostics,
            "clamped": self.clamped,
        }


class RootStatistic(BaseModel):
    """Modified signed likelihood root and its ingredients"""
    value: float = Field(..., description="r* (or r*_B)")
    r: float = Field(..., description="Signed likelihood root")
    q: float = Field(..., description="Correction statistic")
    bridged: bool = Field(default=False, description="Value obtained by the cubic bridge across the removable singularity")
    expected_info_fallback: bool = Field(default=False, description="Observed information replaced the expected information")

    model_config = {"frozen": True}

    def to_dict(self) -> Dict[str, Any]:
        return {"rstar": self.value, "r": self.r, "q": self.q, "bridged": self.bridged}


class PushforwardReport(BaseModel):
    """Monte Carlo check that the transport map pushes the fitted law to N(0, I)"""
    n_draws: int
    seed: int
    max_abs_mean: float
    cov_error: float = Field(..., description="max |cov - I| entry")
    max_abs_skewness: float
    qq_correlation: float = Field(..., description="Correlation of sorted squared norms with chi-squared quantiles")
    saturated: int = Field(default=0, description="Draws whose Gaussianized coordinate hit the saturation bound")
    stable: Optional[bool] = Field(None, description="Doubling the draws kept every threshold decision")

    model_config = {"frozen": True}

    def passes(self, mean_tol: float = 0.01, cov_tol: float = 0.02, skew_tol: float = 0.03, qq_min: float = 0.999) -> bool:
        """Check the report against acceptance thresholds"""
        return (
            self.max_abs_mean <= mean_tol
            and self.cov_error <= cov_tol
            and self.max_abs_skewness <= skew_tol
            and self.qq_correlation >= qq_min
        )


class CheckOutcome(BaseModel):
    """Result of one acceptance check"""
    name: str
    passed: bool
    hard: bool = Field(default=True, description="Soft checks are reported but never fail the run")
    detail: str = ""
