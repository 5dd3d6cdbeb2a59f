import math
from typing import Any, Dict, Union
import numpy as np
from pydantic import Field, field_validator, model_validator
from app.models.base import ArrayModel, frozen_array


class SkewModalFit(ArrayModel):
    """Scalar skew-modal (SKS) approximation centered at the posterior mode"""
    center: float = Field(..., description="Posterior mode")
    omega_tilde: float = Field(..., gt=0.0, description="n / j at the mode")
    ell3: float = Field(..., description="Third derivative at the mode")
    n: int = Field(..., ge=1, description="Sample size")
    source: str = Field(default="posterior", description="posterior or likelihood derivatives")

    @property
    def skew_coefficient(self) -> float:
        """Coefficient c of the cubic skewing factor c·h^3"""
        return self.ell3 * math.sqrt(2.0 * math.pi) / (12.0 * self.n ** 1.5)

    def to_h(self, theta):
        """Map the parameter scale to the local scale h = sqrt(n)(theta - center)"""
        return math.sqrt(self.n) * (np.asarray(theta, dtype=float) - self.center)


class MarginalSksFit(ArrayModel):
    """Marginal skew-modal approximation for one coordinate of a vector parameter"""
    Omega: np.ndarray = Field(..., description="(j/n)^-1 at the mode")
    Omega11: float = Field(..., gt=0.0, description="Omega entry of the parameter of interest")
    v11: float = Field(..., description="Linear skewing coefficient")
    v3111: float = Field(..., description="Cubic skewing coefficient")
    n: int = Field(..., ge=1)
    psi_index: int = Field(..., ge=0)
    center: float = Field(..., description="Mode coordinate of the parameter of interest")
    variant: str = Field(default="conditional", description="conditional or printed coefficient formulas")

    @field_validator("Omega", mode="before")
    @classmethod
    def coerce_matrix(cls, v):
        return frozen_array(v, ndim=2)

    @model_validator(mode="after")
    def check_omega(self):
        if abs(self.Omega11 - self.Omega[self.psi_index, self.psi_index]) > 1e-12 * max(1.0, abs(self.Omega11)):
            raise ValueError("Omega11 must equal the Omega diagonal entry of psi")
        return self


class SnParams(ArrayModel):
    """
    d-dimensional skew-normal SN(xi, Omega, alpha).

    Density 2 phi_d(x - xi; Omega) Phi(alpha^T w^-1 (x - xi)) with
    w = sqrt(diag(Omega)); `alpha` is the shape on the standardized scale and
    `slant` = alpha / w acts on raw residuals.
    """
    xi: np.ndarray = Field(..., description="Location vector")
    omega: np.ndarray = Field(..., description="Scale matrix")
    alpha: np.ndarray = Field(..., description="Shape vector")

    @field_validator("xi", "alpha", mode="before")
    @classmethod
    def coerce_vector(cls, v):
        return frozen_array(np.atleast_1d(v), ndim=1)

    @field_validator("omega", mode="before")
    @classmethod
    def coerce_matrix(cls, v):
        arr = np.atleast_2d(np.asarray(v, dtype=float))
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"omega must be square, got shape {arr.shape}")
        if not np.allclose(arr, arr.T, rtol=1e-10, atol=1e-12):
            raise ValueError("omega must be symmetric")
        return frozen_array(0.5 * (arr + arr.T), ndim=2)

    @model_validator(mode="after")
    def check_parameters(self):
        d = self.xi.shape[0]
        if self.omega.shape != (d, d) or self.alpha.shape != (d,):
            raise ValueError("xi, omega and alpha dimensions differ")
        try:
            np.linalg.cholesky(self.omega)
        except np.linalg.LinAlgError:
            raise ValueError("omega must be positive definite")
        return self

    @property
    def d(self) -> int:
        return int(self.xi.shape[0])

    @property
    def scale(self) -> np.ndarray:
        """Per-coordinate scale w = sqrt(diag(Omega))"""
        return np.sqrt(np.diag(self.omega))

    @property
    def slant(self) -> np.ndarray:
        """Shape acting on raw residuals"""
        return self.alpha / self.scale

    @property
    def delta(self) -> np.ndarray:
        """Omega eta / sqrt(1 + eta^T Omega eta) on the raw scale"""
        eta = self.slant
        return self.omega @ eta / math.sqrt(1.0 + float(eta @ self.omega @ eta))

    @property
    def mean(self) -> np.ndarray:
        return self.xi + self.delta * math.sqrt(2.0 / math.pi)

    @property
    def covariance(self) -> np.ndarray:
        delta = self.delta
        return self.omega - (2.0 / math.pi) * np.outer(delta, delta)

    @classmethod
    def from_slant(cls, xi, omega, slant) -> "SnParams":
        """Build from a raw-scale slant vector"""
        omega = np.atleast_2d(np.asarray(omega, dtype=float))
        return cls(xi=xi, omega=omega, alpha=np.sqrt(np.diag(omega)) * np.atleast_1d(slant))

    def to_document(self) -> Dict[str, Any]:
        """JSON interchange document"""
        return {"xi": self.xi.tolist(), "omega": self.omega.tolist(), "alpha": self.alpha.tolist()}

    @classmethod
    def from_document(cls, document: Dict[str, Any]) -> "SnParams":
        return cls(xi=document["xi"], omega=document["omega"], alpha=document["alpha"])


class MatchInputs(ArrayModel):
    """Mode, negative Hessian and unmixed third derivatives to be matched"""
    m: np.ndarray = Field(..., description="Posterior mode")
    H: np.ndarray = Field(..., description="Negative Hessian at the mode")
    t: np.ndarray = Field(..., description="Unmixed third log-posterior derivatives at the mode")

    @field_validator("m", "t", mode="before")
    @classmethod
    def coerce_vector(cls, v):
        return frozen_array(np.atleast_1d(v), ndim=1)

    @field_validator("H", mode="before")
    @classmethod
    def coerce_matrix(cls, v):
        arr = np.atleast_2d(np.asarray(v, dtype=float))
        return frozen_array(0.5 * (arr + arr.T), ndim=2)

    @model_validator(mode="after")
    def check_inputs(self):
        d = self.m.shape[0]
        if self.H.shape != (d, d) or self.t.shape != (d,):
            raise ValueError("m, H and t dimensions differ")
        try:
            np.linalg.cholesky(self.H)
        except np.linalg.LinAlgError:
            raise ValueError("H must be positive definite")
        return self


class OtMap(ArrayModel):
    """Transport map: whitening and rotation, univariate Gaussianization of the first axis, standardization"""
    construction: str = Field(default="whitened", description="whitened or rotation")
    W: np.ndarray = Field(..., description="Whitening matrix Omega^-1/2, identity for the rotation construction")
    Q: np.ndarray = Field(..., description="Orthogonal rotation, first column along the (whitened) slant")
    omega1_sq: float = Field(..., gt=0.0, description="Scale^2 of the first rotated coordinate")
    shape1: float = Field(..., description="Shape of the first rotated coordinate")
    mu: np.ndarray = Field(..., description="Mean after Gaussianizing coordinate 1")
    V: np.ndarray = Field(..., description="Covariance after Gaussianizing coordinate 1")
    V_inv_sqrt: np.ndarray = Field(..., description="Symmetric inverse square root of V")

    @field_validator("mu", mode="before")
    @classmethod
    def coerce_vector(cls, v):
        return frozen_array(np.atleast_1d(v), ndim=1)

    @field_validator("W", "Q", "V", "V_inv_sqrt", mode="before")
    @classmethod
    def coerce_matrix(cls, v):
        return frozen_array(np.atleast_2d(v), ndim=2)

    @model_validator(mode="after")
    def check_rotation(self):
        d = self.Q.shape[0]
        if not np.allclose(self.Q.T @ self.Q, np.eye(d), atol=1e-12):
            raise ValueError("Q must be orthogonal")
        if self.W.shape != (d, d):
            raise ValueError(f"W must be {d}x{d}, got {self.W.shape}")
        return self

    @property
    def d(self) -> int:
        return int(self.Q.shape[0])

    def to_dict(self) -> Dict[str, Union[float, str, list]]:
        return {
            "construction": self.construction,
            "W": self.W.tolist(),
            "Q": self.Q.tolist(),
            "omega1_sq": self.omega1_sq,
            "shape1": self.shape1,
            "mu": self.mu.tolist(),
            "V": self.V.tolist(),
            "V_inv_sqrt": self.V_inv_sqrt.tolist(),
        }
