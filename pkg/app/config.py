from pathlib import Path
from typing import Optional, Tuple
from pydantic_settings import BaseSettings, SettingsConfigDict


PROJECT_ROOT = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    # Logging
    LOG_LEVEL: str = "WARNING"
    LOG_FILE: Optional[str] = None
    LOG_ROTATION: str = "100 MB"
    LOG_RETENTION: str = "10 days"
    LOG_COMPRESSION: str = "zip"

    # Optimizer
    OPT_TOL: float = 1e-9
    OPT_MAX_ITER: int = 200
    OPT_MAX_HALVINGS: int = 60
    MIN_INFO_EIGENVALUE: float = 1e-8

    # Quadrature
    QUAD_TOL: float = 1e-10
    QUAD_LIMIT: int = 200
    GH_NODES: int = 64
    GH_MAX_DIM: int = 3
    MARGINAL_QUAD_ERROR_LIMIT: float = 5e-3

    # Higher-order asymptotics
    RSTAR_GUARD: float = 1e-4
    RSTAR_BRIDGE_LEVELS: Tuple[float, float] = (1e-2, 2e-2)
    HO_GUARD_CONVENTION: str = "zero"  # "zero" prints 0.00 inside the guard band, "bridge" reports the bridged value
    BRACKET_MAX_EXPANSIONS: int = 50

    # Skew-modal approximation
    SKS_DERIVATIVE_SOURCE: str = "posterior"
    MARGINAL_SKS_VARIANT: str = "conditional"

    # Skew-normal matching and transport
    ZETA_ASYMPTOTIC_CUTOFF: float = -30.0
    KAPPA_BRACKET_MAX: float = 50.0
    KAPPA_SCAN_STEP: float = 0.01
    SN_MATCH_TOLERANCE: float = 1e-8
    MC_DRAWS: int = 200_000
    QUANTILE_SATURATION: float = 37.5
    OT_CONSTRUCTION: str = "whitened"  # "rotation" standardizes the raw rotated coordinates by moments

    # Runs
    DEFAULT_SEED: int = 20240611
    PRIOR_SD: float = 5.0
    CUSHINGS_CSV_PATH: str = str(PROJECT_ROOT / "data" / "cushings_binary.csv")
    TABLE_WORKERS: int = 1

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    def ensure_directories(self):
        """Create the log directory if file logging is configured"""
        if self.LOG_FILE:
            Path(self.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)


# Global settings instance
settings = Settings()
