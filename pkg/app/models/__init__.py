from app.models.base import ArrayModel, frozen_array
from app.models.dataset import Dataset, ModelSpec
from app.models.geometry import DiffReport, PosteriorGeometry
from app.models.results import (
    BdmResult,
    RootStatistic,
    PushforwardReport,
    CheckOutcome,
    equi_tailed_delta
)
from app.models.skew import (
    SkewModalFit,
    MarginalSksFit,
    SnParams,
    MatchInputs,
    OtMap
)
from app.models.schemas import RunConfig, GridSpec

__all__ = [
    # Base
    "ArrayModel",
    "frozen_array",

    # Models and data
    "Dataset",
    "ModelSpec",
    "DiffReport",
    "PosteriorGeometry",

    # Results
    "BdmResult",
    "RootStatistic",
    "PushforwardReport",
    "CheckOutcome",
    "equi_tailed_delta",

    # Skew approximations
    "SkewModalFit",
    "MarginalSksFit",
    "SnParams",
    "MatchInputs",
    "OtMap",

    # Run configuration
    "RunConfig",
    "GridSpec",
]
