import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import numpy as np
from app.exceptions import BdmError, ConfigError, DimensionError, NumericError
from app.models.dataset import Dataset, ModelSpec
from app.models.geometry import PosteriorGeometry
from app.models.results import BdmResult
from app.models.schemas import RunConfig
from app.models.skew import SnParams
from app.services import otmap, sks, snmatch, statmodels, univariate
from app.utils.formatters import format_float, write_csv
from app.utils.logger import get_logger

logger = get_logger("bdm_service")


class FittedProblem:
    """Model, data and posterior geometry of one run, with lazily built approximations"""

    def __init__(self, model: ModelSpec, data: Dataset, geom: PosteriorGeometry, exponential: Optional[Tuple[int, float]] = None):
        self.model = model
        self.data = data
        self.geom = geom
        self.exponential = exponential
        self._sn: Optional[SnParams] = None

    @property
    def sn(self) -> SnParams:
        if self._sn is None:
            self._sn = snmatch.sn_fit(snmatch.match_inputs_from_geometry(self.geom))
        return self._sn

    def joint_indices(self, theta0: List[float]) -> Optional[List[int]]:
        """Coordinates fixed by a joint hypothesis: all of them, or all but the intercept"""
        d = self.geom.dim
        if len(theta0) == d:
            return None
        if self.model.name == "logistic" and len(theta0) == d - 1:
            return list(range(1, d))
        raise DimensionError(f"theta0 has {len(theta0)} entries; expected {d} or {d - 1}")


class BdmService:
    """Service computing discrepancy measures for a validated run configuration"""

    def __init__(self):
        self._problems: Dict[Tuple, FittedProblem] = {}

    def load_problem(self, config: RunConfig) -> FittedProblem:
        """
        Build the model, load data and fit the posterior geometry

        Args:
            config: Run configuration

        Returns:
            FittedProblem (cached per model/data combination)
        """
        key = (config.model, config.n, config.mle, config.data_path, config.prior_sd)
        if key in self._problems:
            return self._problems[key]

        try:
            if config.model == "exponential":
                if config.data_path:
                    dataset = statmodels.load_csv(config.data_path)
                    values = dataset.response if dataset.response is not None else dataset.observations[:, 0]
                    model, data = statmodels.exponential_model_from_data(values)
                else:
                    model, data = statmodels.exponential_model(config.n, config.mle)
                exponential = (data.n, data.sufficient["t_n"] / data.n)
            else:
                data = statmodels.load_csv(config.data_path)
                model = statmodels.logistic_model(data, prior_sd=config.prior_sd)
                exponential = None
            geom = statmodels.fit_geometry(model, data)
        except BdmError:
            raise
        except Exception as e:
            logger.error(f"Failed to prepare {config.model} problem: {e}")
            raise NumericError(f"Failed to prepare {config.model} problem: {e}") from e

        problem = FittedProblem(model, data, geom, exponential)
        self._problems[key] = problem
        return problem

    def compute(self, config: RunConfig) -> BdmResult:
        """
        Compute the discrepancy measure requested by a run configuration

        Args:
            config: Run configuration with theta0

        Returns:
            BdmResult
        """
        if not config.theta0:
            raise ConfigError("--theta0 is required")
        problem = self.load_problem(config)
        if problem.geom.dim == 1:
            result = self._scalar(problem, config)
        elif config.psi_index is not None:
            result = self._marginal(problem, config)
        else:
            result = self._joint(problem, config)
        logger.info(f"{config.method} measure at {config.theta0}: {result.delta:.6f}")
        return result

    def _scalar(self, problem: FittedProblem, config: RunConfig) -> BdmResult:
        theta0 = config.theta0[0]
        geom, method = problem.geom, config.method
        if method == "io":
            return univariate.bdm_io(geom, theta0)
        if method == "ho":
            return univariate.bdm_ho(problem.model, problem.data, geom, theta0, config.prior_mode)
        if method == "sks":
            return sks.bdm_sks(sks.sks_fit(geom), theta0)
        if method == "sks-num":
            return sks.bdm_sks_numeric(sks.sks_fit(geom), theta0)
        if method == "sn":
            return snmatch.bdm_sn_univariate(problem.sn, theta0)
        if method == "wald":
            return univariate.bdm_wald_multi(geom, [theta0], config.loglik_ratio, problem.model, problem.data)
        if problem.exponential is None:
            raise ConfigError("exact method needs a closed-form posterior")
        n, mle = problem.exponential
        return statmodels.exact_bdm_exponential(n, mle, theta0)

    def _marginal(self, problem: FittedProblem, config: RunConfig) -> BdmResult:
        psi, psi0 = config.psi_index, config.theta0[0]
        model, data, geom, method = problem.model, problem.data, problem.geom, config.method
        if psi >= geom.dim:
            raise ConfigError(f"psi-index {psi} out of range for d = {geom.dim}")
        if method == "io":
            return univariate.bdm_io_profile(model, data, geom, psi, psi0)
        if method == "ho":
            return univariate.bdm_ho_profile(model, data, geom, psi, psi0)
        if method == "sks":
            return sks.bdm_marginal_sks(sks.marginal_sks_fit(geom, psi), None, psi0)
        if method == "sn":
            return snmatch.bdm_sn_univariate(snmatch.sn_marginal(problem.sn, [psi]), psi0)
        if method == "wald":
            return univariate.bdm_wald_multi(geom, [psi0], config.loglik_ratio, model, data, indices=[psi])
        if method == "exact":
            return statmodels.exact_marginal_bdm_quadrature(model, data, psi, psi0, geom=geom)
        raise ConfigError(f"method {method} has no marginal form")

    def _joint(self, problem: FittedProblem, config: RunConfig) -> BdmResult:
        indices = problem.joint_indices(config.theta0)
        if config.method == "wald":
            return univariate.bdm_wald_multi(
                problem.geom, config.theta0, config.loglik_ratio, problem.model, problem.data, indices=indices
            )
        if config.method == "sn":
            params = problem.sn if indices is None else snmatch.sn_marginal(problem.sn, indices)
            return otmap.bdm_sn_multi(params, config.theta0)
        raise ConfigError(f"method {config.method} has no joint form")

    def export_sn(self, config: RunConfig, path: str) -> None:
        """Write the fitted SN parameters and transport map as JSON"""
        problem = self.load_problem(config)
        params = problem.sn
        document = {"sn": params.to_document(), "ot": otmap.build_ot(params).to_dict(), "params": problem.model.param_names}
        Path(path).write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        logger.info(f"Wrote SN document to {path}")

    def export_draws(self, config: RunConfig, path: str) -> None:
        """Write seeded draws from the fitted SN as CSV"""
        problem = self.load_problem(config)
        draws = snmatch.sn_sample(problem.sn, config.draws, config.seed)
        rows = ([format_float(v) for v in row] for row in np.atleast_2d(draws))
        Path(path).write_text(write_csv(problem.model.param_names, rows), encoding="utf-8")
        logger.info(f"Wrote {config.draws} SN draws to {path}")


# Global BDM service instance
bdm_service = BdmService()


def get_bdm_service() -> BdmService:
    """Get BDM service instance"""
    return bdm_service
