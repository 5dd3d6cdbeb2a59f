import math
from typing import Dict, List
import numpy as np
from app.exceptions import BdmError, ConfigError, NumericError
from app.models.schemas import GridSpec, RunConfig
from app.services import sks, snmatch, statmodels, univariate
from app.services.bdm_service import FittedProblem, get_bdm_service
from app.services.specialfn import norm_pdf
from app.utils.formatters import format_float, write_csv
from app.utils.helpers import bracket_root
from app.utils.logger import get_logger

logger = get_logger("curve_service")

CURVE_HEADER = ["kind", "theta", "exact", "normal", "sks", "sn", "ho"]


class CurveService:
    """Service emitting posterior density curves and median markers for plotting"""

    def __init__(self):
        self.bdm_service = get_bdm_service()

    def curves(self, config: RunConfig, grid: GridSpec) -> Dict[str, object]:
        """
        Evaluate every available density on a grid

        Args:
            config: Run configuration (theta0 unused)
            grid: Evaluation grid

        Returns:
            Dict with "theta", one density array per method and a "median" dict
        """
        problem = self.bdm_service.load_problem(config)
        points = grid.points()
        try:
            if problem.geom.dim == 1:
                return self._scalar(problem, points, config.prior_mode)
            if config.psi_index is None:
                raise ConfigError("curves on a vector parameter need --psi-index")
            return self._marginal(problem, points, config.psi_index)
        except BdmError:
            raise
        except Exception as e:
            logger.error(f"Failed to evaluate curves: {e}")
            raise NumericError(f"Failed to evaluate curves: {e}") from e

    def _scalar(self, problem: FittedProblem, points: np.ndarray, prior_mode: str) -> Dict[str, object]:
        model, data, geom = problem.model, problem.data, problem.geom
        fit = sks.sks_fit(geom)
        params = problem.sn
        theta_hat = float(geom.mle[0])
        sd = 1.0 / math.sqrt(float(geom.obs_info_mle[0, 0]))

        curves = {
            "theta": points,
            "exact": np.full(points.size, np.nan),
            "normal": np.asarray(norm_pdf((points - theta_hat) / sd)) / sd,
            "sks": np.asarray(sks.sks_density_theta(fit, points)),
            "sn": np.asarray(snmatch.sn_pdf(params, points.reshape(-1, 1))),
            "ho": univariate.ho_density(model, data, geom, points, prior_mode=prior_mode),
        }
        median = {
            "exact": math.nan,
            "normal": theta_hat,
            "sks": sks.sks_median(fit),
            "sn": snmatch.sn_quantile(params, 0.5),
            "ho": univariate.posterior_median_rstar(model, data, geom, prior_mode=prior_mode),
        }
        if problem.exponential is not None:
            n, mle = problem.exponential
            curves["exact"] = statmodels.exact_density_exponential(n, mle, points)
            median["exact"] = statmodels.exact_quantile_exponential(n, mle, 0.5)
        curves["median"] = median
        return curves

    def _marginal(self, problem: FittedProblem, points: np.ndarray, psi: int) -> Dict[str, object]:
        model, data, geom = problem.model, problem.data, problem.geom
        if psi >= geom.dim:
            raise ConfigError(f"psi-index {psi} out of range for d = {geom.dim}")
        psi_hat = float(geom.mle[psi])
        sd = 1.0 / math.sqrt(univariate.profile_information(geom, psi))
        fit = sks.marginal_sks_fit(geom, psi)
        params = snmatch.sn_marginal(problem.sn, [psi])
        oracle = statmodels.MarginalQuadrature(model, data, psi, geom)

        curves = {
            "theta": points,
            "exact": oracle.density(points),
            "normal": np.asarray(norm_pdf((points - psi_hat) / sd)) / sd,
            "sks": np.asarray(sks.marginal_sks_density(fit, points)),
            "sn": np.asarray(snmatch.sn_pdf(params, points.reshape(-1, 1))),
            "ho": univariate.ho_density(model, data, geom, points, psi_index=psi),
        }
        curves["median"] = {
            "exact": bracket_root(lambda s: oracle.cdf(s) - 0.5, float(geom.map_point[psi]), sd),
            "normal": psi_hat,
            "sks": bracket_root(lambda s: sks.marginal_sks_cdf(fit, s) - 0.5, fit.center, sd),
            "sn": snmatch.sn_quantile(params, 0.5),
            "ho": univariate.posterior_median_rstar(model, data, geom, psi_index=psi),
        }
        return curves

    def render(self, config: RunConfig, grid: GridSpec) -> str:
        """Curves as CSV text: density rows followed by one median row"""
        curves = self.curves(config, grid)
        methods = CURVE_HEADER[2:]
        rows: List[List[str]] = []
        for k, theta in enumerate(curves["theta"]):
            rows.append(["density", format_float(theta)] + [_cell(curves[m][k]) for m in methods])
        rows.append(["median", ""] + [_cell(curves["median"][m]) for m in methods])
        return write_csv(CURVE_HEADER, rows)


def _cell(value: float) -> str:
    return "" if not np.isfinite(value) else format_float(value)


# Global curve service instance
curve_service = CurveService()


def get_curve_service() -> CurveService:
    """Get curve service instance"""
    return curve_service
