from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence
from app.config import settings
from app.exceptions import BdmError, NumericError
from app.services import sks, snmatch, statmodels, univariate
from app.services.reference_values import EXPONENTIAL_MLE, SAMPLE_SIZES, TABLE_METHODS, THETA0_GRID
from app.utils.formatters import format_float, round_half_even, write_csv
from app.utils.logger import get_logger

logger = get_logger("table_service")


def table_header() -> List[str]:
    """CSV header of the exponential table"""
    header = ["n", "theta0"]
    for method in TABLE_METHODS:
        header += [method, f"{method}_2dp"]
    return header + ["sks_raw", "sks_raw_2dp"]


class TableService:
    """Service regenerating the exponential discrepancy table"""

    def compute_block(self, n: int, mle: float, grid: Sequence[float]) -> List[Dict[str, float]]:
        """
        Evaluate every method on a theta0 grid for one sample size

        Args:
            n: Sample size
            mle: Maximum likelihood estimate
            grid: theta0 values

        Returns:
            List of {method: delta} dictionaries, one per theta0
        """
        try:
            model, data = statmodels.exponential_model(n, mle)
            geom = statmodels.fit_geometry(model, data)
            fit = sks.sks_fit(geom)
            params = snmatch.sn_fit(snmatch.match_inputs_from_geometry(geom))
            rows = []
            for theta0 in grid:
                closed = sks.bdm_sks(fit, theta0)
                rows.append({
                    "io": univariate.bdm_io(geom, theta0).delta,
                    "ho": univariate.bdm_ho(model, data, geom, theta0).delta,
                    "sks": closed.delta,
                    "sks-num": sks.bdm_sks_numeric(fit, theta0).delta,
                    "sn": snmatch.bdm_sn_univariate(params, theta0).delta,
                    "exact": statmodels.exact_bdm_exponential(n, mle, theta0).delta,
                    "sks_raw": closed.raw_delta,
                })
            logger.info(f"Computed table block n={n}")
            return rows
        except BdmError:
            raise
        except Exception as e:
            logger.error(f"Failed to compute table block n={n}: {e}")
            raise NumericError(f"Failed to compute table block n={n}: {e}") from e

    def build_rows(
        self,
        sample_sizes: Optional[Sequence[int]] = None,
        grid: Optional[Sequence[float]] = None,
        mle: float = EXPONENTIAL_MLE,
        workers: Optional[int] = None,
    ) -> List[List[str]]:
        """
        Build the formatted table rows, ordered by n then theta0

        Args:
            sample_sizes: Sample sizes (default 6, 12, 20, 40)
            grid: theta0 values (default 0.3, ..., 2.4)
            mle: Maximum likelihood estimate
            workers: Number of threads evaluating blocks

        Returns:
            List of CSV rows matching table_header()
        """
        sample_sizes = list(sample_sizes or SAMPLE_SIZES)
        grid = list(grid or THETA0_GRID)
        workers = workers or settings.TABLE_WORKERS

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                blocks = list(pool.map(lambda n: self.compute_block(n, mle, grid), sample_sizes))
        else:
            blocks = [self.compute_block(n, mle, grid) for n in sample_sizes]

        rows = []
        for n, block in zip(sample_sizes, blocks):
            for theta0, values in zip(grid, block):
                row = [str(n), format_float(theta0)]
                for method in TABLE_METHODS + ["sks_raw"]:
                    row += [format_float(values[method]), round_half_even(values[method])]
                rows.append(row)
        return rows

    def render(self, **kwargs) -> str:
        """Full table as CSV text"""
        return write_csv(table_header(), self.build_rows(**kwargs))


# Global table service instance
table_service = TableService()


def get_table_service() -> TableService:
    """Get table service instance"""
    return table_service
