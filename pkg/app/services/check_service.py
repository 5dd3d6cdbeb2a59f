import math
from typing import Callable, Dict, List, Optional, Tuple
import numpy as np
from app.config import settings
from app.exceptions import BdmError
from app.models.results import CheckOutcome
from app.models.skew import MatchInputs, SnParams
from app.services import otmap, sks, snmatch, statmodels, univariate
from app.services.calculus import fd_derivatives, integrate_1d
from app.services.reference_values import (
    EXPONENTIAL_MAP,
    EXPONENTIAL_MLE,
    HARD_METHODS,
    LOGISTIC_JOINT,
    LOGISTIC_MAP,
    LOGISTIC_MARGINAL,
    LOGISTIC_TOLERANCE,
    SAMPLE_SIZES,
    SOFT_METHODS,
    THETA0_GRID,
    reference_delta,
)
from app.services.specialfn import chi2_cdf, norm_cdf, owens_t, sn_cdf, sn_pdf, zeta
from app.services.table_service import get_table_service
from app.utils.logger import get_logger

logger = get_logger("check_service")

CheckFunction = Callable[["CheckContext"], Tuple[bool, str]]

TABLE_TOLERANCE = 0.015


class CheckContext:
    """Shared state of one check run: seed, tolerance overrides and cached computations"""

    def __init__(self, seed: int, overrides: Optional[Dict[str, float]] = None):
        self.seed = seed
        self.overrides = overrides or {}
        self._table: Optional[Dict[Tuple[int, float], Dict[str, float]]] = None
        self._logistic = None

    def tolerance(self, name: str, default: float) -> float:
        return float(self.overrides.get(name, default))

    @property
    def table(self) -> Dict[Tuple[int, float], Dict[str, float]]:
        if self._table is None:
            service = get_table_service()
            self._table = {}
            for n in SAMPLE_SIZES:
                for theta0, values in zip(THETA0_GRID, service.compute_block(n, EXPONENTIAL_MLE, THETA0_GRID)):
                    self._table[(n, theta0)] = values
        return self._table

    @property
    def logistic(self):
        if self._logistic is None:
            data = statmodels.load_csv(settings.CUSHINGS_CSV_PATH)
            model = statmodels.logistic_model(data)
            geom = statmodels.fit_geometry(model, data)
            params = snmatch.sn_fit(snmatch.match_inputs_from_geometry(geom))
            self._logistic = (model, data, geom, params)
        return self._logistic


def _table_check(methods) -> CheckFunction:
    def run(ctx: CheckContext) -> Tuple[bool, str]:
        worst, where = 0.0, ""
        for (n, theta0), values in ctx.table.items():
            for method in methods:
                expected = reference_delta(n, method, theta0)
                got = values[method]
                if method in ("io", "ho") and theta0 == EXPONENTIAL_MLE:
                    error = abs(round(got, 2) - 0.0)
                else:
                    error = abs(got - abs(expected))
                if error > worst:
                    worst, where = error, f"n={n} theta0={theta0} {method}"
        return worst <= ctx.tolerance("table", TABLE_TOLERANCE), f"max error {worst:.4f} at {where}"
    return run


def _anchors(ctx: CheckContext) -> Tuple[bool, str]:
    exact = statmodels.exact_bdm_exponential(6, EXPONENTIAL_MLE, 1.2).delta
    model, data = statmodels.exponential_model(6, EXPONENTIAL_MLE)
    geom = statmodels.fit_geometry(model, data)
    io = univariate.bdm_io(geom, 0.9).delta
    maps_ok = True
    for n, printed in EXPONENTIAL_MAP.items():
        m, d = statmodels.exponential_model(n, EXPONENTIAL_MLE)
        maps_ok &= round(float(statmodels.fit_geometry(m, d).map_point[0]), 2) == printed
    passed = abs(exact - 0.109) <= 0.002 and abs(io - 0.460) <= 0.002 and maps_ok
    return passed, f"exact={exact:.4f} io={io:.4f} maps={'ok' if maps_ok else 'mismatch'}"


def _higher_order_accuracy(ctx: CheckContext) -> Tuple[bool, str]:
    ho_err = max(abs(v["ho"] - v["exact"]) for (n, t), v in ctx.table.items() if t != EXPONENTIAL_MLE)
    io_err = max(abs(v["io"] - v["exact"]) for (n, t), v in ctx.table.items() if n == 6 and t != EXPONENTIAL_MLE)
    return ho_err <= 0.005 and io_err > ho_err, f"ho max error {ho_err:.4f}, io max error (n=6) {io_err:.4f}"


def _sks_num_decreasing(ctx: CheckContext) -> Tuple[bool, str]:
    details, ok = [], True
    for theta0 in (0.9, 1.5):
        errors = [abs(ctx.table[(n, theta0)]["sks-num"] - ctx.table[(n, theta0)]["exact"]) for n in SAMPLE_SIZES]
        ok &= all(a >= b for a, b in zip(errors, errors[1:]))
        details.append(f"{theta0}: " + ",".join(f"{e:.3f}" for e in errors))
    return ok, "; ".join(details)


def random_sn(rng: np.random.Generator, d: int) -> SnParams:
    """Random well-conditioned skew-normal with moderate shape"""
    A = rng.normal(size=(d, d))
    omega = A @ A.T + d * np.eye(d)
    return SnParams(xi=rng.normal(size=d), omega=omega, alpha=rng.uniform(-3.0, 3.0, size=d))


def sn_mode(params: SnParams) -> np.ndarray:
    """Mode of a skew-normal by Newton iteration on the analytic derivatives"""
    x = params.mean.copy()
    for _ in range(100):
        report = snmatch.sn_logpdf_derivatives(params, x)
        step = np.linalg.solve(-report.hessian, report.gradient)
        x = x + step
        if np.max(np.abs(step)) < 1e-14 * max(1.0, float(np.max(np.abs(x)))):
            break
    return x


def _sn_round_trip(ctx: CheckContext) -> Tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    tolerance = ctx.tolerance("sn_match", settings.SN_MATCH_TOLERANCE)
    worst = 0.0
    for k in range(50):
        target = random_sn(rng, 1 + k % 3)
        mode = sn_mode(target)
        report = snmatch.sn_logpdf_derivatives(target, mode)
        inputs = MatchInputs(m=mode, H=-report.hessian, t=report.third_unmixed)
        try:
            fitted = snmatch.sn_fit(inputs, tolerance=tolerance)
        except BdmError as e:
            return False, f"instance {k}: {e.message}"
        error = max(
            float(np.max(np.abs(fitted.xi - target.xi))),
            float(np.max(np.abs(fitted.omega - target.omega))),
            float(np.max(np.abs(fitted.alpha - target.alpha))),
        )
        worst = max(worst, error)
    return worst <= 1e-4, f"max parameter error {worst:.2e}"


def _sn_residuals_builtin(ctx: CheckContext) -> Tuple[bool, str]:
    model, data = statmodels.exponential_model(6, EXPONENTIAL_MLE)
    geoms = [statmodels.fit_geometry(model, data), ctx.logistic[2]]
    worst = 0.0
    for geom in geoms:
        inputs = snmatch.match_inputs_from_geometry(geom)
        params = snmatch.sn_fit(inputs)
        report = fd_derivatives(lambda x: snmatch.sn_logpdf(params, x), inputs.m, order=3)
        worst = max(
            worst,
            float(np.max(np.abs(report.gradient))) / float(np.max(np.abs(inputs.H))),
            float(np.max(np.abs(-report.hessian - inputs.H))) / float(np.max(np.abs(inputs.H))),
        )
    return worst <= 1e-4, f"max relative FD residual {worst:.2e}"


def _ot_univariate_identity(ctx: CheckContext) -> Tuple[bool, str]:
    params = SnParams(xi=[0.3], omega=[[1.7]], alpha=[2.5])
    ot = otmap.build_ot(params)
    worst = 0.0
    for theta0 in np.linspace(-3.0, 5.0, 50):
        multi = otmap.bdm_sn_multi(params, [theta0], ot).delta
        single = snmatch.bdm_sn_univariate(params, theta0).delta
        worst = max(worst, abs(multi - single))
    return worst <= 1e-10, f"max difference {worst:.2e}"


def aligned_sn() -> SnParams:
    """Three-dimensional SN whose slant is an eigenvector of the scale matrix"""
    omega = np.array([[2.0, 0.5, 0.0], [0.5, 1.5, 0.3], [0.0, 0.3, 1.0]])
    values, vectors = np.linalg.eigh(omega)
    slant = 1.5 * vectors[:, -1]
    return SnParams.from_slant([0.5, -1.0, 2.0], omega, slant)


def _pushforward(params_source: str) -> CheckFunction:
    def run(ctx: CheckContext) -> Tuple[bool, str]:
        params = aligned_sn() if params_source == "aligned" else ctx.logistic[3]
        report = otmap.pushforward_diagnostic(params, settings.MC_DRAWS, ctx.seed)
        return report.passes(), (
            f"mean {report.max_abs_mean:.4f} cov {report.cov_error:.4f} "
            f"skew {report.max_abs_skewness:.4f} qq {report.qq_correlation:.5f}"
        )
    return run


def _special_functions(ctx: CheckContext) -> Tuple[bool, str]:
    xs = np.linspace(0.0, 9.0, 37)
    chi_err = float(np.max(np.abs(chi2_cdf(xs, 1) - (2.0 * norm_cdf(np.sqrt(xs)) - 1.0))))

    zeta_err = 0.0
    for kappa in np.linspace(-6.0, 6.0, 25):
        h = 1e-4
        for k in (2, 3):
            fd = (zeta(k - 1, kappa + h) - zeta(k - 1, kappa - h)) / (2.0 * h)
            zeta_err = max(zeta_err, abs(fd - zeta(k, kappa)) / max(abs(zeta(k, kappa)), 1e-3))

    sn_err = 0.0
    for x in (-2.0, -0.5, 0.0, 1.0, 3.0):
        quad = integrate_1d(lambda s: sn_pdf(s, 0.2, 1.3, -1.7), -math.inf, x, tol=1e-12)
        sn_err = max(sn_err, abs(quad - sn_cdf(x, 0.2, 1.3, -1.7)))

    owen_err = 0.0
    for h, a in ((0.5, 1.0), (1.5, 0.3), (-0.7, 2.0)):
        quad = integrate_1d(lambda x: math.exp(-0.5 * h * h * (1.0 + x * x)) / (1.0 + x * x), 0.0, a, tol=1e-13) / (2.0 * math.pi)
        owen_err = max(owen_err, abs(quad - owens_t(h, a)))

    passed = chi_err <= 1e-10 and zeta_err <= 1e-5 and sn_err <= 1e-8 and owen_err <= 1e-10
    return passed, f"chi2 {chi_err:.1e} zeta {zeta_err:.1e} sn {sn_err:.1e} owen {owen_err:.1e}"


def _logistic_marginals(ctx: CheckContext) -> Dict[str, Dict[str, float]]:
    model, data, geom, params = ctx.logistic
    out: Dict[str, Dict[str, float]] = {m: {} for m in LOGISTIC_MARGINAL}
    for psi, label in ((1, "beta1"), (2, "beta2")):
        out["io"][label] = univariate.bdm_io_profile(model, data, geom, psi, 0.0).delta
        out["ho"][label] = univariate.bdm_ho_profile(model, data, geom, psi, 0.0).delta
        out["sks"][label] = sks.bdm_marginal_sks(sks.marginal_sks_fit(geom, psi), None, 0.0).delta
        out["sn"][label] = snmatch.bdm_sn_univariate(snmatch.sn_marginal(params, [psi]), 0.0).delta
        out["exact"][label] = statmodels.exact_marginal_bdm_quadrature(model, data, psi, 0.0, geom=geom).delta
    return out


def _logistic_reference(ctx: CheckContext) -> Tuple[bool, str]:
    model, data, geom, params = ctx.logistic
    values = _logistic_marginals(ctx)
    worst, where = 0.0, ""
    for method, expected in LOGISTIC_MARGINAL.items():
        for label, ref in expected.items():
            error = abs(values[method][label] - ref)
            if error > worst:
                worst, where = error, f"{method}/{label}"
    joint = {
        "wald": univariate.bdm_wald_multi(geom, [0.0, 0.0], indices=[1, 2]).delta,
        "sn": otmap.bdm_sn_multi(snmatch.sn_marginal(params, [1, 2]), [0.0, 0.0]).delta,
    }
    for method, ref in LOGISTIC_JOINT.items():
        error = abs(joint[method] - ref)
        if error > worst:
            worst, where = error, f"joint/{method}"
    return worst <= LOGISTIC_TOLERANCE, f"max deviation {worst:.3f} at {where}"


def _logistic_map(ctx: CheckContext) -> Tuple[bool, str]:
    _, _, geom, _ = ctx.logistic
    slopes = np.asarray(geom.map_point[1:], dtype=float)
    error = float(np.max(np.abs(slopes - np.asarray(LOGISTIC_MAP))))
    return error <= 0.01, f"MAP slopes {np.round(slopes, 4).tolist()} (max deviation {error:.4f})"


def _logistic_oracle(ctx: CheckContext) -> Tuple[bool, str]:

    values = _logistic_marginals(ctx)
    ok, details = True, []
    for label in ("beta1", "beta2"):
        exact = values["exact"][label]
        io_err = abs(values["io"][label] - exact)
        for method in ("sks", "sn"):
            error = abs(values[method][label] - exact)
            ok &= error <= 0.06 and error < io_err
            details.append(f"{method}/{label} {error:.3f} (io {io_err:.3f})")
    return ok, "; ".join(details)


class CheckService:
    """Service running the acceptance suite and reporting a pass/fail matrix"""

    def __init__(self):
        self.checks: List[Tuple[str, bool, CheckFunction]] = [
            ("table_hard_rows", True, _table_check(HARD_METHODS)),
            ("table_soft_rows", False, _table_check(SOFT_METHODS)),
            ("spot_anchors", True, _anchors),
            ("higher_order_accuracy", True, _higher_order_accuracy),
            ("sks_num_error_decreasing", True, _sks_num_decreasing),
            ("sn_round_trip", True, _sn_round_trip),
            ("sn_residuals_builtin", True, _sn_residuals_builtin),
            ("ot_univariate_identity", True, _ot_univariate_identity),
            ("ot_pushforward_aligned", True, _pushforward("aligned")),
            ("ot_pushforward_logistic", True, _pushforward("logistic")),
            ("special_functions", True, _special_functions),
            ("logistic_map", True, _logistic_map),
            ("logistic_reference", False, _logistic_reference),
            ("logistic_vs_oracle", True, _logistic_oracle),
        ]

    def run(self, seed: Optional[int] = None, overrides: Optional[Dict[str, float]] = None, only: Optional[List[str]] = None) -> List[CheckOutcome]:
        """
        Run the acceptance checks

        Args:
            seed: Random seed for Monte Carlo and randomized checks
            overrides: Tolerance overrides by name ("table", "sn_match")
            only: Restrict to these check names

        Returns:
            List of CheckOutcome in registry order
        """
        ctx = CheckContext(settings.DEFAULT_SEED if seed is None else seed, overrides)
        outcomes = []
        for name, hard, check in self.checks:
            if only and name not in only:
                continue
            try:
                passed, detail = check(ctx)
            except BdmError as e:
                passed, detail = False, f"{type(e).__name__}: {e.message}"
            except Exception as e:
                logger.error(f"Failed to run check {name}: {e}")
                passed, detail = False, f"{type(e).__name__}: {e}"
            outcomes.append(CheckOutcome(name=name, passed=bool(passed), hard=hard, detail=detail))
            logger.info(f"Check {name}: {'pass' if passed else 'fail'}")
        return outcomes

    @staticmethod
    def render(outcomes: List[CheckOutcome]) -> str:
        """Pass/fail matrix, one line per check"""
        width = max(len(o.name) for o in outcomes) if outcomes else 0
        lines = []
        for outcome in outcomes:
            status = "PASS" if outcome.passed else "FAIL"
            kind = "hard" if outcome.hard else "soft"
            lines.append(f"{status}  {kind}  {outcome.name.ljust(width)}  {outcome.detail}")
        failed = sum(1 for o in outcomes if o.hard and not o.passed)
        lines.append(f"{len(outcomes)} checks, {failed} hard failure(s)")
        return "\n".join(lines) + "\n"

    @staticmethod
    def exit_code(outcomes: List[CheckOutcome]) -> int:
        return 1 if any(o.hard and not o.passed for o in outcomes) else 0


# Global check service instance
check_service = CheckService()


def get_check_service() -> CheckService:
    """Get check service instance"""
    return check_service
