import numpy as np
import pytest
from app.exceptions import DimensionError, DomainError, InfeasibleMatchError
from app.models.skew import MatchInputs, SnParams
from app.services import calculus, snmatch, statmodels
from app.services.check_service import random_sn, sn_mode
from app.services.reference_values import THETA0_GRID
from app.services.specialfn import sn_cdf


@pytest.fixture(scope="module")
def sn6(exponential6):
    return snmatch.sn_fit(snmatch.match_inputs_from_geometry(exponential6[2]))


def test_exponential_fit_matches_geometry(sn6, exponential6):
    inputs = snmatch.match_inputs_from_geometry(exponential6[2])
    residuals = snmatch.match_residuals(sn6, inputs)
    assert set(residuals) == {"mode", "hessian", "third", "kappa"}
    assert max(residuals.values()) < 1e-8
    assert sn6.alpha[0] > 0.0


def test_exponential_measure(sn6):
    result = snmatch.bdm_sn_univariate(sn6, 0.9)
    assert result.method == "sn"
    assert result.delta == pytest.approx(0.5237, abs=1e-3)
    assert result.tail_low + result.diagnostics["tail_high"] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_fit_recovers_skew_normal(d):
    target = random_sn(np.random.default_rng(10 + d), d)
    mode = sn_mode(target)
    report = snmatch.sn_logpdf_derivatives(target, mode)
    fitted = snmatch.sn_fit(MatchInputs(m=mode, H=-report.hessian, t=report.third_unmixed))
    np.testing.assert_allclose(fitted.xi, target.xi, atol=1e-6)
    np.testing.assert_allclose(fitted.omega, target.omega, atol=1e-6)
    np.testing.assert_allclose(fitted.alpha, target.alpha, atol=1e-5)


def test_zero_skewness_gives_gaussian():
    H = np.array([[2.0, 0.3], [0.3, 1.0]])
    params = snmatch.sn_fit(MatchInputs(m=[1.0, -1.0], H=H, t=[0.0, 0.0]))
    np.testing.assert_allclose(params.alpha, 0.0, atol=1e-12)
    np.testing.assert_allclose(params.xi, [1.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(params.omega, np.linalg.inv(H), atol=1e-12)


def test_tight_tolerance_is_reported(exponential6):
    inputs = snmatch.match_inputs_from_geometry(exponential6[2])
    with pytest.raises(InfeasibleMatchError) as info:
        snmatch.sn_fit(inputs, tolerance=-1.0)
    assert "kappa" in info.value.details


def test_analytic_derivatives_match_finite_differences():
    params = random_sn(np.random.default_rng(5), 2)
    x = params.mean
    analytic = snmatch.sn_logpdf_derivatives(params, x)
    numeric = calculus.fd_derivatives(lambda z: snmatch.sn_logpdf(params, z), x, order=3)
    np.testing.assert_allclose(analytic.gradient, numeric.gradient, atol=1e-6)
    np.testing.assert_allclose(analytic.hessian, numeric.hessian, atol=1e-4)
    np.testing.assert_allclose(analytic.third_unmixed, numeric.third_unmixed, atol=1e-2)


def test_logpdf_shapes():
    params = random_sn(np.random.default_rng(6), 2)
    assert isinstance(snmatch.sn_logpdf(params, [0.0, 0.0]), float)
    assert snmatch.sn_logpdf(params, np.zeros((4, 2))).shape == (4,)
    univariate = SnParams(xi=[0.0], omega=[[1.0]], alpha=[1.0])
    assert snmatch.sn_logpdf(univariate, np.array([0.0, 1.0, 2.0])).shape == (3,)


def test_marginal_density_integrates_joint():
    params = random_sn(np.random.default_rng(7), 2)
    marginal = snmatch.sn_marginal(params, [0])
    x0 = float(params.mean[0])
    integrated = calculus.integrate_1d(lambda y: snmatch.sn_pdf(params, [x0, y]), -np.inf, np.inf, center=float(params.mean[1]))
    assert snmatch.sn_pdf(marginal, [x0]) == pytest.approx(integrated, rel=1e-6)
    with pytest.raises(DomainError):
        snmatch.sn_marginal(params, [0, 0])


def test_quantile_and_sampling():
    params = SnParams(xi=[0.2], omega=[[1.5]], alpha=[4.0])
    median = snmatch.sn_quantile(params, 0.5)
    assert sn_cdf(median, 0.2, 1.5, 4.0) == pytest.approx(0.5, abs=1e-9)
    draws = snmatch.sn_sample(params, 200_000, seed=11)
    assert draws.shape == (200_000, 1)
    assert draws.mean() == pytest.approx(params.mean[0], abs=0.01)
    assert np.array_equal(draws, snmatch.sn_sample(params, 200_000, seed=11))


def test_univariate_operations_reject_vectors():
    params = random_sn(np.random.default_rng(8), 2)
    with pytest.raises(DimensionError):
        snmatch.bdm_sn_univariate(params, 0.0)
    with pytest.raises(DimensionError):
        snmatch.sn_quantile(params, 0.5)


def test_document_interchange():
    params = random_sn(np.random.default_rng(9), 3)
    restored = SnParams.from_document(params.to_document())
    np.testing.assert_array_equal(restored.omega, params.omega)
    np.testing.assert_array_equal(restored.alpha, params.alpha)


def _assert_single_sign_change(inputs, root):
    """Feasible residual samples keep one sign on each side of the root"""
    samples = np.linspace(root - 0.5, root + 0.5, 20)
    signs = [(k < root, np.sign(snmatch._residual(inputs, float(k)))) for k in samples]
    left = {s for below, s in signs if below and not np.isnan(s)}
    right = {s for below, s in signs if not below and not np.isnan(s)}
    assert len(left) <= 1 and len(right) <= 1
    assert not left & right


@pytest.mark.parametrize("n", [6, 12, 20, 40])
def test_exponential_kappa_root_is_unique(n):
    model, data = statmodels.exponential_model(n, 1.2)
    inputs = snmatch.match_inputs_from_geometry(statmodels.fit_geometry(model, data))
    roots = snmatch.kappa_roots(inputs)
    assert len(roots) == 1
    _assert_single_sign_change(inputs, roots[0])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_recovered_kappa_root_is_unique(d):
    target = random_sn(np.random.default_rng(10 + d), d)
    mode = sn_mode(target)
    report = snmatch.sn_logpdf_derivatives(target, mode)
    inputs = MatchInputs(m=mode, H=-report.hessian, t=report.third_unmixed)
    roots = snmatch.kappa_roots(inputs)
    assert len(roots) == 1
    assert roots[0] == pytest.approx(float(target.slant @ (mode - target.xi)), abs=1e-6)


def test_cushings_root_lies_past_infeasible_segment(cushings):
    _, _, geom = cushings
    inputs = snmatch.match_inputs_from_geometry(geom)
    # scale matrix is not positive definite anywhere on [-1, 1]
    assert np.isnan(snmatch._residual(inputs, 0.0))
    assert snmatch.kappa_roots(inputs, 1.0) == []
    roots = snmatch.kappa_roots(inputs)
    assert roots == [pytest.approx(1.549, abs=2e-3)]
    _assert_single_sign_change(inputs, roots[0])


def test_cushings_fit_matches_geometry(cushings, cushings_sn):
    _, _, geom = cushings
    residuals = snmatch.match_residuals(cushings_sn, snmatch.match_inputs_from_geometry(geom))
    assert max(residuals.values()) < 1e-8
    assert np.all(cushings_sn.alpha < 0.0)


@pytest.mark.parametrize("n", [6, 12, 20, 40])
def test_exponential_sn_rows(n, soft_rows):
    model, data = statmodels.exponential_model(n, 1.2)
    params = snmatch.sn_fit(snmatch.match_inputs_from_geometry(statmodels.fit_geometry(model, data)))
    deltas = [snmatch.bdm_sn_univariate(params, theta0).delta for theta0 in THETA0_GRID]
    np.testing.assert_allclose(deltas, soft_rows[(n, "sn")], atol=1e-3)
