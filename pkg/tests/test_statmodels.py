import math
import numpy as np
import pytest
from scipy import stats
from app.config import settings
from app.models.dataset import Dataset
from app.exceptions import ConfigError, DimensionError, DomainError, ParseError, SchemaError
from app.services import calculus, statmodels
from app.services.reference_values import LOGISTIC_MAP


def test_exponential_geometry(exponential6):
    _, _, geom = exponential6
    assert geom.family == "exponential"
    assert geom.dim == 1
    assert geom.mle[0] == pytest.approx(1.2, abs=1e-8)
    # Jeffreys prior: MAP = t_n / (n + 1)
    assert geom.map_point[0] == pytest.approx(7.2 / 7.0, abs=1e-8)
    assert geom.obs_info_mle[0, 0] == pytest.approx(6.0 / 1.44, rel=1e-8)
    assert geom.third_complete


@pytest.mark.parametrize("n,expected", [(6, 1.0286), (12, 1.1077), (20, 1.1429), (40, 1.1707)])
def test_exponential_map_by_sample_size(n, expected):
    model, data = statmodels.exponential_model(n, 1.2)
    geom = statmodels.fit_geometry(model, data)
    assert geom.map_point[0] == pytest.approx(expected, abs=1e-4)


def test_exponential_third_derivative(exponential6):
    model, data, _ = exponential6
    tensor, complete = statmodels.loglik_third(model, data, [1.2])
    assert complete
    assert tensor.ravel()[0] == pytest.approx(13.8889, abs=1e-4)


def test_exponential_log_parameterization():
    model, data = statmodels.exponential_model(6, 1.2, parameterization="log")
    geom = statmodels.fit_geometry(model, data)
    assert model.name == "exponential-log"
    assert geom.map_point[0] == pytest.approx(math.log(1.2), abs=1e-8)
    info, fallback = statmodels.expected_information(model, data, geom.mle)
    assert not fallback
    assert info[0, 0] == pytest.approx(6.0)


def test_exponential_rejects_bad_summary():
    with pytest.raises(DomainError):
        statmodels.exponential_model(6, -1.0)
    with pytest.raises(DomainError):
        statmodels.exponential_model(0, 1.2)
    with pytest.raises(DomainError):
        statmodels.exponential_model_from_data([1.0, -2.0])


def test_exponential_from_data_uses_mean():
    model, data = statmodels.exponential_model_from_data([0.5, 1.5, 1.0, 2.0])
    assert data.n == 4
    assert data.sufficient["t_n"] == pytest.approx(5.0)


def test_log_posterior_outside_domain(exponential6):
    model, data, _ = exponential6
    assert statmodels.log_posterior_free(model, data, [-1.0]) == -math.inf


def test_analytic_derivatives_match_finite_differences(cushings):
    model, data, geom = cushings
    theta = np.asarray(geom.map_point) + np.array([0.1, -0.01, 0.05])
    loglik = lambda t: model.loglik(t, data)
    np.testing.assert_allclose(statmodels.loglik_gradient(model, data, theta), calculus.fd_gradient(loglik, theta), rtol=1e-6, atol=1e-6)
    hessian = statmodels.loglik_hessian(model, data, theta)
    np.testing.assert_allclose(hessian, calculus.fd_hessian(loglik, theta), atol=1e-5 * np.max(np.abs(hessian)))
    tensor, complete = statmodels.loglik_third(model, data, theta)
    report = calculus.fd_derivatives(loglik, theta, order=3, want_full_tensor=True)
    assert complete
    # raw covariates put entries on very different scales
    np.testing.assert_allclose(tensor, report.third_full, atol=1e-2 * np.max(np.abs(tensor)))


def test_logistic_batch_matches_pointwise(cushings):
    model, data, geom = cushings
    points = np.asarray(geom.map_point) + np.array([[0.0, 0.0, 0.0], [0.5, -0.5, 1.0]])
    batch = statmodels.log_posterior_batch(model, data, points)
    pointwise = [statmodels.log_posterior(model, data, p) for p in points]
    np.testing.assert_allclose(batch, pointwise, rtol=1e-12)


def test_cushings_geometry(cushings):
    model, data, geom = cushings
    assert data.n == 27
    assert model.dim == 3
    assert model.param_names == ["beta0", "beta1", "beta2"]
    assert np.max(np.abs(statmodels.logpost_gradient(model, data, geom.map_point))) < 1e-6
    assert np.all(np.linalg.eigvalsh(geom.post_info_map) > 0)


def test_load_csv_shipped_file():
    dataset = statmodels.load_csv(settings.CUSHINGS_CSV_PATH)
    assert dataset.n == 27
    assert dataset.columns == ["tetrahydrocortisone", "pregnanetriol"]
    assert dataset.response.sum() == 10
    # raw metabolite levels, not a median split
    assert dataset.observations[:, 0].max() == pytest.approx(53.8)


def test_load_csv_errors(tmp_path):
    with pytest.raises(ConfigError):
        statmodels.load_csv(str(tmp_path / "missing.csv"))

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("x1,y\n1,0\n2\n")
    with pytest.raises(ParseError) as info:
        statmodels.load_csv(str(ragged))
    assert info.value.line == 3

    text = tmp_path / "text.csv"
    text.write_text("x1,y\n1,abc\n")
    with pytest.raises(ParseError) as info:
        statmodels.load_csv(str(text))
    assert info.value.line == 2

    empty = tmp_path / "empty.csv"
    empty.write_text("x1,y\n")
    with pytest.raises(SchemaError):
        statmodels.load_csv(str(empty))


def test_logistic_requires_binary_response(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,y\n1,2\n0,1\n")
    with pytest.raises(SchemaError):
        statmodels.logistic_model(statmodels.load_csv(str(path)))


def test_exact_exponential_oracle():
    assert statmodels.exact_bdm_exponential(6, 1.2, 0.9).delta == pytest.approx(0.6175, abs=1e-4)
    assert statmodels.exact_bdm_exponential(6, 1.2, 1.2).delta == pytest.approx(0.1086, abs=1e-4)
    assert statmodels.exact_quantile_exponential(6, 1.2, 0.5) == pytest.approx(1.2698, abs=1e-4)
    result = statmodels.exact_bdm_exponential(6, 1.2, 2.4)
    assert 1.0 - result.tail_low == pytest.approx(0.083918, abs=1e-6)
    with pytest.raises(DomainError):
        statmodels.exact_bdm_exponential(6, 1.2, 0.0)


def test_exact_density_integrates_to_cdf():
    value = calculus.integrate_1d(lambda t: float(statmodels.exact_density_exponential(6, 1.2, t)), 0.0, 1.5)
    assert value == pytest.approx(statmodels.exact_cdf_exponential(6, 1.2, 1.5), abs=1e-9)


def test_marginal_quadrature_scalar_matches_closed_form(exponential6):
    model, data, geom = exponential6
    oracle = statmodels.MarginalQuadrature(model, data, 0, geom)
    for theta0 in (0.6, 0.9, 1.8):
        assert oracle.cdf(theta0) == pytest.approx(statmodels.exact_cdf_exponential(6, 1.2, theta0), abs=1e-6)


def test_marginal_quadrature_recovers_student_t():
    y = np.array([1.2, 0.4, 2.3, 1.9, 0.8, 1.5, 1.1, 2.0])
    model, data = statmodels.normal_model(y)
    scale = y.std(ddof=1) / math.sqrt(y.size)
    result = statmodels.exact_marginal_bdm_quadrature(model, data, 0, 1.0)
    expected = stats.t.cdf((1.0 - y.mean()) / scale, df=y.size - 1)
    assert result.tail_low == pytest.approx(expected, abs=1e-4)
    assert result.diagnostics["error_estimate"] <= settings.MARGINAL_QUAD_ERROR_LIMIT


def test_marginal_quadrature_dimension_cap():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 3))
    y = (X[:, 0] + rng.normal(size=30) > 0).astype(float)
    data = Dataset(observations=X, response=y, columns=["a", "b", "c"])
    model = statmodels.logistic_model(data)
    with pytest.raises(DimensionError):
        statmodels.MarginalQuadrature(model, data, 1)


def test_normal_known_sigma():
    model, data = statmodels.normal_model([1.0, 2.0, 3.0], sigma=2.0)
    geom = statmodels.fit_geometry(model, data)
    assert model.name == "normal-mean"
    assert geom.map_point[0] == pytest.approx(2.0)
    assert geom.obs_info_mle[0, 0] == pytest.approx(0.75)


def test_cushings_posterior_mode(cushings):
    _, _, geom = cushings
    np.testing.assert_allclose(geom.map_point[1:], LOGISTIC_MAP, atol=0.01)
    # raw metabolite levels keep the two slopes apart
    assert abs(geom.map_point[1] - geom.map_point[2]) > 0.2


@pytest.mark.slow
def test_cushings_marginals_are_coordinate_specific(cushings):
    model, data, geom = cushings
    beta1 = statmodels.exact_marginal_bdm_quadrature(model, data, 1, 0.0, geom=geom).delta
    beta2 = statmodels.exact_marginal_bdm_quadrature(model, data, 2, 0.0, geom=geom).delta
    assert beta1 == pytest.approx(0.588, abs=0.005)
    assert beta2 == pytest.approx(0.930, abs=0.005)


@pytest.mark.slow
def test_marginal_quadrature_is_stable_under_node_doubling(cushings):
    model, data, geom = cushings
    for psi_index in (1, 2):
        coarse = statmodels.exact_marginal_bdm_quadrature(model, data, psi_index, 0.0, geom=geom, nodes=64)
        fine = statmodels.exact_marginal_bdm_quadrature(model, data, psi_index, 0.0, geom=geom, nodes=128)
        assert fine.delta == pytest.approx(coarse.delta, abs=2e-3)


def _unit_ball_starts(center, count, seed):
    rng = np.random.default_rng(seed)
    d = center.size
    directions = rng.normal(size=(count, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(size=(count, 1)) ** (1.0 / d)
    return center + radii * directions


@pytest.mark.parametrize("fixture", ["exponential6", "cushings"])
def test_maximize_is_invariant_to_start(fixture, request):
    model, data, geom = request.getfixturevalue(fixture)
    target = lambda t: statmodels.log_posterior(model, data, t)
    grad = lambda t: statmodels.logpost_gradient(model, data, t)
    hess = lambda t: statmodels.logpost_hessian(model, data, t)
    for x0 in _unit_ball_starts(np.asarray(geom.map_point), 5, seed=3):
        found = calculus.maximize(target, x0, grad=grad, hess=hess)
        np.testing.assert_allclose(found, geom.map_point, atol=1e-6)


def test_exponential_gradient_matches_finite_differences_on_grid(exponential6):
    model, data, _ = exponential6
    loglik = lambda t: model.loglik(t, data)
    for theta in np.linspace(0.4, 3.0, 20):
        analytic = statmodels.loglik_gradient(model, data, [theta])
        np.testing.assert_allclose(analytic, calculus.fd_gradient(loglik, [theta]), rtol=1e-5, atol=1e-5 * max(1.0, float(np.max(np.abs(analytic)))))


def test_logistic_gradient_matches_finite_differences_on_grid(cushings):
    model, data, geom = cushings
    loglik = lambda t: model.loglik(t, data)
    scale = np.sqrt(np.diag(np.linalg.inv(geom.post_info_map)))
    offsets = np.random.default_rng(12).uniform(-2.0, 2.0, size=(20, 3))
    for theta in np.asarray(geom.map_point) + offsets * scale:
        analytic = statmodels.loglik_gradient(model, data, theta)
        np.testing.assert_allclose(analytic, calculus.fd_gradient(loglik, theta), rtol=1e-5, atol=1e-5 * max(1.0, float(np.max(np.abs(analytic)))))
