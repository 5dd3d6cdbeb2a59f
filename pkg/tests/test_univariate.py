import numpy as np
import pytest
from app.exceptions import DimensionError, DomainError
from app.services import statmodels, univariate
from app.services.reference_values import SAMPLE_SIZES, THETA0_GRID, reference_delta
from app.services.table_service import get_table_service


def test_io_values(exponential6):
    _, _, geom = exponential6
    assert univariate.bdm_io(geom, 0.3).delta == pytest.approx(0.9338, abs=1e-4)
    assert univariate.bdm_io(geom, 0.9).delta == pytest.approx(0.4598, abs=1e-3)
    result = univariate.bdm_io(geom, 1.2)
    assert result.delta == pytest.approx(0.0, abs=1e-12)
    assert result.tail_low == pytest.approx(0.5)


def test_io_rejects_vector_geometry(cushings):
    _, _, geom = cushings
    with pytest.raises(DimensionError):
        univariate.bdm_io(geom, 0.0)


def test_io_depends_on_parameterization():
    theta_model, theta_data = statmodels.exponential_model(6, 1.2)
    log_model, log_data = statmodels.exponential_model(6, 1.2, parameterization="log")
    theta_geom = statmodels.fit_geometry(theta_model, theta_data)
    log_geom = statmodels.fit_geometry(log_model, log_data)
    assert univariate.bdm_io(theta_geom, 0.6).delta == pytest.approx(0.7793, abs=1e-3)
    assert univariate.bdm_io(log_geom, float(np.log(0.6))).delta == pytest.approx(0.9105, abs=1e-3)


def test_ho_close_to_exact(exponential6):
    model, data, geom = exponential6
    assert univariate.bdm_ho(model, data, geom, 0.9).delta == pytest.approx(0.6175, abs=1e-3)
    ho = univariate.bdm_ho(model, data, geom, 2.4)
    exact = statmodels.exact_bdm_exponential(6, 1.2, 2.4)
    assert ho.delta == pytest.approx(exact.delta, abs=1e-3)


def test_ho_guard_band_prints_zero(exponential6):
    model, data, geom = exponential6
    result = univariate.bdm_ho(model, data, geom, 1.2)
    assert result.delta == 0.0
    assert result.diagnostics["bridged"]
    assert 0.0 < result.diagnostics["bridged_delta"] < 0.3


def test_rstar_is_monotone_and_bridged_near_mle(exponential6):
    model, data, geom = exponential6
    values = [univariate.rstar(model, data, geom, t).value for t in (0.6, 0.9, 1.19999, 1.20001, 1.5, 2.4)]
    assert all(a < b for a, b in zip(values, values[1:])) or all(a > b for a, b in zip(values, values[1:]))
    near = univariate.rstar(model, data, geom, 1.2 + 1e-6)
    assert near.bridged
    assert np.isfinite(near.value)


def test_general_prior_mode_agrees_for_jeffreys_prior(exponential6):
    model, data, geom = exponential6
    jeffreys = univariate.bdm_ho(model, data, geom, 0.9, prior_mode="jeffreys").delta
    general = univariate.bdm_ho(model, data, geom, 0.9, prior_mode="general").delta
    assert general == pytest.approx(jeffreys, abs=1e-6)


@pytest.mark.parametrize("n", [6, 12, 20, 40])
def test_first_and_third_order_rows(n):
    model, data = statmodels.exponential_model(n, 1.2)
    geom = statmodels.fit_geometry(model, data)
    for theta0 in THETA0_GRID:
        io = univariate.bdm_io(geom, theta0).delta
        ho = univariate.bdm_ho(model, data, geom, theta0).delta
        assert io == pytest.approx(reference_delta(n, "io", theta0), abs=0.015)
        assert ho == pytest.approx(reference_delta(n, "ho", theta0), abs=0.015)


def test_rstar_median_and_interval(exponential6):
    model, data, geom = exponential6
    median = univariate.posterior_median_rstar(model, data, geom)
    assert median == pytest.approx(statmodels.exact_quantile_exponential(6, 1.2, 0.5), abs=5e-3)
    lower, upper = univariate.credible_interval_rstar(model, data, geom, 0.1)
    assert lower == pytest.approx(statmodels.exact_quantile_exponential(6, 1.2, 0.05), abs=1e-2)
    assert upper == pytest.approx(statmodels.exact_quantile_exponential(6, 1.2, 0.95), rel=1e-2)
    with pytest.raises(DomainError):
        univariate.credible_interval_rstar(model, data, geom, 1.5)


def test_ho_density_tracks_exact(exponential6):
    model, data, geom = exponential6
    grid = np.array([0.8, 1.1, 1.4, 2.0])
    np.testing.assert_allclose(
        univariate.ho_density(model, data, geom, grid),
        statmodels.exact_density_exponential(6, 1.2, grid),
        rtol=3e-2,
    )


def test_wald_reduces_to_io_for_scalar(exponential6):
    model, data, geom = exponential6
    wald = univariate.bdm_wald_multi(geom, [0.9])
    assert wald.method == "wald"
    assert wald.delta == pytest.approx(univariate.bdm_io(geom, 0.9).delta, abs=1e-12)
    lr = univariate.bdm_wald_multi(geom, [0.9], use_loglik_ratio=True, model=model, data=data)
    assert lr.method == "lr"
    assert lr.delta == pytest.approx(0.5408, abs=1e-3)


def test_wald_validates_inputs(cushings):
    model, data, geom = cushings
    with pytest.raises(DimensionError):
        univariate.bdm_wald_multi(geom, [0.0, 0.0], indices=[1])
    with pytest.raises(DomainError):
        univariate.bdm_wald_multi(geom, [0.0], indices=[5])
    with pytest.raises(DomainError):
        univariate.bdm_wald_multi(geom, [0.0, 0.0, 0.0], use_loglik_ratio=True)


def test_joint_logistic_measures(cushings):
    model, data, geom = cushings
    wald = univariate.bdm_wald_multi(geom, [0.0, 0.0], indices=[1, 2])
    lr = univariate.bdm_wald_multi(geom, [0.0, 0.0], use_loglik_ratio=True, model=model, data=data, indices=[1, 2])
    assert wald.diagnostics["df"] == 2
    assert 0.0 <= wald.delta <= 1.0
    assert 0.0 <= lr.delta <= 1.0


def test_profile_measures(cushings):
    model, data, geom = cushings
    io = univariate.bdm_io_profile(model, data, geom, 1, 0.0)
    assert io.diagnostics["profile_info_rel_diff"] < 1e-3
    ho = univariate.bdm_ho_profile(model, data, geom, 1, 0.0)
    assert 0.0 <= ho.delta <= 1.0
    stat = univariate.rstar_profile(model, data, geom, 2, 0.0)
    assert np.isfinite(stat.value)
    with pytest.raises(DimensionError):
        univariate.bdm_io_profile(model, data, geom, 3, 0.0)


def test_profile_median_within_interval(cushings):
    model, data, geom = cushings
    median = univariate.posterior_median_rstar(model, data, geom, psi_index=1)
    lower, upper = univariate.credible_interval_rstar(model, data, geom, 0.05, psi_index=1)
    assert lower < median < upper


def test_ho_is_invariant_under_log_reparameterization():
    theta_model, theta_data = statmodels.exponential_model(6, 1.2)
    log_model, log_data = statmodels.exponential_model(6, 1.2, parameterization="log")
    theta_geom = statmodels.fit_geometry(theta_model, theta_data)
    log_geom = statmodels.fit_geometry(log_model, log_data)
    for theta0 in (0.3, 0.6, 0.9, 1.5, 1.8, 2.4):
        on_theta = univariate.bdm_ho(theta_model, theta_data, theta_geom, theta0).delta
        on_log = univariate.bdm_ho(log_model, log_data, log_geom, float(np.log(theta0))).delta
        assert on_log == pytest.approx(on_theta, abs=1e-6)


@pytest.mark.parametrize("n", SAMPLE_SIZES)
def test_ho_tracks_exact_off_the_mle(n):
    model, data = statmodels.exponential_model(n, 1.2)
    geom = statmodels.fit_geometry(model, data)
    for theta0 in THETA0_GRID:
        if theta0 == 1.2:
            continue
        ho = univariate.bdm_ho(model, data, geom, theta0).delta
        assert abs(ho - statmodels.exact_bdm_exponential(n, 1.2, theta0).delta) <= 0.005


def _decreases_then_increases(values, tol=1e-9):
    values = np.asarray(values)
    k = int(np.argmin(values))
    return bool(np.all(np.diff(values[: k + 1]) <= tol) and np.all(np.diff(values[k:]) >= -tol))


def test_measures_grow_with_distance_from_their_minimum():
    grid = np.arange(0.35, 2.4, 0.1)
    rows = get_table_service().compute_block(6, 1.2, grid)
    for method in ("io", "ho", "sks", "sks-num", "sn", "exact"):
        values = [row[method] for row in rows]
        assert _decreases_then_increases(values), method
