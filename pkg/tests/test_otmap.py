import numpy as np
import pytest
from scipy import stats
from app.exceptions import DomainError
from app.models.skew import SnParams
from app.services import otmap, snmatch
from app.services.check_service import aligned_sn, random_sn
from app.services.specialfn import chi2_cdf


def test_univariate_map_reduces_to_skew_normal_measure():
    params = SnParams(xi=[0.3], omega=[[1.7]], alpha=[2.5])
    for construction in otmap.CONSTRUCTIONS:
        ot = otmap.build_ot(params, construction)
        for theta0 in (-2.0, 0.0, 0.9, 4.0):
            multi = otmap.bdm_sn_multi(params, [theta0], ot).delta
            assert multi == pytest.approx(snmatch.bdm_sn_univariate(params, theta0).delta, abs=1e-10)


def test_rotation_is_orthogonal_and_aligned():
    params = random_sn(np.random.default_rng(1), 3)
    ot = otmap.build_ot(params, "rotation")
    np.testing.assert_allclose(ot.Q.T @ ot.Q, np.eye(3), atol=1e-12)
    direction = params.slant / np.linalg.norm(params.slant)
    np.testing.assert_allclose(ot.Q[:, 0], direction, atol=1e-12)


def test_whitened_map_rotates_whitened_slant():
    params = random_sn(np.random.default_rng(1), 3)
    ot = otmap.build_ot(params)
    assert ot.construction == "whitened"
    np.testing.assert_allclose(ot.W @ params.omega @ ot.W, np.eye(3), atol=1e-10)
    gamma = np.linalg.solve(ot.W, params.slant)
    np.testing.assert_allclose(ot.Q[:, 0], gamma / np.linalg.norm(gamma), atol=1e-12)
    assert ot.shape1 == pytest.approx(np.linalg.norm(gamma))
    assert ot.omega1_sq == 1.0


def test_unknown_construction_is_rejected():
    with pytest.raises(DomainError):
        otmap.build_ot(aligned_sn(), "householder")


@pytest.mark.parametrize("construction", otmap.CONSTRUCTIONS)
def test_inverse_and_center(construction):
    params = random_sn(np.random.default_rng(2), 3)
    ot = otmap.build_ot(params, construction)
    x = params.mean + np.array([0.4, -0.7, 0.2])
    np.testing.assert_allclose(otmap.ot_inverse(ot, params, otmap.ot_apply(ot, params, x)), x, atol=1e-8)
    center = otmap.ot_center(ot, params)
    np.testing.assert_allclose(otmap.ot_apply(ot, params, center), 0.0, atol=1e-8)
    assert otmap.bdm_sn_multi(params, center, ot).delta == pytest.approx(0.0, abs=1e-12)


def test_constructions_agree_when_slant_is_an_eigenvector():
    params = aligned_sn()
    whitened = otmap.build_ot(params, "whitened")
    rotation = otmap.build_ot(params, "rotation")
    for theta0 in ([0.0, 0.0, 0.0], [1.5, -2.0, 2.5], [3.0, 1.0, 1.0]):
        assert otmap.bdm_sn_multi(params, theta0, whitened).delta == pytest.approx(
            otmap.bdm_sn_multi(params, theta0, rotation).delta, abs=1e-8
        )


def test_symmetric_measure_is_rotation_invariant():
    rng = np.random.default_rng(4)
    params = SnParams(xi=[0.5, -1.0, 2.0], omega=[[2.0, 0.5, 0.0], [0.5, 1.5, 0.3], [0.0, 0.3, 1.0]], alpha=[0.0] * 3)
    R = stats.special_ortho_group.rvs(3, random_state=rng)
    rotated = SnParams(xi=R @ params.xi, omega=R @ params.omega @ R.T, alpha=[0.0] * 3)
    for theta0 in rng.normal(size=(5, 3)) * 2.0:
        delta = otmap.bdm_sn_multi(params, theta0).delta
        assert otmap.bdm_sn_multi(rotated, R @ theta0).delta == pytest.approx(delta, abs=1e-10)
        resid = theta0 - params.xi
        assert delta == pytest.approx(chi2_cdf(float(resid @ np.linalg.solve(params.omega, resid)), 3), abs=1e-10)


def test_univariate_map_is_strictly_increasing():
    params = SnParams(xi=[0.0], omega=[[1.0]], alpha=[4.08])
    x = np.linspace(-8.0, 8.0, 1000)
    u = otmap.ot_apply(otmap.build_ot(params), params, x)[:, 0]
    assert np.all(np.isfinite(u))
    assert np.all(np.diff(u) > 0.0)


def test_central_regions_are_nested():
    params = aligned_sn()
    ot = otmap.build_ot(params)
    center = otmap.ot_center(ot, params)
    far = center + 10.0 * np.sqrt(np.diag(params.omega))
    assert otmap.in_central_region(ot, params, center, 0.1)
    assert not otmap.in_central_region(ot, params, far, 0.99)
    with pytest.raises(DomainError):
        otmap.in_central_region(ot, params, center, 1.0)


def test_measure_validates_dimension():
    with pytest.raises(DomainError):
        otmap.bdm_sn_multi(aligned_sn(), [0.0, 0.0])


def test_pushforward_requires_enough_draws():
    with pytest.raises(DomainError):
        otmap.pushforward_diagnostic(aligned_sn(), n_draws=500)


def test_map_document_records_construction():
    document = otmap.build_ot(aligned_sn()).to_dict()
    assert document["construction"] == "whitened"
    assert np.asarray(document["W"]).shape == (3, 3)


@pytest.mark.slow
def test_pushforward_of_aligned_skew_normal_is_standard_normal():
    report = otmap.pushforward_diagnostic(aligned_sn(), n_draws=200_000, seed=7, check_stability=True)
    assert report.passes()
    assert report.stable
    assert report.saturated == 0


@pytest.mark.slow
def test_pushforward_of_logistic_skew_normal_is_standard_normal(cushings_sn):
    report = otmap.pushforward_diagnostic(cushings_sn, n_draws=200_000, seed=7)
    assert report.passes()
    assert report.max_abs_skewness < 0.03


@pytest.mark.slow
def test_logistic_joint_measure(cushings_sn):
    params = snmatch.sn_marginal(cushings_sn, [1, 2])
    result = otmap.bdm_sn_multi(params, [0.0, 0.0])
    assert result.delta == pytest.approx(0.911, abs=0.01)
    assert result.diagnostics["norm"] >= 0.0
