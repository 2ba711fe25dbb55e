import numpy as np
import pytest

from mixshare import oco
from mixshare.core import DomainSpec
from mixshare.forecasters import GaussianMixture
from mixshare.gaussian import LOG_2PI


def _single_component(mean, cov):
    return GaussianMixture(np.zeros(1), np.asarray(mean)[None, :], np.asarray(cov)[None, :, :])


def test_surrogate_zero_at_reference():
    f = oco.make_surrogate(np.array([1.0, -2.0]), np.array([0.3, 0.4]), gamma=0.1)
    assert f(np.array([0.3, 0.4])) == pytest.approx(0.0)


def test_surrogate_value():
    f = oco.make_surrogate(np.array([2.0]), np.array([0.0]), gamma=0.5)
    # s = 2w; f = s + 0.25 s^2
    assert f(np.array([1.0])) == pytest.approx(2.0 + 0.25 * 4.0)


def test_surrogate_rejects_nonpositive_gamma():
    with pytest.raises(ValueError):
        oco.make_surrogate(np.ones(1), np.zeros(1), gamma=0.0)


def test_init_gamma_is_strictest_condition():
    dom = DomainSpec(2, 1.0)
    s = oco.init_oco(dom, horizon=100, eta=10.0, G=1.0)
    assert s.gamma == pytest.approx(1.0 / (8.0 * 1.0 * 2.0))
    s = oco.init_oco(dom, horizon=100, eta=0.01, G=1.0)
    assert s.gamma == pytest.approx(0.005)


def test_tilt_isotropic_component_precision_gain():
    # single N(0, I), g = e1: only the (1,1) precision entry changes, by gamma^2/2
    gamma = 0.2
    mix = oco.MixtureInM(_single_component(np.zeros(2), np.eye(2)), horizon=10)
    f = oco.make_surrogate(np.array([1.0, 0.0]), np.zeros(2), gamma)
    out = oco.ew_update_surrogate(mix, f)
    prec = np.linalg.inv(out.covs[0])
    want = np.eye(2)
    want[0, 0] += gamma * gamma / 2.0
    assert np.allclose(prec, want, atol=1e-12)


def test_tilt_zero_gradient_is_identity():
    mix = oco.MixtureInM(_single_component(np.array([0.1, -0.2]), 0.5 * np.eye(2)), horizon=10)
    f = oco.make_surrogate(np.zeros(2), np.zeros(2), gamma=0.3)
    out = oco.ew_update_surrogate(mix, f)
    assert np.allclose(out.means, mix.mixture.means)
    assert np.allclose(out.covs, mix.mixture.covs)


def test_tilt_matches_normalized_product_density():
    # tilted component equals prior * exp(-gamma f~ / 2) / Z, Z from 2-D grid
    rng = np.random.default_rng(40)
    gamma = 0.15
    mean = np.array([0.2, -0.1])
    cov = np.array([[0.8, 0.2], [0.2, 0.5]])
    g = np.array([0.7, -1.1])
    w_ref = np.array([0.05, 0.1])
    mix = oco.MixtureInM(_single_component(mean, cov), horizon=10)
    f = oco.make_surrogate(g, w_ref, gamma)
    out = oco.ew_update_surrogate(mix, f)

    n = 601
    grid = np.linspace(-5, 5, n)
    W1, W2 = np.meshgrid(grid, grid, indexing="ij")
    pts = np.stack([W1.ravel(), W2.ravel()], axis=1)
    prior = np.exp(oco.log_density(mix.mixture, pts))
    tilt = np.exp(-0.5 * gamma * f(pts))
    dens = prior * tilt
    dz = grid[1] - grid[0]
    dens /= dens.sum() * dz * dz

    idx = rng.choice(n * n, size=100, replace=False)
    closed = np.exp(oco.log_density(out, pts[idx]))
    mask = dens[idx] > 1e-12  # skip far-tail points where the grid underflows
    assert np.all(np.abs(closed[mask] / dens[idx][mask] - 1.0) < 1e-3)


def test_tilt_weights_stay_normalized():
    rng = np.random.default_rng(41)
    k, d = 4, 3
    w = rng.dirichlet(np.ones(k))
    covs = np.stack([np.diag(rng.uniform(0.2, 1.0, d)) for _ in range(k)])
    mix = oco.MixtureInM(GaussianMixture(np.log(w), 0.1 * rng.standard_normal((k, d)), covs), horizon=10)
    f = oco.make_surrogate(rng.standard_normal(d), np.zeros(d), gamma=0.1)
    out = oco.ew_update_surrogate(mix, f)
    assert np.sum(out.weights) == pytest.approx(1.0, abs=1e-12)


def test_projection_clamps_eigenvalues_and_means():
    dom = DomainSpec(2, 1.0)
    T = 10
    mix = GaussianMixture(
        np.zeros(1),
        np.array([[3.0, 0.0]]),
        np.array([[[5.0, 0.0], [0.0, 0.001]]]),
    )
    out = oco.approx_project_to_M(mix, dom, T)
    assert np.linalg.norm(out.mixture.means[0]) == pytest.approx(1.0)
    eigs = np.linalg.eigvalsh(out.mixture.covs[0])
    assert eigs[0] == pytest.approx(1.0 / T)
    assert eigs[1] == pytest.approx(1.0)


def test_projection_is_identity_inside_constraints():
    dom = DomainSpec(2, 1.0)
    mix = GaussianMixture(np.zeros(1), np.array([[0.2, 0.1]]), np.array([[[0.5, 0.0], [0.0, 0.3]]]))
    out = oco.approx_project_to_M(mix, dom, T=10)
    assert np.allclose(out.mixture.means, mix.means)
    assert np.allclose(out.mixture.covs, mix.covs)


def test_fixed_share_anchor_weights():
    mix = oco.MixtureInM(_single_component(np.array([0.3, 0.0]), 0.5 * np.eye(2)), horizon=10)
    out = oco.fixed_share_anchor(mix, 0.1, np.zeros(2))
    assert out.mixture.weights == pytest.approx([0.9, 0.1])
    assert np.allclose(out.mixture.means[-1], 0.0)
    assert np.allclose(out.mixture.covs[-1], np.eye(2))


def test_fixed_share_anchor_degenerate_mu():
    mix = oco.MixtureInM(_single_component(np.array([0.3, 0.0]), 0.5 * np.eye(2)), horizon=10)
    assert oco.fixed_share_anchor(mix, 0.0, np.zeros(2)) is mix
    full = oco.fixed_share_anchor(mix, 1.0, np.zeros(2))
    assert full.mixture.means.shape == (1, 2)
    assert np.allclose(full.mixture.means[0], 0.0)


def test_validate_rejects_violations():
    dom = DomainSpec(2, 1.0)
    bad_mean = oco.MixtureInM(_single_component(np.array([2.0, 0.0]), 0.5 * np.eye(2)), horizon=10)
    with pytest.raises(oco.ConstraintViolationError):
        bad_mean.validate(dom)
    bad_eig = oco.MixtureInM(_single_component(np.zeros(2), 3.0 * np.eye(2)), horizon=10)
    with pytest.raises(oco.ConstraintViolationError):
        bad_eig.validate(dom)


def test_oco_round_preserves_membership():
    rng = np.random.default_rng(42)
    dom = DomainSpec(3, 1.0)
    T = 30
    s = oco.init_oco(dom, T, eta=1.0 / dom.diameter**2, G=2.0 * dom.R)
    for _ in range(T):
        c = dom.project(rng.standard_normal(3))
        w_t, s = oco.oco_round(s, lambda w: w - c)
        assert dom.contains(w_t, tol=1e-9)
        s.mixture.validate(dom)
    assert s.mixture.mixture.means.shape[0] == T + 1


def test_oco_round_rejects_oversized_gradient():
    dom = DomainSpec(2, 1.0)
    s = oco.init_oco(dom, 10, eta=0.25, G=1.0)
    with pytest.raises(ValueError):
        oco.oco_round(s, lambda w: np.array([5.0, 0.0]))


def test_surrogate_upper_bounds_loss_difference():
    # f(w_t) - f(u) <= f~(w_t) - f~(u) for the quadratic task each round
    rng = np.random.default_rng(43)
    dom = DomainSpec(2, 1.0)
    T = 50
    G = 2.0 * dom.R
    s = oco.init_oco(dom, T, eta=1.0 / dom.diameter**2, G=G)
    for _ in range(T):
        c = dom.project(rng.standard_normal(2))
        w_t = oco.predict_mean(s)
        f = oco.make_surrogate(w_t - c, w_t, s.gamma)
        for _ in range(20):
            u = dom.project(rng.standard_normal(2))
            lhs = 0.5 * np.sum((w_t - c) ** 2) - 0.5 * np.sum((u - c) ** 2)
            rhs = f(w_t) - f(u)
            assert lhs <= rhs + 1e-10
        _, s = oco.oco_round(s, lambda w: w - c)


def test_log_density_matches_scipy_mixture():
    from scipy.stats import multivariate_normal

    rng = np.random.default_rng(44)
    k, d = 3, 2
    w = rng.dirichlet(np.ones(k))
    means = rng.standard_normal((k, d))
    covs = np.stack([np.diag(rng.uniform(0.2, 1.0, d)) for _ in range(k)])
    mix = GaussianMixture(np.log(w), means, covs)
    pts = rng.standard_normal((50, d))
    want = np.zeros(50)
    for i in range(k):
        want += w[i] * multivariate_normal.pdf(pts, means[i], covs[i])
    assert np.allclose(np.exp(oco.log_density(mix, pts)), want, rtol=1e-10)


def test_density_bound_along_run():
    rng = np.random.default_rng(45)
    dom = DomainSpec(2, 1.0)
    T = 40
    s = oco.init_oco(dom, T, eta=1.0 / dom.diameter**2, G=2.0 * dom.R)
    bound = 0.5 * dom.d * (np.log(T) - LOG_2PI)
    for _ in range(T):
        c = dom.project(rng.standard_normal(2))
        _, s = oco.oco_round(s, lambda w: w - c)
        pts = rng.uniform(-1.5, 1.5, size=(200, 2))
        assert np.max(oco.log_density(s.mixture.mixture, pts)) <= bound + 1e-9
