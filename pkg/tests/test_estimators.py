"""Estimator and loss-functional tests."""

import numpy as np
import pytest

from randesign import estimators, matcore
from randesign import population as pop
from randesign.errors import SingularMatrixError
from randesign.rngstream import derive_stream


def make_sample(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return pop.Sample(x=x, y=y, noise=np.zeros(len(y)), bias=np.zeros(len(y)))


def gaussian_model(d=3, sigma=1.0, seed_beta=0):
    rng = np.random.default_rng(seed_beta)
    design = pop.DesignSpec(kind=pop.GAUSSIAN, covariance=np.eye(d))
    return pop.PopulationModel(
        design=design, beta=rng.standard_normal(d),
        noise=pop.NoiseSpec(kind="gaussian", sigma=sigma),
    )


def test_ols_exact_interpolation():
    fit = estimators.ols_fit(make_sample(np.eye(2), [3.0, 5.0]))
    assert np.allclose(fit.coefficients, [3.0, 5.0], atol=1e-12)


def test_ols_recovers_beta_noise_free():
    model = gaussian_model(sigma=0.0)
    s = pop.sample(model, 50, derive_stream(0, 0))
    fit = estimators.ols_fit(s)
    assert np.allclose(fit.coefficients, model.beta, atol=1e-8)
    assert estimators.excess_loss(fit.coefficients, model) <= 1e-12


def test_ols_matches_direct_inverse():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    fit = estimators.ols_fit(make_sample(x, y))
    oracle = np.linalg.solve(x.T @ x / 20, x.T @ y / 20)
    assert np.allclose(fit.coefficients, oracle, atol=1e-10)


def test_ols_singular_raises():
    with pytest.raises(SingularMatrixError):
        estimators.ols_fit(make_sample([[1.0, 0.0]], [1.0]))


def test_normal_equation_residual_contract():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((40, 4))
    y = rng.standard_normal(40)
    s = make_sample(x, y)
    for lam in (0.0, 0.1, 5.0):
        fit = estimators.ridge_fit(s, lam)
        assert fit.normal_equation_residual(x.T @ y / 40) <= 1e-8


def test_ridge_single_point_hand_value():
    s = make_sample([[1.0, 0.0]], [1.0])
    fit = estimators.ridge_fit(s, 1.0)
    assert np.allclose(fit.coefficients, [0.5, 0.0], atol=1e-12)


def test_ridge_shrinks_monotonically():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((30, 3))
    y = rng.standard_normal(30)
    s = make_sample(x, y)
    norms = [np.linalg.norm(estimators.ridge_fit(s, lam).coefficients)
             for lam in (1.0, 10.0, 100.0)]
    assert norms[0] > norms[1] > norms[2]


def test_ridge_tiny_lambda_matches_ols():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((50, 3))
    y = rng.standard_normal(50)
    s = make_sample(x, y)
    a = estimators.ridge_fit(s, 1e-12).coefficients
    b = estimators.ols_fit(s).coefficients
    assert np.allclose(a, b, atol=1e-6)


def test_conditional_mean_lambda_zero_returns_beta():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((30, 3))
    beta = np.array([1.0, -2.0, 0.5])
    assert np.allclose(estimators.ridge_conditional_mean(x, beta, 0.0), beta,
                       atol=1e-10)


def test_conditional_mean_orthonormal_shrinkage():
    x = np.sqrt(3.0) * np.eye(3)  # Sigma-hat = I exactly
    beta = np.array([1.0, 2.0, -1.0])
    lam = 0.5
    got = estimators.ridge_conditional_mean(x, beta, lam)
    assert np.allclose(got, beta / (1.0 + lam), atol=1e-12)


def test_excess_loss_direct_values():
    model = gaussian_model()
    assert estimators.excess_loss(model.beta, model) == 0.0
    w = model.beta + np.array([0.1, 0.0, 0.0])
    assert estimators.excess_loss(w, model) == pytest.approx(0.01)


def test_excess_loss_matches_atom_sum_mse():
    """Excess loss equals the exact population MSE gap on a discrete model."""
    atoms = np.array([[1.0, 0.2], [-0.5, 1.0], [0.4, -1.3]])
    design = pop.DesignSpec(kind=pop.DISCRETE, atoms=atoms, weights=[0.5, 0.3, 0.2])
    bias = pop.orthogonalize_bias(design, {"kind": "norm-squared"})
    model = pop.PopulationModel(design=design, beta=[0.8, -0.4],
                                noise=pop.NoiseSpec(kind="gaussian", sigma=0.3),
                                bias=bias)
    w = np.array([0.5, 0.1])

    def population_mse(v):
        resid = atoms @ model.beta + bias.atom_values - atoms @ v
        return design.expect(resid**2) + model.noise.sigma**2

    gap = population_mse(w) - population_mse(model.beta)
    assert estimators.excess_loss(w, model) == pytest.approx(gap, abs=1e-10)


def test_fixed_design_risk_values():
    x = np.vstack([np.eye(4)] * 25)  # n=100, Sigma-hat = I/... any invertible
    assert estimators.fixed_design_risk(x, 1.0) == pytest.approx(0.04)
    assert estimators.fixed_design_risk(x, 0.0) == 0.0
    assert estimators.fixed_design_highprob(x, 1.0, np.exp(-1)) == pytest.approx(0.10)


def test_fixed_ridge_risk_hand_value():
    bias, var = estimators.fixed_ridge_risk([1.0], [1.0], 1.0, 1.0, 10)
    assert bias == pytest.approx(0.25)
    assert var == pytest.approx(0.025)
    bias0, _ = estimators.fixed_ridge_risk([1.0, 2.0], [0.0, 0.0], 0.5, 1.0, 10)
    assert bias0 == 0.0


def test_fixed_ridge_risk_monte_carlo():
    """Fixed scalar design, Sigma-hat = 1: mean ridge excess = 0.275 at
    lambda = sigma = 1, n = 10."""
    n, lam, trials = 10, 1.0, 10**5
    rng = derive_stream(7, 0)
    noise_means = rng.standard_normal((trials, n)).mean(axis=1)
    realized = ((1.0 + noise_means) / (1.0 + lam) - 1.0) ** 2
    expected = sum(estimators.fixed_ridge_risk([1.0], [1.0], lam, 1.0, n))
    se = realized.std() / np.sqrt(trials)
    assert abs(realized.mean() - expected) <= 3 * se


def test_fixed_ridge_identity_exact_algebra():
    """Analytic trace expectation equals the bias+variance formula when the
    population and empirical second moments coincide."""
    rng = np.random.default_rng(11)
    for _ in range(10):
        d = int(rng.integers(1, 6))
        vals = np.sort(rng.uniform(0.1, 3.0, size=d))[::-1]
        beta = rng.standard_normal(d)
        lam = float(rng.uniform(0.05, 2.0))
        sigma_sq = float(rng.uniform(0.0, 2.0))
        n = int(rng.integers(5, 100))
        sig = np.diag(vals)
        sig_lam_inv = np.diag(1.0 / (vals + lam))
        bias_vec = sig_lam_inv @ sig @ beta - beta
        bias_direct = float(bias_vec @ sig @ bias_vec)
        var_direct = sigma_sq / n * np.trace(sig_lam_inv @ sig @ sig_lam_inv @ sig)
        bias_term, var_term = estimators.fixed_ridge_risk(vals, beta, lam, sigma_sq, n)
        assert bias_direct == pytest.approx(bias_term, abs=1e-10)
        assert var_direct == pytest.approx(var_term, abs=1e-10)
