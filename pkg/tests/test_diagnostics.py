"""Decomposition and matrix-error inequality checks on realized samples."""

import numpy as np
import pytest

from randesign import diagnostics, matcore
from randesign import population as pop
from randesign.errors import BoundInapplicableError
from randesign.rngstream import derive_stream


def gaussian_model(d=2, sigma=1.0):
    design = pop.DesignSpec(kind=pop.GAUSSIAN, covariance=np.eye(d))
    return pop.PopulationModel(
        design=design, beta=np.linspace(1.0, -1.0, d),
        noise=pop.NoiseSpec(kind="gaussian", sigma=sigma),
    )


def discrete_misspecified():
    atoms = np.array([[1.0, 0.2], [-0.5, 1.0], [0.4, -1.3]])
    design = pop.DesignSpec(kind=pop.DISCRETE, atoms=atoms, weights=[0.5, 0.3, 0.2])
    bias = pop.orthogonalize_bias(design, {"kind": "norm-squared"})
    return pop.PopulationModel(design=design, beta=[0.8, -0.4],
                               noise=pop.NoiseSpec(kind="gaussian", sigma=0.3),
                               bias=bias)


def test_delta_lambda_zero_for_equal_matrices():
    sigma = np.diag([2.0, 1.0])
    mat, spec, frob = diagnostics.delta_lambda(sigma, sigma, 0.5)
    assert np.allclose(mat, 0.0)
    assert spec == 0.0 and frob == 0.0


def test_delta_lambda_hand_value():
    mat, spec, frob = diagnostics.delta_lambda(np.eye(2), np.diag([0.5, 1.5]), 1.0)
    assert np.allclose(mat, np.diag([-0.25, 0.25]), atol=1e-12)
    assert spec == pytest.approx(0.25)


def test_delta_lambda_frobenius_elementwise_oracle():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 3))
    sigma = a @ a.T + np.eye(3)
    sigma_hat = sigma + 0.1 * matcore.symmetrize(rng.standard_normal((3, 3)))
    mat, _, frob = diagnostics.delta_lambda(sigma, sigma_hat, 0.3)
    assert frob**2 == pytest.approx(float(np.sum(mat**2)), rel=1e-12)


def test_ols_decomposition_zero_noise_both_sides_zero():
    model = gaussian_model(sigma=0.0)
    s = pop.sample(model, 40, derive_stream(0, 0))
    chk = diagnostics.check_ols_decomposition(s, model)
    assert chk.lhs == pytest.approx(0.0, abs=1e-20)
    assert chk.rhs == pytest.approx(0.0, abs=1e-20)


def test_ols_decomposition_equality_correct_model():
    model = gaussian_model(d=2, sigma=1.0)
    s = pop.sample(model, 50, derive_stream(1, 0))
    chk = diagnostics.check_ols_decomposition(s, model)
    assert chk.relation == diagnostics.EQUALITY
    assert abs(chk.slack) <= 1e-9 * chk.scale


def test_ols_decomposition_factorized_chain():
    model = gaussian_model(d=3, sigma=1.0)
    for i in range(10):
        s = pop.sample(model, 60, derive_stream(2, i))
        chk = diagnostics.check_ols_decomposition(s, model)
        assert chk.components["factorized_bound"] >= chk.lhs * (1 - 1e-10)


def test_ols_decomposition_misspecified_inequalities():
    model = discrete_misspecified()
    s = pop.sample(model, 500, derive_stream(3, 0))
    chk = diagnostics.check_ols_decomposition(s, model)
    assert chk.relation == diagnostics.UPPER_BOUND
    assert chk.passed
    assert chk.components["triangle_slack"] >= -1e-10


def test_ridge_decomposition_zero_noise_third_norm_zero():
    model = discrete_misspecified()
    noiseless = pop.PopulationModel(design=model.design, beta=model.beta,
                                    noise=pop.NoiseSpec(kind="zero"),
                                    bias=model.bias)
    s = pop.sample(noiseless, 200, derive_stream(4, 0))
    chk = diagnostics.check_ridge_decomposition(s, noiseless, 0.2)
    assert chk.components["third"] == pytest.approx(0.0, abs=1e-12)


def test_ridge_decomposition_small_lambda_first_two_vanish():
    model = gaussian_model(d=2, sigma=0.5)
    s = pop.sample(model, 200, derive_stream(5, 0))
    chk = diagnostics.check_ridge_decomposition(s, model, 1e-10)
    assert chk.components["first"] <= 1e-9
    assert chk.components["second"] <= 1e-7


def test_ridge_decomposition_inequalities():
    model = discrete_misspecified()
    s = pop.sample(model, 500, derive_stream(6, 0))
    chk = diagnostics.check_ridge_decomposition(s, model, 0.2)
    assert chk.passed
    assert chk.components["triangle_slack"] >= -1e-10


def test_weyl_trivial_and_tight():
    assert diagnostics.check_weyl(np.eye(2), np.eye(2), 0.5).lhs == pytest.approx(1.0)
    chk = diagnostics.check_weyl(np.eye(2), np.diag([0.5, 1.5]), 1.0)
    assert chk.lhs == pytest.approx(4.0 / 3.0)
    assert chk.rhs == pytest.approx(4.0 / 3.0)  # tight for commuting extremes
    assert chk.passed


def test_weyl_rejects_large_error():
    with pytest.raises(BoundInapplicableError):
        diagnostics.check_weyl(np.eye(2), 5.0 * np.eye(2), 0.1)


def test_weyl_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(100):
        d = int(rng.integers(2, 5))
        a = rng.standard_normal((d, d))
        sigma = a @ a.T + 0.5 * np.eye(d)
        pert = 0.2 * matcore.symmetrize(rng.standard_normal((d, d)))
        sigma_hat = sigma + pert
        lam = float(rng.uniform(0.1, 1.0))
        _, spec, _ = diagnostics.delta_lambda(sigma, sigma_hat, lam)
        if spec >= 0.9 or matcore.sym_eig(sigma_hat).lambda_min <= 0:
            continue
        assert diagnostics.check_weyl(sigma, sigma_hat, lam).passed


def test_third_term_matrix_population_case():
    """Sigma-hat == Sigma gives tr(M) = d2/n exactly."""
    atoms = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    x = np.vstack([atoms] * 25)  # n=100, Sigma-hat = I/2
    sigma = matcore.empirical_second_moment(x)
    lam = 0.25
    m, trace_chk, spec_chk = diagnostics.third_term_matrix(x, sigma, lam)
    vals = matcore.sym_eig(sigma).eigenvalues
    d2 = float(np.sum((vals / (vals + lam)) ** 2))
    assert trace_chk.lhs == pytest.approx(d2 / 100, rel=1e-10)
    assert trace_chk.passed and spec_chk.passed


def test_third_term_matrix_noise_independent():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((100, 3))
    sigma = np.eye(3)
    m1, _, _ = diagnostics.third_term_matrix(x, sigma, 0.2)
    m2, _, _ = diagnostics.third_term_matrix(x, sigma, 0.2)
    assert np.array_equal(m1, m2)  # depends on covariates only


def test_third_term_matrix_random_samples():
    rng = np.random.default_rng(9)
    for i in range(20):
        x = rng.standard_normal((100, 3))
        m, trace_chk, spec_chk = diagnostics.third_term_matrix(x, np.eye(3), 0.3)
        assert trace_chk.passed and spec_chk.passed
        # trace equals eigen-sum oracle
        assert trace_chk.lhs == pytest.approx(
            float(np.sum(np.linalg.eigvalsh(m))), abs=1e-12)


def test_leverage_profile_orthonormal_scaled():
    d = 3
    atoms = np.sqrt(d) * np.eye(d)
    profile = diagnostics.leverage_profile(atoms, np.eye(d), lam_grid=(0.0,))
    assert profile[0.0]["max"] == pytest.approx(1.0)
    assert profile[0.0]["mean"] == pytest.approx(1.0)


def test_leverage_profile_matches_model_constants():
    atoms = np.array([[1.0, 0.2], [-0.5, 1.0], [0.4, -1.3]])
    design = pop.DesignSpec(kind=pop.DISCRETE, atoms=atoms, weights=[0.5, 0.3, 0.2])
    model = pop.PopulationModel(design=design, beta=[0.0, 0.0])
    consts = pop.model_constants(model)
    profile = diagnostics.leverage_profile(atoms, design.second_moment(),
                                           lam_grid=(0.0,))
    assert profile[0.0]["max"] == pytest.approx(consts.rho_2cov, rel=1e-12)


def test_leverage_profile_gaussian_sample_finite():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((1000, 5))
    profile = diagnostics.leverage_profile(x, np.eye(5), lam_grid=(0.0, 0.5))
    for stats in profile.values():
        assert np.isfinite(stats["max"])
        assert stats["histogram"][0].sum() == 1000
