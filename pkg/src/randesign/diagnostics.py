"""Numerical verification of the exact estimator decompositions and the
matrix-error inequalities on realized samples.

Every check returns a DecompositionCheck with the left side, the named right
side components, and the slack, so experiment records can carry the raw
numbers instead of a bare boolean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import estimators, matcore
from .errors import BoundInapplicableError, DomainError
from .population import PopulationModel, Sample, ridge_target

EQUALITY = "equality"
UPPER_BOUND = "<="

#: Relative slack tolerance for declaring a check passed.
CHECK_TOL = 1e-8


@dataclass(frozen=True)
class DecompositionCheck:
    """One verified identity or inequality: lhs (relation) rhs."""

    name: str
    lhs: float
    rhs: float
    relation: str
    components: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def scale(self) -> float:
        return max(abs(self.lhs), abs(self.rhs), 1e-30)

    @property
    def passed(self) -> bool:
        if self.relation == EQUALITY:
            return abs(self.slack) <= CHECK_TOL * self.scale
        return self.slack >= -CHECK_TOL * self.scale


def delta_lambda(sigma: np.ndarray, sigma_hat: np.ndarray, lam: float):
    """Whitened estimation error Sigma_lam^{-1/2}(Sigma-hat - Sigma)Sigma_lam^{-1/2}.

    Returns (matrix, spectral norm, Frobenius norm).
    """
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    sigma = matcore.symmetrize(sigma)
    sigma_hat = matcore.symmetrize(sigma_hat)
    if sigma.shape != sigma_hat.shape:
        raise DomainError(
            f"shape mismatch: {sigma.shape} vs {sigma_hat.shape}"
        )
    root = matcore.inv_sqrt(matcore.regularize(sigma, lam))
    delta = matcore.symmetrize(root @ (sigma_hat - sigma) @ root)
    return delta, matcore.spectral_norm(delta), float(np.linalg.norm(delta))


def _whitened_parts(sample: Sample, model: PopulationModel):
    """Empirical cross moments split by response source, plus Sigma-hat."""
    sig_hat = matcore.empirical_second_moment(sample.x)
    noise_mean = sample.x.T @ sample.noise / sample.n
    bias_mean = sample.x.T @ sample.bias / sample.n
    return sig_hat, noise_mean, bias_mean


def check_ols_decomposition(sample: Sample, model: PopulationModel) -> DecompositionCheck:
    """Verify the exact error decomposition of ordinary least squares.

    Bias-free models: ||beta-hat - beta||_Sigma^2 equals
    ||Sigma-hat^{-1} E-hat[X noise]||_Sigma^2 exactly.  Misspecified models:
    the triangle and 2(a^2+b^2) inequality forms.  In both cases the
    factorized chain through ||Sigma^{1/2} Sigma-hat^{-1} Sigma^{1/2}|| is
    recorded as a component.
    """
    sigma = model.second_moment()
    fit = estimators.ols_fit(sample)  # raises on singular Sigma-hat
    lhs_sq = estimators.excess_loss(fit.coefficients, model)
    sig_hat, noise_mean, bias_mean = _whitened_parts(sample, model)

    noise_part = matcore.solve_psd(sig_hat, noise_mean)
    a_noise = matcore.weighted_norm(noise_part, sigma)

    # factorized chain: ||E[Shat^{-1} X eps]||_Sigma^2
    #   <= ||S^{1/2} Shat^{-1} S^{1/2}|| * ||Shat^{-1/2} E[X eps]||^2
    root = matcore.sym_sqrt(sigma)
    inv_half_hat = matcore.inv_sqrt(sig_hat)
    k_realized = matcore.spectral_norm(root @ np.linalg.inv(sig_hat) @ root)
    whitened_sq = float(np.sum((inv_half_hat @ noise_mean) ** 2))
    factorized = k_realized * whitened_sq

    if model.bias.is_zero:
        return DecompositionCheck(
            name="ols-decomposition-correct",
            lhs=lhs_sq,
            rhs=a_noise**2,
            relation=EQUALITY,
            components={
                "noise_norm_sq": a_noise**2,
                "factorized_bound": factorized,
                "matrix_error_realized": k_realized,
            },
        )

    bias_part = matcore.solve_psd(sig_hat, bias_mean)
    a_bias = matcore.weighted_norm(bias_part, sigma)
    return DecompositionCheck(
        name="ols-decomposition-misspecified",
        lhs=lhs_sq,
        rhs=2.0 * (a_bias**2 + a_noise**2),
        relation=UPPER_BOUND,
        components={
            "approx_norm": a_bias,
            "noise_norm": a_noise,
            "triangle_rhs": a_bias + a_noise,
            "triangle_slack": (a_bias + a_noise) - np.sqrt(lhs_sq),
            "factorized_bound": factorized,
            "matrix_error_realized": k_realized,
        },
    )


def check_ridge_decomposition(sample: Sample, model: PopulationModel,
                              lam: float) -> DecompositionCheck:
    """Verify ||beta-hat_lam - beta||_Sigma <= a + b + c with
    a = ||beta_lam - beta||, b = ||beta-bar_lam - beta_lam||,
    c = ||beta-bar_lam - beta-hat_lam||, and the squared form 3(a^2+b^2+c^2).
    """
    if lam <= 0:
        raise DomainError(f"ridge level must be positive, got {lam}")
    sigma = model.second_moment()
    fit = estimators.ridge_fit(sample, lam)
    beta_lam = ridge_target(model, lam)
    # conditional mean of the ridge estimator given the covariates; for
    # misspecified models the recorded bias values enter E[Y | X]
    sig_hat = matcore.empirical_second_moment(sample.x)
    cond_mean_xy = sig_hat @ model.beta + sample.x.T @ sample.bias / sample.n
    beta_bar = matcore.solve_psd(matcore.regularize(sig_hat, lam), cond_mean_xy,
                                 floor=0.0 if lam > 0 else None)
    lhs = matcore.weighted_norm(fit.coefficients - model.beta, sigma)
    a = matcore.weighted_norm(beta_lam - model.beta, sigma)
    b = matcore.weighted_norm(beta_bar - beta_lam, sigma)
    c = matcore.weighted_norm(beta_bar - fit.coefficients, sigma)
    return DecompositionCheck(
        name="ridge-decomposition",
        lhs=lhs**2,
        rhs=3.0 * (a**2 + b**2 + c**2),
        relation=UPPER_BOUND,
        components={
            "first": a,
            "second": b,
            "third": c,
            "triangle_rhs": a + b + c,
            "triangle_slack": (a + b + c) - lhs,
        },
    )


def check_weyl(sigma: np.ndarray, sigma_hat: np.ndarray, lam: float) -> DecompositionCheck:
    """Verify lambda_max(Sigma_lam^{1/2} Sigma-hat_lam^{-1} Sigma_lam^{1/2})
    <= 1/(1 - ||Delta_lam||) when the whitened error has norm below one."""
    delta, specnorm, frobnorm = delta_lambda(sigma, sigma_hat, lam)
    if specnorm >= 1.0:
        raise BoundInapplicableError(
            f"whitened error norm {specnorm:.4f} >= 1", threshold=1.0
        )
    sig_lam = matcore.regularize(matcore.symmetrize(sigma), lam)
    root = matcore.sym_sqrt(sig_lam)
    hat_lam_inv = np.linalg.inv(matcore.regularize(matcore.symmetrize(sigma_hat), lam))
    lhs = float(matcore.sym_eig(root @ hat_lam_inv @ root).lambda_max)
    return DecompositionCheck(
        name="weyl",
        lhs=lhs,
        rhs=1.0 / (1.0 - specnorm),
        relation=UPPER_BOUND,
        components={"delta_specnorm": specnorm, "delta_frobnorm": frobnorm},
    )


def third_term_matrix(x: np.ndarray, sigma: np.ndarray, lam: float):
    """The noise-quadratic-form matrix of the ridge error and its two bounds.

    M = (1/n^2) A' Sigma-hat_lam^{-1} Sigma Sigma-hat_lam^{-1} A with A the
    d x n matrix of covariate columns.  Returns a pair of DecompositionChecks,
    (trace check, spectral check):

        tr(M)  <= (1/n) (1 - ||Delta_lam||)^{-2} (d2 + sqrt(d2 ||Delta_lam||_F))
        ||M||  <= (1/n) (1 - ||Delta_lam||)^{-1}

    The trace bound is the stated form; it can fail when ||Delta_lam||_F > 1
    (the deterministic form replaces sqrt(d2 ||.||_F) by sqrt(d2) ||.||_F and
    is recorded as a component).
    """
    if lam <= 0:
        raise DomainError(f"ridge level must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    sigma = matcore.symmetrize(sigma)
    sig_hat = matcore.empirical_second_moment(x)
    delta, specnorm, frobnorm = delta_lambda(sigma, sig_hat, lam)
    if specnorm >= 1.0:
        raise BoundInapplicableError(
            f"whitened error norm {specnorm:.4f} >= 1", threshold=1.0
        )
    hat_lam_inv = np.linalg.inv(matcore.regularize(sig_hat, lam))
    core = matcore.symmetrize(hat_lam_inv @ sigma @ hat_lam_inv)
    m = matcore.symmetrize(x @ core @ x.T) / n**2

    vals = matcore.sym_eig(matcore.regularize(sigma, lam)).eigenvalues
    ratios = (vals - lam) / vals  # eigenvalues of Sigma over Sigma + lam
    ratios = np.clip(ratios, 0.0, None)
    d2 = float((ratios**2).sum())

    inflate = 1.0 / (1.0 - specnorm)
    trace_check = DecompositionCheck(
        name="third-term-trace",
        lhs=float(np.trace(m)),
        rhs=inflate**2 * (d2 + np.sqrt(d2 * frobnorm)) / n,
        relation=UPPER_BOUND,
        components={
            "d2": d2,
            "delta_specnorm": specnorm,
            "delta_frobnorm": frobnorm,
            "deterministic_rhs": inflate**2 * (d2 + np.sqrt(d2) * frobnorm) / n,
        },
    )
    spectral_check = DecompositionCheck(
        name="third-term-spectral",
        lhs=matcore.spectral_norm(m),
        rhs=inflate / n,
        relation=UPPER_BOUND,
        components={"delta_specnorm": specnorm},
    )
    return m, trace_check, spectral_check


def leverage_profile(points: np.ndarray, sigma: np.ndarray, lam_grid=(0.0,),
                     bins: int = 10) -> dict:
    """Whitened leverage ||Sigma_lam^{-1/2} x|| / sqrt(d1_lam) per point.

    Returns {lam: {"max": ..., "mean": ..., "histogram": (counts, edges)}}.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sigma = matcore.symmetrize(sigma)
    vals = matcore.sym_eig(sigma).eigenvalues
    out = {}
    for lam in lam_grid:
        if lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {lam}")
        root = matcore.inv_sqrt(matcore.regularize(sigma, lam))
        d1 = float(np.sum(vals / (vals + lam))) if lam > 0 else float(vals.size)
        lev = np.linalg.norm(points @ root, axis=1) / np.sqrt(d1)
        counts, edges = np.histogram(lev, bins=bins)
        out[float(lam)] = {
            "max": float(lev.max()),
            "mean": float(lev.mean()),
            "histogram": (counts, edges),
        }
    return out
