"""Coefficient estimators and loss functionals.

Normal equations are solved through the symmetric eigendecomposition of the
empirical second-moment matrix (not QR): the finite-sample guarantees are
stated through that spectrum and the diagnostics need it anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import DimensionMismatchError, DomainError, SingularMatrixError
from .population import PopulationModel, Sample


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    lam: float
    second_moment: np.ndarray  # empirical Sigma-hat of the fitted sample
    n: int

    def normal_equation_residual(self, xy_mean: np.ndarray) -> float:
        """||(Sigma-hat + lam I) w - E-hat[XY]|| relative to ||E-hat[XY]||."""
        lhs = matcore.regularize(self.second_moment, self.lam) @ self.coefficients
        denom = max(float(np.linalg.norm(xy_mean)), 1e-300)
        return float(np.linalg.norm(lhs - xy_mean)) / denom


def _xy_mean(sample: Sample) -> np.ndarray:
    return sample.x.T @ sample.y / sample.n


def ols_fit(sample: Sample) -> RegressionFit:
    """Ordinary least squares; fails loudly when Sigma-hat is singular."""
    sig_hat = matcore.empirical_second_moment(sample.x)
    try:
        coeffs = matcore.solve_psd(sig_hat, _xy_mean(sample))
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"singular empirical second moment (n={sample.n}): "
            "sample too small or design degenerate",
            offending_eigenvalue=exc.offending_eigenvalue,
        ) from exc
    return RegressionFit(coefficients=coeffs, lam=0.0, second_moment=sig_hat, n=sample.n)


def ridge_fit(sample: Sample, lam: float) -> RegressionFit:
    """Ridge estimator (Sigma-hat + lam I)^{-1} E-hat[XY]; lam = 0 routes to OLS."""
    if lam < 0:
        raise DomainError(f"ridge level must be nonnegative, got {lam}")
    if lam == 0:
        return ols_fit(sample)
    sig_hat = matcore.empirical_second_moment(sample.x)
    spec = matcore.sym_eig(sig_hat)
    vals = np.clip(spec.eigenvalues, 0.0, None) + lam
    v = spec.eigenvectors
    coeffs = v @ ((v.T @ _xy_mean(sample)) / vals)
    return RegressionFit(coefficients=coeffs, lam=float(lam), second_moment=sig_hat, n=sample.n)


def ridge_conditional_mean(x: np.ndarray, beta: np.ndarray, lam: float) -> np.ndarray:
    """Conditional mean of the ridge estimator given the covariates:
    (Sigma-hat + lam I)^{-1} Sigma-hat beta."""
    if lam < 0:
        raise DomainError(f"ridge level must be nonnegative, got {lam}")
    sig_hat = matcore.empirical_second_moment(x)
    if lam == 0:
        return matcore.solve_psd(sig_hat, sig_hat @ np.asarray(beta, dtype=float))
    spec = matcore.sym_eig(sig_hat)
    vals = np.clip(spec.eigenvalues, 0.0, None)
    v = spec.eigenvectors
    return v @ ((vals * (v.T @ np.asarray(beta, dtype=float))) / (vals + lam))


def excess_loss(w: np.ndarray, model: PopulationModel) -> float:
    """L(w) - L(beta) = ||w - beta||_Sigma^2."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size != model.dim:
        raise DimensionMismatchError(f"w has length {w.size}, model dimension {model.dim}")
    return matcore.weighted_norm(w - model.beta, model.second_moment()) ** 2


def fixed_design_risk(x: np.ndarray, sigma_sq: float) -> float:
    """Mean excess loss d sigma^2 / n for OLS on a fixed design with noise
    variance sigma^2."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    sig = matcore.empirical_second_moment(x)
    spec = matcore.sym_eig(sig)
    if spec.lambda_min <= matcore.TOL_PSD * max(spec.lambda_max, 0.0):
        raise SingularMatrixError(
            "fixed design matrix is rank deficient",
            offending_eigenvalue=spec.lambda_min,
        )
    return d * sigma_sq / n


def fixed_design_highprob(x: np.ndarray, sigma_noise: float, delta: float) -> float:
    """High-probability fixed-design excess loss threshold at confidence 1-delta:
    sigma^2 (d + 2 sqrt(d log(1/delta)) + 2 log(1/delta)) / n."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0,1), got {delta}")
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    fixed_design_risk(x, 1.0)  # invertibility gate
    log_term = np.log(1.0 / delta)
    return sigma_noise**2 * (d + 2.0 * np.sqrt(d * log_term) + 2.0 * log_term) / n


def fixed_ridge_risk(spectrum, beta_eig, lam: float, sigma_sq: float, n: int):
    """Fixed-design ridge bias/variance decomposition.

    Returns (bias_term, variance_term) with bias = sum_j beta_j^2 lam_j /
    (1 + lam_j/lam)^2 in the design's eigenbasis and variance =
    sigma^2 d_{lam,fixed} / n, d_{lam,fixed} = sum_j (lam_j/(lam_j+lam))^2.
    """
    if lam <= 0:
        raise DomainError(f"ridge level must be positive, got {lam}")
    vals = np.asarray(spectrum, dtype=float).ravel()
    beta_eig = np.asarray(beta_eig, dtype=float).ravel()
    if vals.size != beta_eig.size:
        raise DimensionMismatchError("spectrum and coefficient vector lengths differ")
    bias = float(np.sum(beta_eig**2 * vals / (1.0 + vals / lam) ** 2))
    d_eff = float(np.sum((vals / (vals + lam)) ** 2))
    return bias, sigma_sq * d_eff / n
