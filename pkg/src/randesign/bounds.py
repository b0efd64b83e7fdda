"""Evaluators for the named constants and the full excess-loss bound statements.

Conventions:
  * Sample-size thresholds and K-factors are returned as exact reals; whether
    to ceil them to integers is the caller's decision.
  * An inapplicable bound (n at or below its threshold, delta out of range)
    raises BoundInapplicableError carrying the threshold -- never returns an
    infinite sentinel.
  * The ridge second/third terms use the sharp per-lemma constants rather
    than the umbrella universal constant, which keeps coverage tests tight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundInapplicableError, DomainError

LOG41 = float(np.log(41.0))

CONDITION_SUBGAUSSIAN = "subgaussian-projections"
CONDITION_LEVERAGE = "bounded-leverage"


def _log_inv(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0,1), got {delta}")
    return float(np.log(1.0 / delta))


def sample_threshold_1(rho1: float, d: int, delta: float) -> float:
    """n_{1,delta} = 70 rho1^2 (d log 41 + log(2/delta))."""
    _log_inv(delta)
    return 70.0 * rho1**2 * (d * LOG41 + np.log(2.0 / delta))


def sample_threshold_2(rho2: float, d: int, delta: float) -> float:
    """n_{2,delta} = 4 rho2^2 d log(d/delta)."""
    _log_inv(delta)
    return 4.0 * rho2**2 * d * np.log(d / delta)


def sample_thresholds(rho: float, d: int, delta: float, condition: str) -> float:
    if condition == CONDITION_SUBGAUSSIAN:
        return sample_threshold_1(rho, d, delta)
    if condition == CONDITION_LEVERAGE:
        return sample_threshold_2(rho, d, delta)
    raise DomainError(f"unknown condition selector {condition!r}")


def K1(rho1: float, d: int, delta: float, n: int) -> float:
    """Spectral accuracy factor under subgaussian projections; in (1, 5] once
    n exceeds the threshold, and -> 1 as n -> infinity."""
    threshold = sample_threshold_1(rho1, d, delta)
    if n <= threshold:
        raise BoundInapplicableError(
            f"n = {n} must exceed n_1,delta = {threshold:.2f}", threshold=threshold
        )
    t = d * LOG41 + np.log(2.0 / delta)
    denom = 1.0 - (10.0 * rho1 / 9.0) * (np.sqrt(32.0 * t / n) + 2.0 * t / n)
    return 1.0 / denom


def K2(rho2: float, d: int, delta: float, n: int) -> float:
    """Spectral accuracy factor under bounded statistical leverage."""
    threshold = sample_threshold_2(rho2, d, delta)
    if n <= threshold:
        raise BoundInapplicableError(
            f"n = {n} must exceed n_2,delta = {threshold:.2f}", threshold=threshold
        )
    return 1.0 / (1.0 - np.sqrt(2.0 * rho2**2 * d * np.log(d / delta) / n))


def effective_dims(spectrum, lam: float):
    """(d_{1,lam}, d_{2,lam}) = (sum r_j, sum r_j^2) with r_j = lam_j/(lam_j+lam)."""
    vals = np.asarray(spectrum, dtype=float).ravel()
    if lam < 0 or np.any(vals < 0):
        raise DomainError("lambda and the spectrum must be nonnegative")
    if lam == 0.0:
        ratios = (vals > 0).astype(float)
    else:
        ratios = vals / (vals + lam)
    return float(ratios.sum()), float((ratios**2).sum())


def ridge_K(rho_lam: float, d1: float, delta: float, n: int) -> float:
    """K_{lam,delta,n}; in (1, 4] whenever n >= 16 rho^2 d1 log(d1/delta)."""
    _log_inv(delta)
    q = rho_lam**2 * d1 * np.log(d1 / delta)
    if n < 16.0 * q:
        raise BoundInapplicableError(
            f"n = {n} below the ridge threshold 16 rho^2 d1 log(d1/delta) = {16*q:.2f}",
            threshold=16.0 * q,
        )
    return 1.0 / (1.0 - (np.sqrt(4.0 * q / n) + q / n))


def noise_contribution(k: float, sigma_noise: float, d: float, delta: float,
                       n: int) -> float:
    """K * sigma^2 (d + 2 sqrt(d log(1/delta)) + 2 log(1/delta)) / n."""
    t = _log_inv(delta)
    return k * sigma_noise**2 * (d + 2.0 * np.sqrt(d * t) + 2.0 * t) / n


def approx_contribution(k: float, e_term: float, b_bias: float, d: int,
                        delta: float, n: int) -> float:
    """K^2 (4 E (1 + 8 log(1/delta)) / n + 3 B^2 d log^2(1/delta) / n^2)."""
    t = _log_inv(delta)
    return k**2 * (
        4.0 * e_term * (1.0 + 8.0 * t) / n + 3.0 * b_bias**2 * d * t**2 / n**2
    )


def approx_second_moment_bound(d: int, bias_mean_sq: float, *,
                               rho2: float | None = None,
                               rho1: float | None = None,
                               b_bias: float | None = None,
                               lam_param: float | None = None) -> float:
    """Upper bound on E[||Sigma^{-1/2} X bias(X)||^2].

    Bounded-leverage branch: rho2^2 d E[bias^2].  Subgaussian branch trades a
    free lam_param > 0 against the almost-sure bias bound b_bias.
    """
    if (rho2 is None) == (rho1 is None):
        raise DomainError("supply exactly one of rho2 / rho1")
    if rho2 is not None:
        return rho2**2 * d * bias_mean_sq
    if b_bias is None or lam_param is None or lam_param <= 0:
        raise DomainError("the subgaussian branch needs b_bias and lam_param > 0")
    if bias_mean_sq == 0.0:
        return 0.0
    g = max(b_bias**2 * d / (lam_param * rho1 * bias_mean_sq), 1.0)
    log_g = np.log(g)
    return rho1 * d * bias_mean_sq * (
        1.0 + np.sqrt(log_g / d) + (log_g + lam_param) / d
    )


@dataclass(frozen=True)
class OlsBoundInputs:
    d: int
    n: int
    delta: float
    sigma_noise: float
    rho1: float | None = None
    rho2: float | None = None
    b_bias: float = 0.0
    e_term: float = 0.0  # E[||Sigma^{-1/2} X bias(X)||^2]

    def __post_init__(self):
        _log_inv(self.delta)
        if (self.rho1 is None) == (self.rho2 is None):
            raise DomainError("exactly one of rho1 / rho2 must be set")

    @property
    def condition(self) -> str:
        return CONDITION_SUBGAUSSIAN if self.rho1 is not None else CONDITION_LEVERAGE

    def k_factor(self) -> float:
        if self.rho1 is not None:
            return K1(self.rho1, self.d, self.delta, self.n)
        return K2(self.rho2, self.d, self.delta, self.n)


@dataclass(frozen=True)
class BoundReport:
    """Named bound components with the total failure probability they share."""

    components: dict
    excess_sq: float  # bound on ||w - beta||_Sigma^2
    excess_norm: float  # bound on ||w - beta||_Sigma (sum form)
    delta_total: float
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "components": dict(self.components),
            "excess_sq": self.excess_sq,
            "excess_norm": self.excess_norm,
            "delta_total": self.delta_total,
            "flags": dict(self.flags),
        }


def theorem_correct_model(inputs: OlsBoundInputs) -> BoundReport:
    """Correct-model OLS bound: holds with probability 1 - 2 delta."""
    k = inputs.k_factor()
    noise = noise_contribution(k, inputs.sigma_noise, inputs.d, inputs.delta, inputs.n)
    return BoundReport(
        components={"matrix_error": k, "noise": noise},
        excess_sq=noise,
        excess_norm=float(np.sqrt(noise)),
        delta_total=2.0 * inputs.delta,
        flags={"k_exceeds_5": k > 5.0},
    )


def theorem_misspecified(inputs: OlsBoundInputs) -> BoundReport:
    """Misspecified-model OLS bound: holds with probability 1 - 3 delta.

    The squared form is 2 (approx + noise); the norm form is
    sqrt(approx) + sqrt(noise).
    """
    if not np.isfinite(inputs.b_bias) or not np.isfinite(inputs.e_term):
        raise BoundInapplicableError("b_bias and e_term must be finite")
    k = inputs.k_factor()
    noise = noise_contribution(k, inputs.sigma_noise, inputs.d, inputs.delta, inputs.n)
    approx = approx_contribution(k, inputs.e_term, inputs.b_bias, inputs.d,
                                 inputs.delta, inputs.n)
    return BoundReport(
        components={"matrix_error": k, "noise": noise, "approx": approx},
        excess_sq=2.0 * (approx + noise),
        excess_norm=float(np.sqrt(approx) + np.sqrt(noise)),
        delta_total=3.0 * inputs.delta,
        flags={"k_exceeds_5": k > 5.0},
    )


@dataclass(frozen=True)
class RidgeBoundInputs:
    spectrum: np.ndarray  # eigenvalues of Sigma, any order
    beta_eig: np.ndarray  # beta expressed in Sigma's eigenbasis, same order
    lam: float
    n: int
    delta: float
    sigma_noise: float
    rho_lam: float
    b_bias_lam: float
    fourth_moment: float  # E[||Sigma_lam^{-1/2} X||^4]
    second_term_expectation: float | None = None  # exact E[...] when known

    def __post_init__(self):
        object.__setattr__(self, "spectrum", np.asarray(self.spectrum, float).ravel())
        object.__setattr__(self, "beta_eig", np.asarray(self.beta_eig, float).ravel())
        if self.spectrum.size != self.beta_eig.size:
            raise DomainError("spectrum and beta_eig lengths differ")


def ridge_first_term(spectrum, beta_eig, lam: float) -> float:
    """||beta_lam - beta||_Sigma^2 = sum_j beta_j^2 lam_j / (1 + lam_j/lam)^2."""
    vals = np.asarray(spectrum, dtype=float).ravel()
    b = np.asarray(beta_eig, dtype=float).ravel()
    return float(np.sum(b**2 * vals / (1.0 + vals / lam) ** 2))


def delta_frobenius_bound(fourth_moment: float, d1: float, d2: float,
                          rho_lam: float, delta: float, n: int) -> float:
    """High-probability bound on ||Delta_lam||_F (per-lemma constants)."""
    t = _log_inv(delta)
    variance = max(fourth_moment - d2, 0.0)
    return (1.0 + np.sqrt(8.0 * t)) * np.sqrt(variance / n) \
        + (4.0 / 3.0) * (rho_lam**2 * d1 + np.sqrt(d2)) * t / n


def delta_spectral_bound(rho_lam: float, d1: float, delta: float, n: int) -> float:
    """High-probability bound on ||Delta_lam|| (valid for delta <= 1/8)."""
    _log_inv(delta)
    q = rho_lam**2 * d1 * np.log(d1 / delta)
    return np.sqrt(4.0 * q / n) + 2.0 * q / (3.0 * n)


def theorem_ridge(inputs: RidgeBoundInputs) -> BoundReport:
    """Full ridge excess-loss bound: holds with probability 1 - 4 delta.

    Raises BoundInapplicableError naming whichever of the three
    preconditions (delta range, lambda range, sample size) fails.
    """
    if not 0.0 < inputs.delta < 0.125:
        raise BoundInapplicableError(
            f"delta = {inputs.delta} outside (0, 1/8)"
        )
    lam_max = float(inputs.spectrum.max())
    if inputs.lam > lam_max:
        raise BoundInapplicableError(
            f"lambda = {inputs.lam} exceeds the largest eigenvalue {lam_max}"
        )
    d1, d2 = effective_dims(inputs.spectrum, inputs.lam)
    k = ridge_K(inputs.rho_lam, d1, inputs.delta, inputs.n)  # raises on small n
    t = _log_inv(inputs.delta)
    n = inputs.n

    first = ridge_first_term(inputs.spectrum, inputs.beta_eig, inputs.lam)

    second_exp = inputs.second_term_expectation
    if second_exp is None:
        second_exp = first * (2.0 * inputs.rho_lam**2 * d1 + 2.0)
    second = k**2 * (
        (4.0 + 32.0 * t) * second_exp / n
        + 6.0 * (inputs.rho_lam**2 * d1 * inputs.b_bias_lam**2 + first) * t**2 / n**2
    )

    frob = delta_frobenius_bound(inputs.fourth_moment, d1, d2, inputs.rho_lam,
                                 inputs.delta, n)
    spectral = delta_spectral_bound(inputs.rho_lam, d1, inputs.delta, n)
    q = d2 + np.sqrt(d2 * frob)
    s2 = inputs.sigma_noise**2
    third = (
        k**2 * s2 * q / n
        + 2.0 * k**1.5 * s2 * np.sqrt(q * t) / n
        + 2.0 * k * s2 * t / n
    )

    return BoundReport(
        components={
            "matrix_error": k,
            "delta_frobenius": float(frob),
            "delta_spectral": float(spectral),
            "first": float(first),
            "second": float(second),
            "third": float(third),
            "d1": d1,
            "d2": d2,
        },
        excess_sq=3.0 * (first + second + third),
        excess_norm=float(np.sqrt(first) + np.sqrt(second) + np.sqrt(third)),
        delta_total=4.0 * inputs.delta,
        flags={"k_exceeds_4": k > 4.0},
    )
