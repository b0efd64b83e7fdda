"""Tail-inequality evaluators and their Monte Carlo falsifiers.

Each evaluator takes user-supplied summary statistics (traces, almost-sure
bounds, subgaussian parameters) rather than raw data, so the same functions
serve the analysis bounds, the diagnostics, and the CLI.  Thresholds are
never clipped into feasible ranges: a vacuous bound must stay visible.

For every inequality there is a vectorized reference sampler that draws the
tight (or near-tight) case and reports the empirical violation rate, which a
correct implementation keeps at or below the nominal failure probability.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .rngstream import TAG_VERIFY, derive_stream


def _check_delta(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0,1), got {delta}")
    return float(np.log(1.0 / delta))


def quad_form_bound(tr_sigma: float, tr_sigma_sq: float, specnorm_sigma: float,
                    sigma: float, delta: float) -> float:
    """Threshold for ||AX||^2 with subgaussian X and Sigma = AA':

        sigma^2 tr(Sigma) + 2 sigma^2 sqrt(tr(Sigma^2) log(1/delta))
        + 2 sigma^2 ||Sigma|| log(1/delta)
    """
    t = _check_delta(delta)
    if min(tr_sigma, tr_sigma_sq, specnorm_sigma) < 0 or sigma < 0:
        raise DomainError("summary statistics must be nonnegative")
    return sigma**2 * (tr_sigma + 2.0 * np.sqrt(tr_sigma_sq * t) + 2.0 * specnorm_sigma * t)


def h1(a: float) -> float:
    """h1(a) = 1 + a - sqrt(1 + 2a), the rate function in the quadratic-form proof."""
    if a < 0:
        raise DomainError(f"argument must be nonnegative, got {a}")
    return 1.0 + a - np.sqrt(1.0 + 2.0 * a)


def h1_inv(b: float) -> float:
    """Inverse of h1: h1_inv(b) = sqrt(2b) + b."""
    if b < 0:
        raise DomainError(f"argument must be nonnegative, got {b}")
    return np.sqrt(2.0 * b) + b


def vector_bernstein_bound(v: float, b: float, delta: float) -> float:
    """Threshold for ||sum X_i|| of a bounded martingale difference sequence:

        sqrt(v) (1 + sqrt(8 log(1/delta))) + (4/3) b log(1/delta)
    """
    t = _check_delta(delta)
    if v < 0 or b < 0:
        raise DomainError("variance and bound parameters must be nonnegative")
    return np.sqrt(v) * (1.0 + np.sqrt(8.0 * t)) + (4.0 / 3.0) * b * t


def covariance_subgaussian_eps(gamma: float, d: int, n: int, delta: float,
                               eta: float) -> float:
    """epsilon_{eta,delta,n} controlling the spectrum of a subgaussian
    empirical covariance (eigenvalues land in 1 +/- eps/(1-2 eta))."""
    if not 0.0 < eta < 0.5:
        raise DomainError(f"eta must be in (0, 1/2), got {eta}")
    if gamma <= 0 or n < 1:
        raise DomainError("gamma must be positive and n >= 1")
    _check_delta(delta)
    t = d * np.log(1.0 + 2.0 / eta) + np.log(2.0 / delta)
    return gamma * (np.sqrt(32.0 * t / n) + 2.0 * t / n)


def covariance_window_halfwidth(gamma: float, d: int, n: int, delta: float,
                                eta: float) -> float:
    """Half-width eps/(1-2 eta) of the eigenvalue window around 1."""
    return covariance_subgaussian_eps(gamma, d, n, delta, eta) / (1.0 - 2.0 * eta)


def matrix_chernoff_lower(b: float, d: int, n: int, delta: float) -> float:
    """Lower threshold 1 - sqrt((2 b^2 / n) log(d/delta)) for the smallest
    eigenvalue of an isotropic empirical second moment.  May be negative;
    returned as-is."""
    _check_delta(delta)
    if b < 1:
        raise DomainError(f"b must be >= 1 (E||X||^2 >= 1 and ||X|| <= b), got {b}")
    return 1.0 - np.sqrt(2.0 * b**2 * np.log(d / delta) / n)


def matrix_bernstein_tail(sigma_bar: float, b_bar: float, k_bar: float,
                          n: int, t: float):
    """Dimension-free matrix Bernstein tail: returns

        (sqrt(2 sigma_bar^2 t / n) + b_bar t / (3 n),  k_bar t / (e^t - t - 1))

    The probability bound diverges as t -> 0+ and is returned un-clipped.
    """
    if t <= 0 or sigma_bar <= 0 or b_bar <= 0 or k_bar <= 0:
        raise DomainError("t, sigma_bar, b_bar, k_bar must all be positive")
    threshold = np.sqrt(2.0 * sigma_bar**2 * t / n) + b_bar * t / (3.0 * n)
    prob = k_bar * t / (np.expm1(t) - t)
    return float(threshold), float(prob)


def mc_violation_rate(event, trials: int, stream_seed: int) -> float:
    """Fraction of trials where `event(rng)` is true.

    Each trial gets its own derived stream, so the rate is a deterministic
    function of (stream_seed, trials) and independent of any partitioning of
    the trial range across workers.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    hits = 0
    for i in range(trials):
        if event(derive_stream(stream_seed, i, TAG_VERIFY)):
            hits += 1
    return hits / trials


# ---------------------------------------------------------------------------
# Reference samplers (vectorized): empirical violation rates per lemma.


def quad_form_violation_rate(d: int, sigma: float, delta: float, trials: int,
                             seed: int) -> float:
    """Gaussian X in R^d, A = I: rate of ||X||^2 exceeding the threshold."""
    rng = derive_stream(seed, 0, TAG_VERIFY)
    threshold = quad_form_bound(d, d, 1.0, sigma, delta)
    if sigma == 0.0:
        return 0.0
    draws = rng.standard_normal((trials, d)) * sigma
    return float(np.mean(np.einsum("ij,ij->i", draws, draws) > threshold))


def vector_bernstein_violation_rate(n: int, delta: float, trials: int,
                                    seed: int) -> float:
    """Rademacher signs times a fixed unit vector: v = n, b = 1."""
    rng = derive_stream(seed, 0, TAG_VERIFY)
    threshold = vector_bernstein_bound(float(n), 1.0, delta)
    signs = 2.0 * rng.integers(0, 2, size=(trials, n)) - 1.0
    # sum_i X_i = (sum of signs) * u with ||u|| = 1
    return float(np.mean(np.abs(signs.sum(axis=1)) > threshold))


def covariance_spectrum_violation_rate(d: int, n: int, delta: float, eta: float,
                                       trials: int, seed: int,
                                       chunk: int = 200) -> float:
    """Isotropic gaussian: rate of lambda_min/lambda_max leaving the window."""
    rng = derive_stream(seed, 0, TAG_VERIFY)
    half = covariance_window_halfwidth(1.0, d, n, delta, eta)
    lo, hi = 1.0 - half, 1.0 + half
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        x = rng.standard_normal((m, n, d))
        cov = np.einsum("tni,tnj->tij", x, x) / n
        vals = np.linalg.eigvalsh(cov)
        hits += int(np.sum((vals[:, 0] < lo) | (vals[:, -1] > hi)))
        done += m
    return hits / trials


def matrix_chernoff_violation_rate(d: int, n: int, delta: float, trials: int,
                                   seed: int) -> float:
    """X uniform over {sqrt(d) e_j}: E[XX'] = I, ||X|| = sqrt(d).

    The empirical matrix is diagonal with entries d * count_j / n, so the
    smallest eigenvalue reduces to the scarcest atom count.
    """
    rng = derive_stream(seed, 0, TAG_VERIFY)
    threshold = matrix_chernoff_lower(np.sqrt(d), d, n, delta)
    counts = rng.multinomial(n, np.full(d, 1.0 / d), size=trials)
    lam_min = d * counts.min(axis=1) / n
    return float(np.mean(lam_min < threshold))


def matrix_bernstein_violation_rate(d: int, n: int, delta: float, trials: int,
                                    seed: int) -> float:
    """M_i = X_i X_i' - I for X uniform over {sqrt(d) e_j}.

    Here sigma_bar^2 = b_bar = d and k_bar = d; t = 2 log(d/delta) makes the
    probability bound at most delta for delta <= 1/8.
    """
    rng = derive_stream(seed, 0, TAG_VERIFY)
    t = 2.0 * np.log(d / delta)
    threshold, _ = matrix_bernstein_tail(np.sqrt(d), float(d), float(d), n, t)
    counts = rng.multinomial(n, np.full(d, 1.0 / d), size=trials)
    lam_max = d * counts.max(axis=1) / n - 1.0
    return float(np.mean(lam_max > threshold))


REFERENCE_SAMPLERS = {
    "quad-form": lambda params, delta, trials, seed: quad_form_violation_rate(
        int(params.get("d", 4)), float(params.get("sigma", 1.0)), delta, trials, seed
    ),
    "vector-bernstein": lambda params, delta, trials, seed: vector_bernstein_violation_rate(
        int(params.get("n", 1000)), delta, trials, seed
    ),
    "covariance": lambda params, delta, trials, seed: covariance_spectrum_violation_rate(
        int(params.get("d", 3)), int(params.get("n", 2000)), delta,
        float(params.get("eta", 0.05)), trials, seed
    ),
    "matrix-chernoff": lambda params, delta, trials, seed: matrix_chernoff_violation_rate(
        int(params.get("d", 2)), int(params.get("n", 64)), delta, trials, seed
    ),
    "matrix-bernstein": lambda params, delta, trials, seed: matrix_bernstein_violation_rate(
        int(params.get("d", 4)), int(params.get("n", 200)), delta, trials, seed
    ),
}
