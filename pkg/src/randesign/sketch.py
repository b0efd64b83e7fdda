"""Fast approximate least squares by rotation and uniform row subsampling.

The pipeline flattens statistical leverage with a random rotation (sign-flip
plus fast Walsh-Hadamard, or a uniform orthogonal factor), subsamples rows
uniformly with replacement, and solves the small problem.  The rotation kinds
carry certified subgaussian constants, which feed the leverage certificate
and, through it, the misspecified-model excess-loss bound for the subsampled
solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bounds, estimators, matcore
from .errors import (
    BoundInapplicableError,
    DimensionMismatchError,
    DomainError,
    SingularMatrixError,
)
from .population import Sample
from .rngstream import as_generator

HADAMARD = "hadamard-rademacher"
ORTHOGONAL = "uniform-orthogonal"


def fwht(v: np.ndarray) -> np.ndarray:
    """Multiply by the (unnormalized, Sylvester-ordered) Hadamard matrix.

    In-place butterfly on a copy; k * 2^k additions for length 2^k.  A 2-D
    input is transformed column-wise.
    """
    v = np.array(v, dtype=float)
    n = v.shape[0]
    if n < 1 or n & (n - 1):
        raise DimensionMismatchError(f"length must be a power of two, got {n}")
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            a = v[start:start + h].copy()
            b = v[start + h:start + 2 * h]
            v[start:start + h] = a + b
            v[start + h:start + 2 * h] = a - b
        h *= 2
    return v


def hadamard_dense(n: int) -> np.ndarray:
    """Dense Sylvester-ordered Hadamard matrix (oracle for fwht)."""
    if n < 1 or n & (n - 1):
        raise DimensionMismatchError(f"order must be a power of two, got {n}")
    h = np.array([[1.0]])
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


def orthogonal_sigma(n: int) -> float:
    """Certified subgaussian constant for a uniformly random orthogonal row:
    1 / (1 - 1/(4N) - 1/(360 N^3))."""
    if n < 1:
        raise DomainError(f"row count must be >= 1, got {n}")
    return 1.0 / (1.0 - 1.0 / (4.0 * n) - 1.0 / (360.0 * n**3))


@dataclass(frozen=True)
class Rotation:
    """A sampled orthogonal rotation with its certified subgaussian constant."""

    kind: str
    n_rows: int
    signs: np.ndarray | None = None  # +/-1 per row, hadamard kind
    factor: np.ndarray | None = None  # (N, N) orthonormal, uniform kind

    @property
    def sigma_subgauss(self) -> float:
        if self.kind == HADAMARD:
            return 1.0
        return orthogonal_sigma(self.n_rows)

    def apply(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        rows = a.shape[0]
        if rows != self.n_rows:
            raise DimensionMismatchError(
                f"input has {rows} rows, rotation expects {self.n_rows}"
            )
        if self.kind == HADAMARD:
            return fwht(self.signs[:, None] * a if a.ndim == 2 else self.signs * a) \
                / np.sqrt(self.n_rows)
        return self.factor @ a


def sample_rotation(kind: str, n_rows: int, stream) -> Rotation:
    """Draw a rotation; hadamard-rademacher requires a power-of-two row count."""
    rng = as_generator(stream)
    if kind == HADAMARD:
        if n_rows < 1 or n_rows & (n_rows - 1):
            raise DimensionMismatchError(
                f"hadamard rotation needs a power-of-two row count, got {n_rows}"
            )
        signs = 2.0 * rng.integers(0, 2, size=n_rows) - 1.0
        return Rotation(kind=HADAMARD, n_rows=n_rows, signs=signs)
    if kind == ORTHOGONAL:
        g = rng.standard_normal((n_rows, n_rows))
        q, r = np.linalg.qr(g)
        # fix the gauge so the distribution is Haar
        q = q * np.sign(np.diag(r))
        return Rotation(kind=ORTHOGONAL, n_rows=n_rows, factor=q)
    raise DomainError(f"unknown rotation kind {kind!r}")


def apply_rotation(rotation: Rotation, a: np.ndarray, b: np.ndarray):
    """Rotate the design and response jointly: (Theta A, Theta b)."""
    return rotation.apply(a), rotation.apply(np.asarray(b, dtype=float))


def rotation_leverage_bound(sigma_subgauss: float, d: int, n_rows: int,
                            delta_prime: float) -> float:
    """Leverage certificate for rotated rows:
    sigma * sqrt(1 + 2 sqrt(log(N/delta')/d) + 2 log(N/delta')/d)."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if not 0.0 < delta_prime < 1.0:
        raise DomainError(f"delta' must be in (0,1), got {delta_prime}")
    t = np.log(n_rows / delta_prime) / d
    return float(sigma_subgauss * np.sqrt(1.0 + 2.0 * np.sqrt(t) + 2.0 * t))


def max_row_leverage(rotated: np.ndarray) -> float:
    """Empirical max of ||Sigma^{-1/2} x_i|| / sqrt(d) over rotated rows,
    with Sigma the exact row second moment (1/N) A'A."""
    rotated = np.asarray(rotated, dtype=float)
    n_rows, d = rotated.shape
    root = matcore.inv_sqrt(matcore.empirical_second_moment(rotated))
    return float(np.linalg.norm(rotated @ root, axis=1).max() / np.sqrt(d))


@dataclass(frozen=True)
class SketchPlan:
    rotation: Rotation
    n_sub: int
    delta: float
    delta_prime: float

    def __post_init__(self):
        # rows are drawn with replacement, so n_sub may exceed the row count
        # (the leverage threshold often demands it on small problems)
        if self.n_sub < 1:
            raise DomainError(f"subsample size must be >= 1, got {self.n_sub}")
        for name, val in (("delta", self.delta), ("delta_prime", self.delta_prime)):
            if not 0.0 < val < 1.0:
                raise DomainError(f"{name} must be in (0,1), got {val}")


@dataclass(frozen=True)
class SketchReport:
    loss_hat: float  # (1/N) ||A w_hat - b||^2
    loss_beta: float  # (1/N) ||A beta - b||^2, the exact minimum
    excess: float
    bound: float | None  # misspecified-model bound; None when inapplicable
    rho_certificate: float
    n_threshold: float  # ceil'able sample threshold n_{2,delta}
    bound_detail: dict | None = None

    def to_dict(self) -> dict:
        return {
            "L_hat": self.loss_hat,
            "L_beta": self.loss_beta,
            "excess": self.excess,
            "bound": self.bound,
            "rho_certificate": self.rho_certificate,
            "n_threshold": self.n_threshold,
        }


def _exact_population(rot_a: np.ndarray, rot_b: np.ndarray):
    """Treat the N rotated rows as a uniform finite population; exact moments."""
    n_rows = rot_a.shape[0]
    sigma = matcore.empirical_second_moment(rot_a)
    beta = matcore.solve_psd(sigma, rot_a.T @ rot_b / n_rows)
    residual = rot_b - rot_a @ beta  # the orthogonalized "bias" per row
    loss_beta = float(residual @ residual / n_rows)
    return sigma, beta, residual, loss_beta


def subsample_solve(plan: SketchPlan, rot_a: np.ndarray, rot_b: np.ndarray,
                    stream):
    """Solve least squares on a uniform-with-replacement row subsample.

    Returns (RegressionFit, SketchReport).  The report instantiates the
    misspecified-model bound with zero noise: the residual b - A beta plays
    the bias role, its exact second moment and sup bound computed from the
    rotated rows themselves.
    """
    rng = as_generator(stream)
    rot_a = np.asarray(rot_a, dtype=float)
    rot_b = np.asarray(rot_b, dtype=float).ravel()
    n_rows, d = rot_a.shape
    if rot_b.size != n_rows:
        raise DimensionMismatchError(
            f"design has {n_rows} rows but response has {rot_b.size}"
        )

    idx = rng.integers(0, n_rows, size=plan.n_sub)
    sub = Sample(
        x=rot_a[idx], y=rot_b[idx],
        noise=np.zeros(plan.n_sub), bias=np.zeros(plan.n_sub),
        provenance=f"subsample n={plan.n_sub} of N={n_rows}",
    )
    try:
        fit = estimators.ols_fit(sub)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"subsampled second moment is singular at n = {plan.n_sub}; "
            "increase the subsample above the leverage threshold",
            offending_eigenvalue=exc.offending_eigenvalue,
        ) from exc

    sigma, beta, residual, loss_beta = _exact_population(rot_a, rot_b)
    gap = fit.coefficients - beta
    loss_hat = loss_beta + matcore.weighted_norm(gap, sigma) ** 2

    rho = rotation_leverage_bound(plan.rotation.sigma_subgauss, d, n_rows,
                                  plan.delta_prime)
    n_threshold = bounds.sample_threshold_2(rho, d, plan.delta)

    # exact bias moments over the finite row population
    root = matcore.inv_sqrt(sigma)
    lev = np.linalg.norm(rot_a @ root, axis=1)
    e_term = float(np.mean(lev**2 * residual**2))
    b_bias = float(np.max(lev * np.abs(residual)) / np.sqrt(d)) if n_rows else 0.0

    bound_value = None
    detail = None
    try:
        report = bounds.theorem_misspecified(bounds.OlsBoundInputs(
            d=d, n=plan.n_sub, delta=plan.delta, sigma_noise=0.0,
            rho2=rho, b_bias=b_bias, e_term=e_term,
        ))
        bound_value = report.excess_sq
        detail = report.to_dict()
    except BoundInapplicableError:
        pass  # n below the applicability threshold: report bound as None

    return fit, SketchReport(
        loss_hat=loss_hat,
        loss_beta=loss_beta,
        excess=loss_hat - loss_beta,
        bound=bound_value,
        rho_certificate=rho,
        n_threshold=n_threshold,
        bound_detail=detail,
    )
