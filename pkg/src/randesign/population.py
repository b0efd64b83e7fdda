"""Exact, samplable population distributions for covariate/response pairs.

Discrete-atom designs are the primary testbed: every population expectation
is a finite weighted sum, so the target coefficients, ridge targets, leverage
constants and approximation-error moments are all exactly computable.
Gaussian designs are supported where closed forms exist; constants that do
not exist for them (bounded leverage, in particular) raise
UnavailableConstantError instead of returning a made-up number.

Responses are generated through

    Y = X'beta + bias(X) + noise(X)

with the approximation error orthogonalized against X by explicit projection,
so beta equals the population least squares solution by construction.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import matcore
from .errors import (
    DimensionMismatchError,
    SingularMatrixError,
    UnavailableConstantError,
    UnsupportedBiasError,
)
from .rngstream import as_generator

DISCRETE = "discrete-atoms"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class DesignSpec:
    """Law of the covariate vector X: finite atom set or centered Gaussian."""

    kind: str
    atoms: np.ndarray | None = None  # (k, d) atom coordinates
    weights: np.ndarray | None = None  # (k,) probabilities
    covariance: np.ndarray | None = None  # (d, d) for the gaussian kind

    def __post_init__(self):
        if self.kind == DISCRETE:
            atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
            weights = np.asarray(self.weights, dtype=float).ravel()
            if atoms.shape[0] != weights.size:
                raise DimensionMismatchError(
                    f"{atoms.shape[0]} atoms vs {weights.size} weights"
                )
            if np.any(weights <= 0):
                raise ValueError("atom weights must be positive")
            if abs(weights.sum() - 1.0) > 1e-12:
                raise ValueError(f"atom weights sum to {weights.sum()}, not 1")
            object.__setattr__(self, "atoms", atoms)
            object.__setattr__(self, "weights", weights)
        elif self.kind == GAUSSIAN:
            cov = matcore.symmetrize(np.asarray(self.covariance, dtype=float))
            spec = matcore.sym_eig(cov)
            if spec.lambda_min <= matcore.TOL_PSD * max(spec.lambda_max, 0.0):
                raise SingularMatrixError(
                    "gaussian design covariance is not positive definite",
                    offending_eigenvalue=spec.lambda_min,
                )
            object.__setattr__(self, "covariance", cov)
        else:
            raise ValueError(f"unknown design kind {self.kind!r}")

    @property
    def dim(self) -> int:
        if self.kind == DISCRETE:
            return self.atoms.shape[1]
        return self.covariance.shape[0]

    def second_moment(self) -> np.ndarray:
        """Sigma = E[XX'], exact."""
        if self.kind == DISCRETE:
            return matcore.symmetrize((self.atoms.T * self.weights) @ self.atoms)
        return self.covariance

    def expect(self, values: np.ndarray) -> float:
        """Exact expectation of a per-atom statistic (discrete designs)."""
        if self.kind != DISCRETE:
            raise UnavailableConstantError("exact atom sums need a discrete design")
        return float(self.weights @ np.asarray(values, dtype=float))


@dataclass(frozen=True)
class NoiseSpec:
    """Conditional response noise; every kind is subgaussian with parameter sigma."""

    kind: str = "gaussian"  # gaussian | scaled-rademacher | zero
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "scaled-rademacher", "zero"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("noise scale must be nonnegative")
        if self.kind == "zero":
            object.__setattr__(self, "sigma", 0.0)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, size=n)
        if self.kind == "scaled-rademacher":
            return self.sigma * (2.0 * rng.integers(0, 2, size=n) - 1.0)
        return np.zeros(n)


def _raw_eval(raw: dict, x: np.ndarray) -> np.ndarray:
    """Evaluate a raw (un-orthogonalized) approximation-error profile row-wise."""
    x = np.atleast_2d(x)
    kind = raw["kind"]
    if kind == "zero":
        return np.zeros(x.shape[0])
    if kind == "constant":
        return np.full(x.shape[0], float(raw["value"]))
    if kind == "linear":
        return x @ np.asarray(raw["vector"], dtype=float)
    if kind == "norm-squared":
        return np.einsum("ij,ij->i", x, x)
    if kind == "quadratic-form":
        q = np.asarray(raw["matrix"], dtype=float)
        return np.einsum("ij,jk,ik->i", x, q, x)
    raise UnsupportedBiasError(f"unknown raw bias kind {kind!r}")


def _raw_cross_moment(design: DesignSpec, raw: dict) -> np.ndarray:
    """E[X * raw(X)], exact."""
    if design.kind == DISCRETE:
        vals = _raw_eval(raw, design.atoms)
        return (design.atoms.T * design.weights) @ vals
    # centered gaussian: odd moments vanish, so only the linear part survives
    kind = raw["kind"]
    if kind in ("zero", "constant", "norm-squared", "quadratic-form"):
        return np.zeros(design.dim)
    if kind == "linear":
        return design.covariance @ np.asarray(raw["vector"], dtype=float)
    raise UnsupportedBiasError(
        f"no closed-form cross moment for raw kind {kind!r} on a gaussian design"
    )


@dataclass(frozen=True)
class BiasSpec:
    """Approximation error bias(X), orthogonalized so that E[X bias(X)] = 0.

    bias(x) = raw(x) - x'correction, with correction = Sigma^{-1} E[X raw(X)].
    b_bias is the tightest constant with sup ||Sigma^{-1/2} x bias(x)|| <=
    b_bias * sqrt(d) over the support; it is infinite on unbounded supports.
    """

    raw: dict = field(default_factory=lambda: {"kind": "zero"})
    correction: np.ndarray = None
    atom_values: np.ndarray | None = None  # orthogonalized values, discrete designs
    b_bias: float = 0.0

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return _raw_eval(self.raw, x) - x @ self.correction

    @property
    def is_zero(self) -> bool:
        if self.atom_values is not None:
            return bool(np.all(np.abs(self.atom_values) < 1e-14))
        # a linear raw is exactly its own best linear approximation
        return self.raw["kind"] in ("zero", "linear")


def orthogonalize_bias(design: DesignSpec, raw: dict) -> BiasSpec:
    """Project the linear part out of a raw bias profile.

    Returns bias(x) = raw(x) - x' Sigma^{-1} E[X raw(X)], which satisfies
    E[X bias(X)] = 0 exactly (finite sums on discrete designs, closed-form
    moments for polynomial raws on gaussian designs).
    """
    if raw["kind"] == "zero":
        # no projection needed; keeps rank-deficient designs samplable
        zeros = (np.zeros(design.atoms.shape[0])
                 if design.kind == DISCRETE else None)
        return BiasSpec(raw=raw, correction=np.zeros(design.dim),
                        atom_values=zeros, b_bias=0.0)
    sigma = design.second_moment()
    cross = _raw_cross_moment(design, raw)
    correction = matcore.solve_psd(sigma, cross)
    if design.kind == DISCRETE:
        atoms = design.atoms
        vals = _raw_eval(raw, atoms) - atoms @ correction
        d = design.dim
        root = matcore.inv_sqrt(sigma)
        lev = np.linalg.norm(atoms @ root, axis=1)  # ||Sigma^{-1/2} x|| per atom
        b_bias = float(np.max(lev * np.abs(vals)) / np.sqrt(d)) if len(vals) else 0.0
        return BiasSpec(raw=raw, correction=correction, atom_values=vals, b_bias=b_bias)
    # gaussian support is unbounded: any nonzero bias has infinite b_bias
    effectively_zero = raw["kind"] == "zero" or raw["kind"] == "linear"
    b_bias = 0.0 if effectively_zero else float("inf")
    return BiasSpec(raw=raw, correction=correction, atom_values=None, b_bias=b_bias)


@dataclass(frozen=True)
class PopulationModel:
    """Exact joint law of (X, Y)."""

    design: DesignSpec
    beta: np.ndarray
    noise: NoiseSpec = NoiseSpec(kind="zero")
    bias: BiasSpec | None = None

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).ravel()
        if beta.size != self.design.dim:
            raise DimensionMismatchError(
                f"beta has length {beta.size}, design dimension is {self.design.dim}"
            )
        object.__setattr__(self, "beta", beta)
        if self.bias is None:
            object.__setattr__(
                self, "bias", orthogonalize_bias(self.design, {"kind": "zero"})
            )

    @property
    def dim(self) -> int:
        return self.design.dim

    def second_moment(self) -> np.ndarray:
        return self.design.second_moment()


@dataclass(frozen=True)
class Sample:
    """n i.i.d. covariate/response pairs with their realized noise and bias.

    The generator records noise(X_i) and bias(X_i) per draw; the exact
    decomposition checks are impossible without them.
    """

    x: np.ndarray  # (n, d)
    y: np.ndarray  # (n,)
    noise: np.ndarray  # (n,)
    bias: np.ndarray  # (n,)
    provenance: str = ""

    @property
    def n(self) -> int:
        return self.x.shape[0]


def sample(model: PopulationModel, n: int, stream) -> Sample:
    """Draw n i.i.d. pairs; identical stream state gives a bit-identical sample."""
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = as_generator(stream)
    design = model.design
    if design.kind == DISCRETE:
        idx = rng.choice(design.atoms.shape[0], size=n, p=design.weights)
        x = design.atoms[idx]
        bias_vals = model.bias.atom_values[idx]
    else:
        chol = np.linalg.cholesky(design.covariance)
        x = rng.standard_normal((n, design.dim)) @ chol.T
        bias_vals = model.bias.evaluate(x)
    eps = model.noise.draw(rng, n)
    y = x @ model.beta + bias_vals + eps
    return Sample(x=x, y=y, noise=eps, bias=bias_vals, provenance=f"n={n}")


def population_beta(model: PopulationModel) -> np.ndarray:
    """The minimizer Sigma^{-1} E[XY]; equals model.beta by construction."""
    return model.beta.copy()


def ridge_target(model: PopulationModel, lam: float) -> np.ndarray:
    """beta_lambda = (Sigma + lam I)^{-1} E[XY] = (Sigma + lam I)^{-1} Sigma beta."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    sigma = model.second_moment()
    return matcore.solve_psd(matcore.regularize(sigma, lam), sigma @ model.beta)


@dataclass(frozen=True)
class ModelConstants:
    """The per-model constants entering the finite-sample bounds."""

    sigma_noise: float
    b_bias: float
    rho_1cov: float | None
    _rho_2cov: float | None
    _rho_lambda: Callable[[float], float] | None
    _b_bias_lambda: Callable[[float], float] | None
    on_grid: dict = field(default_factory=dict)

    @property
    def rho_2cov(self) -> float:
        if self._rho_2cov is None:
            raise UnavailableConstantError(
                "bounded statistical leverage does not exist for unbounded designs"
            )
        return self._rho_2cov

    def rho_lambda(self, lam: float) -> float:
        if self._rho_lambda is None:
            raise UnavailableConstantError(
                "lambda-whitened leverage does not exist for unbounded designs"
            )
        return self._rho_lambda(lam)

    def b_bias_lambda(self, lam: float) -> float:
        if self._b_bias_lambda is None:
            raise UnavailableConstantError(
                "sup |x'(beta - beta_lambda)| does not exist for unbounded designs"
            )
        return self._b_bias_lambda(lam)


def model_constants(model: PopulationModel, lambda_grid=()) -> ModelConstants:
    """Exact leverage/bias constants (discrete) or the gaussian closed forms."""
    sigma = model.second_moment()
    d = model.dim
    if model.design.kind == DISCRETE:
        atoms = model.design.atoms
        root = matcore.inv_sqrt(sigma)
        lev = np.linalg.norm(atoms @ root, axis=1)
        rho2 = float(lev.max() / np.sqrt(d))
        spec = matcore.sym_eig(sigma)

        def rho_lam(lam: float) -> float:
            if lam == 0.0:
                return rho2
            root_l = matcore.inv_sqrt(matcore.regularize(sigma, lam))
            d1 = float(np.sum(spec.eigenvalues / (spec.eigenvalues + lam)))
            return float(np.linalg.norm(atoms @ root_l, axis=1).max() / np.sqrt(d1))

        def b_bias_lam(lam: float) -> float:
            gap = model.beta - ridge_target(model, lam)
            return float(np.abs(atoms @ gap).max())

        consts = ModelConstants(
            sigma_noise=model.noise.sigma,
            b_bias=model.bias.b_bias,
            rho_1cov=None,  # finite but not computed tightly for atom sets
            _rho_2cov=rho2,
            _rho_lambda=rho_lam,
            _b_bias_lambda=b_bias_lam,
        )
    else:
        consts = ModelConstants(
            sigma_noise=model.noise.sigma,
            b_bias=model.bias.b_bias,
            rho_1cov=1.0,  # exact for whitened gaussians
            _rho_2cov=None,
            _rho_lambda=None,
            _b_bias_lambda=None,
        )
    for lam in lambda_grid:
        entry = {}
        if consts._rho_lambda is not None:
            entry["rho_lambda"] = consts.rho_lambda(lam)
            entry["b_bias_lambda"] = consts.b_bias_lambda(lam)
        consts.on_grid[float(lam)] = entry
    return consts


# ---------------------------------------------------------------------------
# Exact population moments used by the bound evaluators.


def bias_mean_square(model: PopulationModel) -> float:
    """E[bias(X)^2], exact."""
    if model.design.kind == DISCRETE:
        return model.design.expect(model.bias.atom_values**2)
    if model.bias.raw["kind"] == "zero":
        return 0.0
    if model.bias.raw["kind"] == "constant":
        return float(model.bias.raw["value"]) ** 2
    raise UnavailableConstantError(
        "E[bias^2] has no closed form for this gaussian bias profile"
    )


def approx_second_moment(model: PopulationModel) -> float:
    """E[||Sigma^{-1/2} X bias(X)||^2], exact (the approximation-error driver)."""
    if model.design.kind == DISCRETE:
        root = matcore.inv_sqrt(model.second_moment())
        lev_sq = np.einsum("ij,ij->i", model.design.atoms @ root, model.design.atoms @ root)
        return model.design.expect(lev_sq * model.bias.atom_values**2)
    if model.bias.raw["kind"] == "zero":
        return 0.0
    if model.bias.raw["kind"] == "constant":
        return float(model.bias.raw["value"]) ** 2 * model.dim
    raise UnavailableConstantError(
        "no closed form for the approximation second moment on this design"
    )


def lambda_fourth_moment(model: PopulationModel, lam: float) -> float:
    """E[||Sigma_lambda^{-1/2} X||^4], exact.

    Gaussian closed form: with W = Sigma^{1/2} Sigma_lambda^{-1} Sigma^{1/2},
    E[(Z'WZ)^2] = tr(W)^2 + 2 tr(W^2) = d1^2 + 2 d2.
    """
    sigma = model.second_moment()
    if model.design.kind == DISCRETE:
        root_l = matcore.inv_sqrt(matcore.regularize(sigma, lam))
        q = np.einsum("ij,ij->i", model.design.atoms @ root_l, model.design.atoms @ root_l)
        return model.design.expect(q**2)
    vals = matcore.sym_eig(sigma).eigenvalues
    ratios = vals / (vals + lam)
    d1 = float(ratios.sum())
    d2 = float((ratios**2).sum())
    return d1**2 + 2.0 * d2


def ridge_second_term_expectation(model: PopulationModel, lam: float) -> float:
    """E[||Sigma_lambda^{-1/2}(X bias_lambda(X) - lam beta_lambda)||^2], exact."""
    if model.design.kind != DISCRETE:
        raise UnavailableConstantError(
            "exact ridge second-term expectation needs a discrete design"
        )
    sigma = model.second_moment()
    root_l = matcore.inv_sqrt(matcore.regularize(sigma, lam))
    beta_l = ridge_target(model, lam)
    gap = model.beta - beta_l
    atoms = model.design.atoms
    vecs = (atoms * (atoms @ gap)[:, None] - lam * beta_l) @ root_l
    return model.design.expect(np.einsum("ij,ij->i", vecs, vecs))


# ---------------------------------------------------------------------------
# JSON model specs.


def model_from_dict(doc: dict) -> PopulationModel:
    """Build a model from a JSON document.

    Schema:
      design: {kind: "discrete-atoms", atoms: [[...],...], weights: [...]}
              | {kind: "gaussian", covariance: [[...],...]}
      beta:   [...]
      noise:  {kind: "gaussian"|"scaled-rademacher"|"zero", sigma: s}
      bias:   {kind: "zero"|"constant"|"linear"|"norm-squared"|"quadratic-form", ...}

    Atom weights are normalized on load, with a warning when off by > 1e-9.
    """
    dd = doc["design"]
    if dd["kind"] == DISCRETE:
        weights = np.asarray(dd["weights"], dtype=float)
        total = weights.sum()
        if abs(total - 1.0) > 1e-9:
            warnings.warn(
                f"atom weights sum to {total}; normalizing", stacklevel=2
            )
        design = DesignSpec(kind=DISCRETE, atoms=dd["atoms"], weights=weights / total)
    else:
        design = DesignSpec(kind=GAUSSIAN, covariance=dd["covariance"])
    noise_doc = doc.get("noise", {"kind": "zero"})
    noise = NoiseSpec(kind=noise_doc.get("kind", "zero"), sigma=noise_doc.get("sigma", 0.0))
    bias = orthogonalize_bias(design, doc.get("bias", {"kind": "zero"}))
    return PopulationModel(design=design, beta=doc["beta"], noise=noise, bias=bias)


def load_model(path) -> PopulationModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
