"""Symmetric-matrix primitives shared by every other module.

All matrices are dense symmetric numpy arrays.  Matrices are stored
symmetric-canonically: every constructor symmetrizes via (M + M.T)/2 so that
entries[i, j] == entries[j, i] exactly.  Inverse square roots go through an
explicit eigendecomposition (not Cholesky) because downstream code needs
symmetric roots and the spectrum anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    NumericalFailureError,
    PsdViolationError,
    SingularMatrixError,
)

# Relative singularity / PSD tolerance.  Eigenvalues in [-TOL_PSD*lmax, 0) are
# clamped to zero; anything more negative is an error, not a matrix.
TOL_PSD = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition with eigenvalues sorted nonincreasing."""

    eigenvalues: np.ndarray  # shape (d,), nonincreasing
    eigenvectors: np.ndarray  # shape (d, d), orthonormal columns

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return symmetrize(v @ np.diag(self.eigenvalues) @ v.T)


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return the symmetric-canonical copy (M + M.T)/2 of a square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    return (m + m.T) / 2.0


def weighted_norm(x: np.ndarray, m: np.ndarray) -> float:
    """||x||_M = sqrt(x' M x) for PSD M."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    if x.ndim != 1 or m.shape != (x.size, x.size):
        raise DimensionMismatchError(
            f"vector of length {x.size} vs matrix of shape {m.shape}"
        )
    q = float(x @ m @ x)
    scale = max(float(np.abs(m).max(initial=0.0)) * float(x @ x), 1.0)
    if q < -TOL_PSD * scale:
        raise PsdViolationError(f"x'Mx = {q} is negative beyond tolerance")
    return float(np.sqrt(max(q, 0.0)))


def sym_eig(m: np.ndarray) -> Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing."""
    m = symmetrize(m)
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    # eigh returns ascending order
    return Spectrum(eigenvalues=vals[::-1].copy(), eigenvectors=vecs[:, ::-1].copy())


def _psd_eigenvalues(spec: Spectrum, context: str) -> np.ndarray:
    vals = spec.eigenvalues
    lmax = max(float(vals[0]), 0.0)
    floor = -TOL_PSD * max(lmax, 1.0)
    if vals[-1] < floor:
        raise PsdViolationError(
            f"{context}: eigenvalue {vals[-1]} below PSD tolerance {floor}"
        )
    return np.clip(vals, 0.0, None)


def inv_sqrt(m: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Symmetric inverse square root M^{-1/2} of a PD matrix.

    Raises SingularMatrixError when lambda_min <= floor (default
    TOL_PSD * lambda_max); the theorems conditioned on invertibility must
    fail loudly rather than pseudo-invert.
    """
    spec = sym_eig(m)
    vals = _psd_eigenvalues(spec, "inv_sqrt")
    if floor is None:
        floor = TOL_PSD * max(spec.lambda_max, 0.0)
    if vals[-1] <= floor:
        raise SingularMatrixError(
            f"inv_sqrt: smallest eigenvalue {vals[-1]} <= floor {floor}",
            offending_eigenvalue=float(vals[-1]),
        )
    v = spec.eigenvectors
    return symmetrize(v @ np.diag(1.0 / np.sqrt(vals)) @ v.T)


def sym_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric square root M^{1/2} of a PSD matrix."""
    spec = sym_eig(m)
    vals = _psd_eigenvalues(spec, "sym_sqrt")
    v = spec.eigenvectors
    return symmetrize(v @ np.diag(np.sqrt(vals)) @ v.T)


def solve_psd(m: np.ndarray, b: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Solve M z = b for PD symmetric M through its eigendecomposition."""
    spec = sym_eig(m)
    vals = _psd_eigenvalues(spec, "solve_psd")
    if floor is None:
        floor = TOL_PSD * max(spec.lambda_max, 0.0)
    if vals[-1] <= floor:
        raise SingularMatrixError(
            f"solve_psd: smallest eigenvalue {vals[-1]} <= floor {floor}",
            offending_eigenvalue=float(vals[-1]),
        )
    v = spec.eigenvectors
    return v @ ((v.T @ b) / vals[:, None] if np.ndim(b) == 2 else (v.T @ b) / vals)


def empirical_second_moment(x: np.ndarray) -> np.ndarray:
    """(1/n) X'X for an n-by-d sample matrix X; PSD by construction."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionMismatchError(f"expected an n x d matrix with n >= 1, got {x.shape}")
    return symmetrize(x.T @ x / x.shape[0])


def regularize(m: np.ndarray, lam: float) -> np.ndarray:
    """M + lam*I; shifts every eigenvalue by exactly lam."""
    if lam < 0:
        raise ValueError(f"regularization level must be nonnegative, got {lam}")
    m = symmetrize(m)
    return m + lam * np.eye(m.shape[0])


def spectral_norm(m: np.ndarray) -> float:
    return float(np.abs(sym_eig(m).eigenvalues).max())


def save_symmatrix(path, m: np.ndarray) -> None:
    """Dump a symmetric matrix to CSV, row-major, header '# symmatrix d=<dim>'."""
    m = symmetrize(m)
    np.savetxt(path, m, delimiter=",", header=f"symmatrix d={m.shape[0]}")


def load_symmatrix(path) -> np.ndarray:
    m = np.loadtxt(path, delimiter=",", ndmin=2)
    return symmetrize(m)
