"""First/second moments of processed gradients and their spectra.

All scores are built from the quantities here: the row mean, the second-moment
matrices of the raw and unit-normalized rows, the smoothed (strictly
invertible) variant, and the eigendecomposition / spectral entropy of the
normalized second moment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import ProcessedGradients

EIGENVALUE_FLOOR = 1e-12  # spectrum entries below this count as exact zeros
SYMMETRY_TOL = 1e-8


@dataclass
class MomentBundle:
    mu: np.ndarray           # (d,) mean row
    sigma: np.ndarray        # (d, d) second moment of h rows
    sigma_tilde: np.ndarray  # (d, d) second moment of unit rows, trace 1
    nu: float
    sigma_hat: np.ndarray    # sigma_tilde + (nu/d) I
    eigenvalues: np.ndarray  # of sigma_tilde, descending
    eigenvectors: np.ndarray  # orthonormal columns, aligned with eigenvalues


def mean(rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] == 0:
        raise ValueError("empty input")
    return rows.mean(axis=0)


def second_moment(rows: np.ndarray, normalized: bool = False) -> np.ndarray:
    """(1/k) R^T R over the k rows; with `normalized` the rows must be unit."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] == 0:
        raise ValueError("empty input")
    if normalized:
        norms = np.linalg.norm(rows, axis=1)
        if np.abs(norms - 1.0).max() > 1e-9:
            raise ValueError("normalized=True but rows are not unit norm")
    return rows.T @ rows / rows.shape[0]


def smooth(sigma_tilde: np.ndarray, nu: float) -> np.ndarray:
    """Add (nu/d) to the diagonal, making the matrix strictly invertible."""
    if nu <= 0:
        raise ValueError("nu must be > 0")
    sigma_tilde = np.asarray(sigma_tilde, dtype=np.float64)
    d = sigma_tilde.shape[0]
    return sigma_tilde + (nu / d) * np.eye(d)


def eig_sym(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Backed by LAPACK via numpy.linalg.eigh; the input is symmetrized after a
    tolerance check so tiny accumulation asymmetry cannot leak into results.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    asym = np.abs(matrix - matrix.T).max()
    if asym > SYMMETRY_TOL * max(1.0, np.abs(matrix).max()):
        raise ValueError(f"matrix not symmetric (max asymmetry {asym:.3e})")
    vals, vecs = np.linalg.eigh((matrix + matrix.T) / 2.0)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def spectral_entropy(eigenvalues: np.ndarray) -> float:
    """-sum(lam * ln lam) with 0*ln 0 = 0; entries below the floor are zeros."""
    lam = np.asarray(eigenvalues, dtype=np.float64).copy()
    lam[lam < EIGENVALUE_FLOOR] = 0.0
    pos = lam[lam > 0.0]
    return float(-(pos * np.log(pos)).sum())


def moment_bundle(proc: ProcessedGradients, nu: float = 1e-3) -> MomentBundle:
    """All moment quantities for one processed set."""
    mu = mean(proc.rows_h)
    sigma = second_moment(proc.rows_h)
    sigma_tilde = second_moment(proc.rows_h_tilde)
    sigma_hat = smooth(sigma_tilde, nu)
    vals, vecs = eig_sym(sigma_tilde)
    return MomentBundle(
        mu=mu,
        sigma=sigma,
        sigma_tilde=sigma_tilde,
        nu=nu,
        sigma_hat=sigma_hat,
        eigenvalues=vals,
        eigenvectors=vecs,
    )
