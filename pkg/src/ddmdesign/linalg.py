"""Dense linear-algebra primitives shared by the walks and designs.

These are thin, validated wrappers over LAPACK (via numpy); the algorithmic
content of the package lives in :mod:`ddmdesign.oracle`, :mod:`ddmdesign.mwu`
and :mod:`ddmdesign.designs`.
"""

from __future__ import annotations

import numpy as np

from . import validation
from .errors import InvalidInputError


def operator_norm(S) -> float:
    """Spectral norm of a symmetric matrix (largest absolute eigenvalue)."""
    S = validation.check_symmetric(S, name="S")
    w = np.linalg.eigvalsh(S)
    return float(max(abs(w[0]), abs(w[-1])))


def matrix_exponential(S) -> np.ndarray:
    """``exp(S)`` for symmetric ``S`` via full eigendecomposition.

    The result is symmetric positive definite.  ``exp(0)`` round-trips to the
    identity up to the eigensolver's orthogonality error (~1e-15 per entry).
    """
    S = validation.check_symmetric(S, name="S")
    w, V = np.linalg.eigh(S)
    E = (V * np.exp(w)) @ V.T
    return (E + E.T) / 2.0


def empirical_covariance(samples, B, z0) -> np.ndarray:
    """Average of ``B (z - z0) (z - z0)^T B^T`` over the sample rows.

    Args:
        samples: array of assignments, one per row (a single vector is
            treated as one sample).
        B: m x n matrix mapping assignments to the balance space.
        z0: the common mean ``2 p - 1`` the samples are centered at.

    Returns:
        A symmetric positive semidefinite m x m matrix.
    """
    Z = np.asarray(samples, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.ndim != 2 or Z.shape[0] < 1:
        raise InvalidInputError("samples must be a nonempty 2-D array")
    B = validation.check_matrix(B, "B")
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (B.shape[1],) or Z.shape[1] != B.shape[1]:
        raise InvalidInputError(
            f"incompatible shapes: B is {B.shape}, samples have "
            f"{Z.shape[1]} coordinates, z0 has {z0.shape}"
        )
    Y = (Z - z0) @ B.T
    C = (Y.T @ Y) / Z.shape[0]
    return (C + C.T) / 2.0


def build_augmented_matrix(X, phi) -> np.ndarray:
    """Stack ``sqrt(phi) * I`` on top of ``sqrt(1 - phi) * X^T``.

    ``X`` is an n x d covariate matrix with row norms <= 1; the result is an
    (n + d) x n design matrix whose columns have norm <= 1, trading off
    robustness (the identity block, weight ``phi``) against covariate balance
    (the transposed covariates, weight ``1 - phi``).  The endpoints collapse:
    ``phi=1`` returns the bare identity and ``phi=0`` returns ``X^T``.
    """
    X = validation.check_matrix(X, "X")
    phi = float(phi)
    if not 0.0 <= phi <= 1.0:
        raise InvalidInputError(f"phi must lie in [0, 1], got {phi:.6g}")
    worst = float(np.linalg.norm(X, axis=1).max())
    if worst > 1.0 + validation.NORM_TOL:
        raise InvalidInputError(
            f"X has a row of norm {worst:.6g} > 1; rescale first "
            "(e.g. normalize_columns(X.T).T)"
        )
    n = X.shape[0]
    if phi == 1.0:
        return np.eye(n)
    if phi == 0.0:
        return X.T.copy()
    return np.vstack([np.sqrt(phi) * np.eye(n), np.sqrt(1.0 - phi) * X.T])


def normalize_columns(M) -> np.ndarray:
    """Divide every entry by the maximum column norm.

    The single shared scale makes the largest column norm exactly 1 while
    preserving the relative geometry of the columns.  All-zero matrices have
    no such scale and are rejected.
    """
    M = validation.check_matrix(M, "M")
    scale = float(np.linalg.norm(M, axis=0).max())
    if scale <= 0.0:
        raise InvalidInputError("cannot normalize an all-zero matrix")
    return M / scale
