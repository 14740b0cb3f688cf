"""Input validation helpers.

Public entry points funnel their array arguments through these checks so the
algorithm code can assume clean, finite ``float64`` inputs.  Each helper
returns the validated (and possibly converted) value, in the style of
scikit-learn's ``check_array``.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, UnsupportedDesignError

#: Absolute tolerance when asserting a matrix is symmetric.
SYM_TOL = 1e-9

#: Eigenvalue slack when asserting positive semidefiniteness.
PSD_TOL = 1e-8

#: Slack on the unit cap for design-matrix column norms.
NORM_TOL = 1e-9

#: Distance from +-1 below which a walk coordinate counts as pinned.
ALIVE_TOL = 1e-9

#: Relative singular-value cutoff for null-space extraction.
NULLSPACE_RCOND = 1e-10

#: Step lengths below this in both directions mean the walk is stuck.
STALL_TOL = 1e-12


def check_rng(seed=None) -> np.random.Generator:
    """Return a numpy ``Generator`` from a seed, an existing generator, or
    ``None`` (fresh OS entropy)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_matrix(M, name="matrix") -> np.ndarray:
    """Validate a nonempty, finite, 2-D float array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got ndim={M.ndim}")
    if M.size == 0:
        raise InvalidInputError(f"{name} must be nonempty")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return M


def check_design_matrix(B, norm_tol=NORM_TOL, name="B") -> np.ndarray:
    """Validate an m x n matrix whose columns all have Euclidean norm <= 1.

    The unit cap is the feasibility contract every walk in this package
    relies on; matrices that exceed it should go through
    :func:`ddmdesign.linalg.normalize_columns` first.
    """
    B = check_matrix(B, name)
    worst = float(np.linalg.norm(B, axis=0).max())
    if worst > 1.0 + norm_tol:
        raise InvalidInputError(
            f"{name} has a column of norm {worst:.6g} > 1 "
            f"(tolerance {norm_tol:g}); rescale with normalize_columns first"
        )
    return B


def check_probabilities(p, n=None, name="p") -> np.ndarray:
    """Validate a vector of treatment probabilities, strictly inside (0, 1).

    A scalar is broadcast to length ``n`` when ``n`` is given.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.ndim != 1:
        raise InvalidInputError(f"{name} must be a scalar or 1-D vector")
    if n is not None:
        if p.size == 1 and n > 1:
            p = np.full(n, p[0])
        elif p.size != n:
            raise InvalidInputError(
                f"{name} has length {p.size}, expected {n}"
            )
    if not np.all(np.isfinite(p)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise InvalidInputError(
            f"{name} must lie strictly inside (0, 1); "
            f"got range [{p.min():.6g}, {p.max():.6g}]"
        )
    return p


def check_scalar_probability(p, name="p") -> float:
    """Validate a single shared treatment probability.

    Accepts a scalar or a constant vector.  Heterogeneous vectors raise
    :class:`UnsupportedDesignError`: the classical designs that call this
    helper (complete randomization, blocking, rerandomization) have no
    well-defined analogue for per-unit probabilities.
    """
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be a finite probability")
    if arr.size > 1 and np.ptp(arr) > 0.0:
        raise UnsupportedDesignError(
            f"{name} is heterogeneous; this design only supports a single "
            "shared treatment probability"
        )
    val = float(arr[0])
    if not 0.0 < val < 1.0:
        raise InvalidInputError(
            f"{name} must lie strictly inside (0, 1); got {val:.6g}"
        )
    return val


def check_assignment(z, n=None, name="z") -> np.ndarray:
    """Validate a +-1 assignment vector."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D")
    if n is not None and z.size != n:
        raise InvalidInputError(f"{name} has length {z.size}, expected {n}")
    if not np.all(np.abs(z) == 1.0):
        raise InvalidInputError(f"{name} must have +-1 entries")
    return z


def check_symmetric(S, tol=SYM_TOL, name="matrix") -> np.ndarray:
    """Validate (near-)symmetry and return the exactly symmetrized matrix."""
    S = check_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise InvalidInputError(f"{name} must be square, got {S.shape}")
    scale = max(1.0, float(np.abs(S).max()))
    gap = float(np.abs(S - S.T).max())
    if gap > tol * scale:
        raise InvalidInputError(
            f"{name} is not symmetric (max asymmetry {gap:.3g})"
        )
    return (S + S.T) / 2.0
