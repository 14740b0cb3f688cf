"""Weighted random-walk sampler for low-discrepancy assignments.

Given a design matrix ``B`` (unit-capped column norms), a positive definite
weight matrix ``W`` and per-unit treatment probabilities ``p``, the walk
starts from the fractional point ``2 p - 1`` and takes randomized steps until
every coordinate is pinned at +-1.  Each step direction lives in the alive
coordinates, is orthogonal to the "big" rows of the alive submatrix (rows
whose restricted norm exceeds the threshold ``1 + 1/epsilon``), and maximizes
the quadratic form ``(1+eps) diag(G) - G`` built from the remaining "light"
rows, where ``G`` is the weighted Gram matrix of the light rows.  Step signs
are drawn so the walk is a martingale, which makes the output mean exactly
``2 p - 1`` and the per-step covariance controllable row by row.

The resulting sampler satisfies the weighted covariance certificate

    <Cov(B z), W>  <=  (1 + eps) * min{U_W, 1 + 1/eps} * tr(W),

with ``U_W = <B diag(4 p (1-p)) B^T, W>`` the independent-coin cross moment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import validation
from .errors import (
    DegenerateStateError,
    InvalidInputError,
    RunawayWalkError,
    StalledWalkError,
)

__all__ = [
    "OracleConfig",
    "RowPartition",
    "classify_rows",
    "update_direction",
    "step_size",
    "oracle_sample",
]


@dataclass(frozen=True)
class OracleConfig:
    """Tuning knobs for the walk.

    Attributes:
        epsilon: row-classification parameter in (0, 1); big rows are those
            with restricted squared norm strictly above ``1 + 1/epsilon``.
        alive_tol: distance from +-1 below which a coordinate counts as
            pinned (and is snapped exactly onto the face).
        max_iterations: safety cap on walk steps; ``None`` means ``n``,
            which the stepping rule already guarantees.
    """

    epsilon: float = 0.2
    alive_tol: float = validation.ALIVE_TOL
    max_iterations: int | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidInputError(
                f"epsilon must lie in (0, 1), got {self.epsilon!r}"
            )
        if not 0.0 < self.alive_tol <= 1e-6:
            raise InvalidInputError(
                f"alive_tol must lie in (0, 1e-6], got {self.alive_tol!r}"
            )
        if self.max_iterations is not None and self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be positive")


@dataclass
class RowPartition:
    """Big/light split of the alive submatrix plus the step quadratic form.

    ``big_rows``/``light_rows`` index rows of the full matrix; ``big_block``
    and ``light_block`` are the corresponding alive-restricted submatrices.
    ``light_weights`` is the weight of each light row (the diagonal of W
    restricted to the light rows; the walk always runs in a rotated basis
    where W is diagonal).  ``quad_form`` is the k x k matrix
    ``(1+eps) diag(G) - G`` with ``G`` the weighted Gram matrix of the light
    rows over alive columns.
    """

    big_rows: np.ndarray
    light_rows: np.ndarray
    big_block: np.ndarray
    light_block: np.ndarray
    light_weights: np.ndarray
    quad_form: np.ndarray


def classify_rows(B_alive, epsilon, weights=None) -> RowPartition:
    """Split rows of an alive-restricted matrix into big and light.

    A row is big when its squared norm over the alive columns is strictly
    greater than ``1 + 1/epsilon``; the boundary case stays light.  ``weights``
    are per-row weights (defaults to all ones) entering the light-row Gram
    matrix and the step quadratic form.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    B_alive = validation.check_matrix(B_alive, "B_alive")
    m = B_alive.shape[0]
    if weights is None:
        weights = np.ones(m)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (m,):
            raise InvalidInputError(
                f"weights must have length {m}, got shape {weights.shape}"
            )
    row_sq = np.einsum("ij,ij->i", B_alive, B_alive)
    threshold = 1.0 + 1.0 / epsilon
    big_mask = row_sq > threshold
    big_rows = np.flatnonzero(big_mask)
    light_rows = np.flatnonzero(~big_mask)
    light_block = B_alive[light_rows]
    light_weights = weights[light_rows]
    quad_form = _step_quad_form(light_block, light_weights, epsilon)
    return RowPartition(
        big_rows=big_rows,
        light_rows=light_rows,
        big_block=B_alive[big_rows],
        light_block=light_block,
        light_weights=light_weights,
        quad_form=quad_form,
    )


def _step_quad_form(light_block, light_weights, epsilon) -> np.ndarray:
    """``(1+eps) diag(G) - G`` for G the weighted light-row Gram matrix."""
    k = light_block.shape[1]
    if light_block.shape[0] == 0:
        return np.zeros((k, k))
    G = (light_block * light_weights[:, None]).T @ light_block
    return _quad_form_from_gram(G, epsilon)


def _quad_form_from_gram(G, epsilon) -> np.ndarray:
    M = -G
    idx = np.arange(G.shape[0])
    M[idx, idx] += (1.0 + epsilon) * G[idx, idx]
    return (M + M.T) / 2.0


def _top_direction(quad_form, big_block, rcond=validation.NULLSPACE_RCOND):
    """Unit maximizer of the quadratic form orthogonal to the big rows.

    Returns the top eigenvector of the quadratic form projected onto
    null(big_block); with no big rows this is a plain top eigenvector.
    """
    k = quad_form.shape[0]
    if big_block is not None and big_block.shape[0] > 0:
        basis = scipy.linalg.null_space(big_block, rcond=rcond)
        if basis.shape[1] == 0:
            raise DegenerateStateError(
                "the big-row constraints leave no admissible direction "
                f"({big_block.shape[0]} constraints over {k} alive "
                "coordinates); input likely violates the unit column-norm cap"
            )
        if basis.shape[1] == 1:
            y = basis[:, 0]
        else:
            projected = basis.T @ quad_form @ basis
            projected = (projected + projected.T) / 2.0
            r = projected.shape[0]
            _, vec = scipy.linalg.eigh(projected, subset_by_index=[r - 1, r - 1])
            y = basis @ vec[:, 0]
    elif k == 1:
        return np.ones(1)
    else:
        _, vec = scipy.linalg.eigh(quad_form, subset_by_index=[k - 1, k - 1])
        y = vec[:, 0]
    norm = np.linalg.norm(y)
    if norm <= 0.0:
        raise DegenerateStateError("direction collapsed to the zero vector")
    return y / norm


def update_direction(partition: RowPartition, alive, n,
                     rcond=validation.NULLSPACE_RCOND) -> np.ndarray:
    """Full-length unit step direction for the current walk state.

    Args:
        partition: output of :func:`classify_rows` for the alive submatrix.
        alive: indices of alive coordinates (the columns of the submatrix).
        n: total number of coordinates.

    Returns:
        A unit vector supported on ``alive``, orthogonal to every big row
        and maximizing the light-row quadratic form over that null space.
    """
    alive = np.asarray(alive, dtype=int)
    if alive.size == 0:
        raise InvalidInputError("alive set must be nonempty")
    if partition.quad_form.shape[0] != alive.size:
        raise InvalidInputError(
            "partition was built for a different alive-set size"
        )
    y_alive = _top_direction(partition.quad_form, partition.big_block, rcond)
    y = np.zeros(n)
    y[alive] = y_alive
    return y


def _step_bounds(z, y):
    """Largest feasible step lengths (gamma_plus, gamma_minus) along +-y."""
    moving = y != 0.0
    if not np.any(moving):
        raise DegenerateStateError("direction is zero on every coordinate")
    zs = z[moving]
    ys = y[moving]
    pos = np.where(ys > 0, (1.0 - zs) / ys, (-1.0 - zs) / ys)
    neg = np.where(ys > 0, (1.0 + zs) / ys, (1.0 - zs) / (-ys))
    return float(pos.min()), float(neg.min())


def step_size(z, y, rng) -> float:
    """Signed step length with the zero-mean two-sided rule.

    ``gamma_plus`` (``gamma_minus``) is the largest step along ``+y``
    (``-y``) keeping ``z`` inside the cube.  Returns ``+gamma_plus`` with
    probability ``gamma_minus / (gamma_plus + gamma_minus)``, otherwise
    ``-gamma_minus``, so the conditional mean step is exactly zero and at
    least one coordinate lands on a face of the cube.
    """
    rng = validation.check_rng(rng)
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    gamma_plus, gamma_minus = _step_bounds(z, y)
    if gamma_plus < validation.STALL_TOL and gamma_minus < validation.STALL_TOL:
        raise StalledWalkError(
            "both feasible step lengths are below "
            f"{validation.STALL_TOL:g}; the walk cannot move"
        )
    if rng.random() < gamma_minus / (gamma_plus + gamma_minus):
        return gamma_plus
    return -gamma_minus


def oracle_sample(B, W, p, config: OracleConfig | None = None,
                  rng=None) -> np.ndarray:
    """One assignment from the weighted walk.

    ``W`` may be any symmetric positive definite matrix: it is
    eigendecomposed and the walk runs on the rotated matrix ``V^T B`` with
    the eigenvalues as diagonal row weights (the rotation preserves column
    norms, so every precondition survives it).

    Returns a vector in {-1, +1}^n whose mean over repeated calls is
    exactly ``2 p - 1``.
    """
    config = config or OracleConfig()
    rng = validation.check_rng(rng)
    B = validation.check_design_matrix(B)
    p = validation.check_probabilities(p, B.shape[1])
    W = validation.check_symmetric(W, name="W")
    if W.shape[0] != B.shape[0]:
        raise InvalidInputError(
            f"W is {W.shape} but B has {B.shape[0]} rows"
        )
    eigvals, eigvecs = np.linalg.eigh(W)
    if eigvals[0] <= 0.0:
        raise InvalidInputError(
            f"W must be positive definite (min eigenvalue {eigvals[0]:.3g})"
        )
    return _walk_diagonal(eigvecs.T @ B, eigvals, p, config, rng)


def _walk_diagonal(Bw, row_weights, p, config, rng) -> np.ndarray:
    """Run the walk for a matrix with per-row diagonal weights.

    This is the hot loop: the light-row Gram matrix over alive columns is
    maintained incrementally (columns are deleted as coordinates pin; rows
    move from big to light as their restricted norms shrink, never the other
    way), so each iteration costs one top-eigenpair solve plus O(m + k^2)
    bookkeeping.
    """
    m, n = Bw.shape
    eps = config.epsilon
    tol = config.alive_tol
    threshold = 1.0 + 1.0 / eps
    max_iter = config.max_iterations if config.max_iterations is not None else n

    z = 2.0 * p - 1.0
    # Coordinates starting within alive_tol of a face are pinned immediately.
    z[z >= 1.0 - tol] = 1.0
    z[z <= -1.0 + tol] = -1.0
    alive = np.flatnonzero(np.abs(z) < 1.0)

    if alive.size == 0:
        return z

    B_alive = Bw[:, alive]
    row_sq = np.einsum("ij,ij->i", B_alive, B_alive)
    big_mask = row_sq > threshold
    light_idx = np.flatnonzero(~big_mask)
    Vl = B_alive[light_idx]
    G = (Vl * row_weights[light_idx, None]).T @ Vl

    for _ in range(max_iter):
        if alive.size == 0:
            break
        big_idx = np.flatnonzero(big_mask)
        big_block = Bw[np.ix_(big_idx, alive)] if big_idx.size else None
        quad = _quad_form_from_gram(G, eps)
        y_alive = _top_direction(quad, big_block)

        y = np.zeros(n)
        y[alive] = y_alive
        gamma = step_size(z, y, rng)
        z[alive] += gamma * y_alive
        np.clip(z, -1.0, 1.0, out=z)

        za = z[alive]
        dead_local = np.abs(za) >= 1.0 - tol
        z[alive[dead_local]] = np.where(za[dead_local] > 0, 1.0, -1.0)
        if not np.any(dead_local):
            raise StalledWalkError(
                "a full step failed to pin any coordinate; "
                "this indicates numerically inconsistent input"
            )

        dead_cols = alive[dead_local]
        keep = ~dead_local
        row_sq -= np.einsum("ij,ij->i", Bw[:, dead_cols], Bw[:, dead_cols])
        alive = alive[keep]
        G = G[np.ix_(keep, keep)]
        crossing = np.flatnonzero(big_mask & (row_sq <= threshold))
        if crossing.size and alive.size:
            Vc = Bw[np.ix_(crossing, alive)]
            G = G + (Vc * row_weights[crossing, None]).T @ Vc
        big_mask[crossing] = False

    if alive.size:
        raise RunawayWalkError(
            f"walk did not terminate within {max_iter} iterations"
        )
    return z
