"""Multiplicative-weights outer loop producing a finite assignment mixture.

The loop keeps a positive definite weight matrix ``W`` over the balance
space, repeatedly asks the walk oracle for assignments that are good against
the current ``W``, reweights ``W`` by exponentiating the accumulated
empirical covariances, and returns the visited assignments as a mixture with
weights proportional to the per-iteration step sizes.  For a matrix with
unit-capped column norms the mixture ``D`` satisfies

    ||Cov_{z~D}(B z)||  <=  (1+eps)^2 * min{ ||B diag(4p(1-p)) B^T||, 1 + 1/eps }

up to Monte-Carlo error in the covariance estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import validation
from .errors import InvalidInputError
from .linalg import empirical_covariance, matrix_exponential, operator_norm
from .oracle import OracleConfig, _walk_diagonal

__all__ = [
    "MWUConfig",
    "DesignDistribution",
    "mwu_build",
    "mwu_sample",
    "ddm_objective",
    "ddm_objective_with_stderr",
    "bernoulli_objective",
    "theoretical_balance_bound",
]


@dataclass(frozen=True)
class MWUConfig:
    """Outer-loop parameters.

    ``iterations`` is the fixed outer budget (the default mode).  Setting
    ``eta`` switches to threshold mode: the loop runs until the accumulated
    step weight reaches ``2 ln(m) / (epsilon * eta)``, with ``iterations``
    then acting only as a safety cap.  ``cov_samples`` oracle draws per
    iteration feed the empirical covariance; when its operator norm falls
    below ``cov_floor`` the step size is capped at ``alpha_max`` instead of
    blowing up (a zero-covariance oracle output means the weight matrix
    needs no reweighting in any direction).
    """

    epsilon: float = 0.2
    iterations: int = 200
    cov_samples: int = 50
    eta: float | None = None
    alpha_max: float = 10.0
    cov_floor: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidInputError(
                f"epsilon must lie in (0, 1), got {self.epsilon!r}"
            )
        if self.iterations < 1:
            raise InvalidInputError("iterations must be positive")
        if self.cov_samples < 1:
            raise InvalidInputError("cov_samples must be positive")
        if self.eta is not None and self.eta <= 0.0:
            raise InvalidInputError("eta must be positive when given")
        if self.alpha_max <= 0.0:
            raise InvalidInputError("alpha_max must be positive")


@dataclass(frozen=True)
class DesignDistribution:
    """A finite mixture over +-1 assignments.

    Attributes:
        atoms: (T, n) array, one assignment per row.
        weights: mixture probabilities, ``step_sizes / total_weight``.
        step_sizes: the per-iteration step sizes the weights derive from.
        total_weight: sum of the step sizes.
    """

    atoms: np.ndarray
    weights: np.ndarray
    step_sizes: np.ndarray
    total_weight: float

    def __post_init__(self):
        if self.atoms.ndim != 2 or self.atoms.shape[0] != self.weights.size:
            raise InvalidInputError("atoms/weights shape mismatch")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise InvalidInputError("mixture weights must sum to 1")

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]


def mwu_build(B, p, config: MWUConfig | None = None,
              oracle_config: OracleConfig | None = None,
              rng=None) -> DesignDistribution:
    """Run the outer loop and return the assignment mixture.

    Per iteration: eigendecompose the current weight matrix once, draw
    ``cov_samples`` independent walk samples against it, estimate their
    covariance in the balance space, take step size
    ``epsilon / (6 * ||estimate||)`` (capped when the estimate vanishes),
    and reweight via the exponentiated accumulator.  The first sample of
    each iteration is recorded as that iteration's mixture atom.

    Identical seeds reproduce the distribution bit for bit.
    """
    config = config or MWUConfig()
    if oracle_config is None:
        oracle_config = OracleConfig(epsilon=config.epsilon)
    rng = validation.check_rng(rng)
    B = validation.check_design_matrix(B)
    p = validation.check_probabilities(p, B.shape[1])
    m, n = B.shape
    z0 = 2.0 * p - 1.0

    if config.eta is None:
        weight_target = None
    else:
        weight_target = 2.0 * np.log(m) / (config.epsilon * config.eta)

    accumulator = np.zeros((m, m))
    W = np.eye(m)
    atoms = []
    step_sizes = []
    total = 0.0

    for _ in range(config.iterations):
        if weight_target is not None and total >= weight_target:
            break
        eigvals, eigvecs = np.linalg.eigh(W)
        if eigvals[0] <= 0.0:
            raise InvalidInputError(
                "weight matrix lost positive definiteness "
                f"(min eigenvalue {eigvals[0]:.3g})"
            )
        B_rot = eigvecs.T @ B
        samples = np.empty((config.cov_samples, n))
        for k in range(config.cov_samples):
            samples[k] = _walk_diagonal(B_rot, eigvals, p, oracle_config, rng)
        cov_est = empirical_covariance(samples, B, z0)
        norm = operator_norm(cov_est)
        if norm < config.cov_floor:
            alpha_t = config.alpha_max
        else:
            alpha_t = config.epsilon / (6.0 * norm)
        atoms.append(samples[0])
        step_sizes.append(alpha_t)
        total += alpha_t
        accumulator += alpha_t * cov_est
        W = matrix_exponential(accumulator)

    step_sizes = np.asarray(step_sizes)
    weights = step_sizes / total
    return DesignDistribution(
        atoms=np.asarray(atoms),
        weights=weights,
        step_sizes=step_sizes,
        total_weight=float(total),
    )


def mwu_sample(dist: DesignDistribution, rng=None, size=None) -> np.ndarray:
    """Draw assignment(s) from the mixture.

    Returns one vector when ``size`` is ``None``, else a (size, n) array.
    """
    rng = validation.check_rng(rng)
    if size is None:
        idx = rng.choice(dist.n_atoms, p=dist.weights)
        return dist.atoms[idx].copy()
    idx = rng.choice(dist.n_atoms, size=int(size), p=dist.weights)
    return dist.atoms[idx].copy()


def ddm_objective(samples, B, z0) -> float:
    """Monte-Carlo balance objective: ``||empirical Cov(B z)||``.

    ``samples`` are assignments (one per row) from the design under
    evaluation, ``z0 = 2 p - 1`` the feasible mean they are centered at.
    """
    Z = np.asarray(samples, dtype=float)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise InvalidInputError("need at least two samples")
    return operator_norm(empirical_covariance(Z, B, z0))


def ddm_objective_with_stderr(samples, B, z0):
    """Balance objective plus a delta-method standard error.

    The objective equals the mean of ``(v^T B (z - z0))^2`` along the top
    eigendirection ``v`` of the empirical covariance; the standard error is
    the sample standard error of those per-draw values.  Returns
    ``(value, stderr)``.
    """
    Z = np.asarray(samples, dtype=float)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise InvalidInputError("need at least two samples")
    C = empirical_covariance(Z, B, z0)
    _, vecs = np.linalg.eigh(C)
    v = vecs[:, -1]
    proj = (Z - np.asarray(z0, dtype=float)) @ (np.asarray(B, dtype=float).T @ v)
    contributions = proj**2
    value = float(contributions.mean())
    stderr = float(contributions.std(ddof=1) / np.sqrt(Z.shape[0]))
    return value, stderr


def bernoulli_objective(B, p) -> float:
    """Closed-form balance objective of independent coin flips:
    ``||B diag(4 p (1-p)) B^T||``.

    Valid for any matrix; the unit-column-norm cap matters only for the
    guarantees of the walk-based designs, not for this closed form.
    """
    B = validation.check_matrix(B, "B")
    p = validation.check_probabilities(p, B.shape[1])
    variances = 4.0 * p * (1.0 - p)
    return operator_norm((B * variances) @ B.T)


def theoretical_balance_bound(B, p, epsilon=0.2) -> float:
    """Certified objective bound of the mixture built by :func:`mwu_build`:
    ``(1+eps)^2 * min{Bernoulli objective, 1 + 1/eps}``."""
    if not 0.0 < epsilon < 1.0:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    cap = min(bernoulli_objective(B, p), 1.0 + 1.0 / epsilon)
    return (1.0 + epsilon) ** 2 * cap
