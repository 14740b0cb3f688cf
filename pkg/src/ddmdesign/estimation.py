"""Treatment-effect estimation under randomized designs.

Bundles the potential-outcome bookkeeping around an experiment: the average
treatment effect, the inverse-probability-weighted (Horvitz-Thompson)
estimator, its mean-squared error both by simulation and in closed form,
and the variance/balance bounds that connect estimator quality to the
balance objective of the augmented design matrix.

Conventions
-----------
Assignments are +-1 vectors with ``Pr(z_i = +1) = p_i``.  The estimator
is linear in the treatment indicators ``T_i = (z_i + 1)/2``:

    tau_hat = (1/n) * (sum_{T_i=1} a_i/p_i - sum_{T_i=0} b_i/(1-p_i))
            = const + (1/n) * sum_i T_i * mu_i,
    mu_i    = a_i/p_i + b_i/(1-p_i).

Hence ``Var(tau_hat) = mu' Cov(T) mu / n**2`` where ``Cov(T)`` is the
covariance of the indicator vector — one quarter of the covariance of the
+-1 vector.  :func:`mse_closed_form` expects the indicator covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import validation
from .errors import InvalidInputError

__all__ = [
    "ExperimentInstance",
    "ate",
    "ht_estimate",
    "ht_replicates",
    "mse_monte_carlo",
    "mse_closed_form",
    "balance_robustness_bounds",
    "ridge_variance_bound",
]


@dataclass(frozen=True)
class ExperimentInstance:
    """Covariates, potential outcomes and assignment probabilities.

    Args:
        X: (n, d) covariate matrix.
        a: length-n outcomes under treatment.
        b: length-n outcomes under control.
        p: treatment probabilities, scalar or length n, strictly in (0, 1).
    """

    X: np.ndarray
    a: np.ndarray
    b: np.ndarray
    p: np.ndarray
    mu: np.ndarray = field(init=False)

    def __post_init__(self):
        X = validation.check_matrix(self.X, "X")
        n = X.shape[0]
        a = np.asarray(self.a, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        if a.size != n or b.size != n:
            raise InvalidInputError(
                f"outcome lengths ({a.size}, {b.size}) do not match "
                f"n = {n} covariate rows"
            )
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise InvalidInputError("outcomes must be finite")
        p = validation.check_probabilities(self.p, n)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "mu", a / p + b / (1.0 - p))

    @property
    def n(self) -> int:
        return self.a.size


def ate(inst: ExperimentInstance) -> float:
    """Average treatment effect ``(1/n) sum(a_i - b_i)``."""
    return float(np.mean(inst.a - inst.b))


def ht_estimate(z, inst: ExperimentInstance) -> float:
    """Horvitz-Thompson estimate of the ATE from one assignment."""
    z = validation.check_assignment(z, inst.n)
    treated = z > 0
    total = inst.a[treated] / inst.p[treated]
    total = total.sum() - (inst.b[~treated] / (1.0 - inst.p[~treated])).sum()
    return float(total / inst.n)


def _draw_assignments(design, reps, rng) -> np.ndarray:
    """(reps, n) assignments from a fitted design or a callable sampler.

    A design object is anything with ``sample(size)``; a callable must
    accept ``(rng, size)`` and return a (size, n) array.
    """
    if hasattr(design, "sample"):
        Z = np.asarray(design.sample(size=reps), dtype=float)
    else:
        Z = np.asarray(design(rng, reps), dtype=float)
    if Z.ndim != 2 or Z.shape[0] != reps:
        raise InvalidInputError(
            f"sampler returned shape {Z.shape}, expected ({reps}, n)"
        )
    return Z


def ht_replicates(design, inst: ExperimentInstance, reps,
                  rng=None) -> np.ndarray:
    """Vector of ``reps`` Horvitz-Thompson estimates under a design.

    Vectorized over replications; the workhorse behind
    :func:`mse_monte_carlo` and the unbiasedness / variance-bound checks.
    """
    rng = validation.check_rng(rng)
    reps = int(reps)
    if reps < 1:
        raise InvalidInputError("reps must be positive")
    Z = _draw_assignments(design, reps, rng)
    if Z.shape[1] != inst.n:
        raise InvalidInputError(
            f"sampler produced length-{Z.shape[1]} assignments for an "
            f"n = {inst.n} instance"
        )
    T = (Z + 1.0) / 2.0
    base = -np.sum(inst.b / (1.0 - inst.p))
    return (base + T @ inst.mu) / inst.n


def mse_monte_carlo(design, inst: ExperimentInstance, reps=2000,
                    rng=None) -> float:
    """Simulated mean-squared error ``(1/R) sum (tau_hat_r - tau)**2``."""
    reps = int(reps)
    if reps < 2:
        raise InvalidInputError("reps must be at least 2")
    estimates = ht_replicates(design, inst, reps, rng)
    return float(np.mean((estimates - ate(inst)) ** 2))


def mse_closed_form(cov_indicator, inst: ExperimentInstance) -> float:
    """Exact MSE ``mu' C mu / n**2`` from an indicator covariance ``C``.

    ``C`` is the n x n covariance of the treatment indicators
    ``(z + 1)/2``; divide a +-1 assignment covariance by 4 before passing
    it here.  For a Bernoulli design ``C = diag(p (1 - p))``.
    """
    C = validation.check_matrix(cov_indicator, "cov_indicator")
    n = inst.n
    if C.shape != (n, n):
        raise InvalidInputError(
            f"covariance shape {C.shape} does not match n = {n}"
        )
    return float(inst.mu @ C @ inst.mu) / n**2


def balance_robustness_bounds(alpha_mwu, phi) -> tuple[float, float]:
    """Covariate-balance and robustness norm bounds from one objective value.

    For an augmented design matrix with trade-off ``phi`` and achieved
    balance objective ``alpha_mwu``, the covariate-projected and raw
    assignment covariances satisfy

        ||Cov(X' z)|| <= alpha_mwu / (1 - phi),
        ||Cov(z)||    <= alpha_mwu / phi.

    Returns that pair; ``phi`` must lie strictly in (0, 1) for both parts
    to be meaningful.
    """
    alpha_mwu = float(alpha_mwu)
    phi = float(phi)
    if not 0.0 < phi < 1.0:
        raise InvalidInputError(
            f"phi must lie strictly in (0, 1) for the bound pair, "
            f"got {phi!r}"
        )
    if alpha_mwu <= 0:
        raise InvalidInputError(f"alpha_mwu must be positive, got {alpha_mwu!r}")
    return alpha_mwu / (1.0 - phi), alpha_mwu / phi


def ridge_variance_bound(inst: ExperimentInstance, alpha_mwu, phi) -> float:
    """Upper bound on ``n Var(tau_hat)`` for augmented-matrix designs.

    Evaluates ``(alpha_mwu / n) * mu' (phi I + (1 - phi) X X')^{-1} mu``,
    the closed-form optimum of the ridge-regression bound: the variance is
    controlled by how well ``mu`` is explained by the covariates, with
    ``phi`` trading the residual against the coefficient norm.  Rows of
    ``X`` are expected on the same scale used to build the augmented
    matrix (norms capped at 1).
    """
    alpha_mwu = float(alpha_mwu)
    phi = float(phi)
    if not 0.0 < phi < 1.0:
        raise InvalidInputError(
            f"phi must lie strictly in (0, 1), got {phi!r}"
        )
    if alpha_mwu <= 0:
        raise InvalidInputError(f"alpha_mwu must be positive, got {alpha_mwu!r}")
    n = inst.n
    K = phi * np.eye(n) + (1.0 - phi) * (inst.X @ inst.X.T)
    return alpha_mwu / n * float(inst.mu @ np.linalg.solve(K, inst.mu))
