"""Randomized assignment designs behind a shared fit/sample interface.

Every design is a scikit-learn-style estimator: hyperparameters go to the
constructor, instance data (``B`` or covariates ``X``, probabilities ``p``)
goes to ``fit``, and ``sample(size)`` draws +-1 assignment vectors.  The
classical samplers are also exposed as module-level one-shot functions.

Designs
-------
- :class:`BernoulliDesign` — independent coin flips, the fully robust
  baseline.
- :class:`CompleteRandomization` — exactly ``round(n p)`` treated units,
  uniform over subsets (shared scalar ``p`` only).
- :class:`RandomizedBlockDesign` — two-level sort on the first two
  covariates into fixed blocks, complete randomization within each block.
- :class:`Rerandomization` — complete-randomization draws filtered through
  a Mahalanobis imbalance threshold calibrated on a pilot pool.
- :class:`GramSchmidtWalk` — the pivoted least-squares walk; feasible with
  balance objective at most 1 for any unit-capped matrix.
- :class:`MWUDesign` — the multiplicative-weights mixture from
  :mod:`ddmdesign.mwu`.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import validation
from .errors import (
    AcceptanceStallError,
    InvalidInputError,
    RunawayWalkError,
)
from .mwu import MWUConfig, mwu_build, mwu_sample
from .oracle import OracleConfig, step_size

__all__ = [
    "BaseDesign",
    "BernoulliDesign",
    "CompleteRandomization",
    "RandomizedBlockDesign",
    "Rerandomization",
    "GramSchmidtWalk",
    "MWUDesign",
    "bernoulli_sample",
    "complete_randomization_sample",
    "randomized_block_sample",
    "rerandomization_sample",
    "gsw_sample",
]


class BaseDesign(BaseEstimator):
    """Common sampling plumbing for assignment designs.

    Subclasses implement ``fit(...)`` (storing fitted state in trailing
    underscore attributes, including ``rng_``) and ``_sample_batch``.
    """

    def sample(self, size=None) -> np.ndarray:
        """Draw assignments: a single (n,) vector when ``size`` is None,
        else a (size, n) array.  Repeated calls advance the fitted rng, so
        a design fitted with a fixed ``random_state`` yields a reproducible
        sequence."""
        check_is_fitted(self)
        if size is None:
            return self._sample_batch(1)[0]
        size = int(size)
        if size < 0:
            raise InvalidInputError("size must be nonnegative")
        return self._sample_batch(size)

    def _sample_batch(self, size) -> np.ndarray:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Bernoulli
# ---------------------------------------------------------------------------

class BernoulliDesign(BaseDesign):
    """Independent assignment: ``z_i = +1`` with probability ``p_i``."""

    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, p, n=None):
        self.p_ = validation.check_probabilities(p, n)
        self.n_ = self.p_.size
        self.rng_ = validation.check_rng(self.random_state)
        return self

    def _sample_batch(self, size):
        U = self.rng_.random((size, self.n_))
        return np.where(U < self.p_, 1.0, -1.0)


def bernoulli_sample(p, rng=None) -> np.ndarray:
    """One independent-coin assignment with marginals ``p``."""
    rng = validation.check_rng(rng)
    p = validation.check_probabilities(p)
    return np.where(rng.random(p.size) < p, 1.0, -1.0)


# ---------------------------------------------------------------------------
# Complete randomization
# ---------------------------------------------------------------------------

def _treated_count(size, p) -> int:
    # round-half-to-even, matching the documented group-size convention
    return int(round(size * p))


class CompleteRandomization(BaseDesign):
    """Uniformly random assignment with exactly ``round(n p)`` treated.

    Only a shared scalar probability is supported; heterogeneous ``p``
    raises :class:`UnsupportedDesignError`.
    """

    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, p, n):
        self.p_ = validation.check_scalar_probability(p)
        self.n_ = int(n)
        if self.n_ < 1:
            raise InvalidInputError("n must be positive")
        self.n_treated_ = _treated_count(self.n_, self.p_)
        self.rng_ = validation.check_rng(self.random_state)
        return self

    def _sample_batch(self, size):
        return _complete_batch(self.rng_, size, self.n_, self.n_treated_)


def _complete_batch(rng, size, n, k) -> np.ndarray:
    """(size, n) array of +-1 rows, each with exactly k entries at +1."""
    Z = np.full((size, n), -1.0)
    if k >= n:
        Z[:] = 1.0
        return Z
    if k > 0:
        U = rng.random((size, n))
        chosen = np.argpartition(U, k - 1, axis=1)[:, :k]
        np.put_along_axis(Z, chosen, 1.0, axis=1)
    return Z


def complete_randomization_sample(p, n, rng=None) -> np.ndarray:
    """One completely randomized assignment with ``round(n p)`` treated."""
    rng = validation.check_rng(rng)
    p = validation.check_scalar_probability(p)
    return _complete_batch(rng, 1, int(n), _treated_count(int(n), p))[0]


# ---------------------------------------------------------------------------
# Randomized block design
# ---------------------------------------------------------------------------

def _build_blocks(X, block_size):
    """Two-level sort into consecutive blocks.

    Units are sorted by the first covariate; within consecutive groups of
    ``2 * block_size`` they are re-sorted by the second covariate; the
    resulting order is cut into blocks of ``block_size``.  When ``n`` is not
    divisible, the remainder is merged into the final block.
    """
    n = X.shape[0]
    order = np.argsort(X[:, 0], kind="stable")
    two_blocks = 2 * block_size
    pieces = []
    for start in range(0, n, two_blocks):
        group = order[start:start + two_blocks]
        pieces.append(group[np.argsort(X[group, 1], kind="stable")])
    ordered = np.concatenate(pieces)

    n_full = n // block_size
    remainder = n - n_full * block_size
    blocks = [
        ordered[i * block_size:(i + 1) * block_size] for i in range(n_full)
    ]
    if remainder:
        if blocks:
            blocks[-1] = np.concatenate([blocks[-1], ordered[n_full * block_size:]])
        else:
            blocks = [ordered]
    return blocks, remainder > 0


class RandomizedBlockDesign(BaseDesign):
    """Complete randomization within covariate-sorted blocks."""

    def __init__(self, block_size=10, random_state=None):
        self.block_size = block_size
        self.random_state = random_state

    def fit(self, X, p):
        X = validation.check_matrix(X, "X")
        if X.shape[1] < 2:
            raise InvalidInputError(
                "blocking uses the first two covariates; X needs d >= 2"
            )
        if not 1 <= self.block_size <= X.shape[0]:
            raise InvalidInputError(
                f"block_size must lie in [1, n={X.shape[0]}], "
                f"got {self.block_size}"
            )
        self.p_ = validation.check_scalar_probability(p)
        self.n_ = X.shape[0]
        self.blocks_, self.remainder_merged_ = _build_blocks(
            X, int(self.block_size)
        )
        self.block_counts_ = [
            _treated_count(b.size, self.p_) for b in self.blocks_
        ]
        self.rng_ = validation.check_rng(self.random_state)
        return self

    def _sample_batch(self, size):
        Z = np.full((size, self.n_), -1.0)
        rows = np.arange(size)[:, None]
        for idx, k in zip(self.blocks_, self.block_counts_):
            if k == 0:
                continue
            if k >= idx.size:
                Z[:, idx] = 1.0
                continue
            U = self.rng_.random((size, idx.size))
            chosen = np.argpartition(U, k - 1, axis=1)[:, :k]
            Z[rows, idx[chosen]] = 1.0
        return Z


def randomized_block_sample(X, p, block_size, rng=None) -> np.ndarray:
    """One randomized-block assignment (see :class:`RandomizedBlockDesign`)."""
    design = RandomizedBlockDesign(
        block_size=block_size, random_state=validation.check_rng(rng)
    )
    return design.fit(X, p).sample()


# ---------------------------------------------------------------------------
# Rerandomization
# ---------------------------------------------------------------------------

class Rerandomization(BaseDesign):
    """Complete randomization filtered by covariate Mahalanobis imbalance.

    ``fit`` draws a pilot pool of complete-randomization assignments,
    computes their Mahalanobis imbalance (difference of covariate group
    means, whitened by the ridge-regularized covariate sample covariance)
    and stores its ``accept_prob`` quantile as the acceptance threshold.
    ``sample`` then redraws until the statistic falls at or below that
    threshold.  ``accept_prob=1.0`` degenerates to plain complete
    randomization.
    """

    def __init__(self, accept_prob=0.001, pilot_draws=100_000, ridge=1e-8,
                 max_draws=10_000_000, batch_size=1024, random_state=None):
        self.accept_prob = accept_prob
        self.pilot_draws = pilot_draws
        self.ridge = ridge
        self.max_draws = max_draws
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, p):
        X = validation.check_matrix(X, "X")
        self.p_ = validation.check_scalar_probability(p)
        if not 0.0 < self.accept_prob <= 1.0:
            raise InvalidInputError(
                f"accept_prob must lie in (0, 1], got {self.accept_prob!r}"
            )
        n, d = X.shape
        self.n_ = n
        self.n_treated_ = _treated_count(n, self.p_)
        if self.n_treated_ in (0, n):
            raise InvalidInputError(
                f"round(n p) = {self.n_treated_} leaves an empty group; "
                "rerandomization needs both groups nonempty"
            )
        cov = np.cov(X, rowvar=False, ddof=1).reshape(d, d)
        self._cho = scipy.linalg.cho_factor(cov + self.ridge * np.eye(d))
        self._X = X
        self._col_sums = X.sum(axis=0)
        self._scale = 1.0 / self.n_treated_ + 1.0 / (n - self.n_treated_)
        self.rng_ = validation.check_rng(self.random_state)
        if self.accept_prob >= 1.0:
            self.threshold_ = np.inf
        else:
            stats = self._imbalance(
                _complete_batch(self.rng_, int(self.pilot_draws),
                                n, self.n_treated_)
            )
            self.threshold_ = float(np.quantile(stats, self.accept_prob))
        return self

    def _imbalance(self, Z) -> np.ndarray:
        """Mahalanobis statistic of the covariate group-mean difference,
        one value per assignment row."""
        k, n = self.n_treated_, self.n_
        T = (Z + 1.0) / 2.0
        delta = (T @ self._X) * (1.0 / k + 1.0 / (n - k))
        delta -= self._col_sums / (n - k)
        white = scipy.linalg.cho_solve(self._cho, delta.T).T
        return np.einsum("ij,ij->i", delta, white) / self._scale

    def imbalance(self, z) -> float:
        """Mahalanobis imbalance of one assignment (diagnostic helper)."""
        check_is_fitted(self)
        z = validation.check_assignment(z, self.n_)
        return float(self._imbalance(z[None, :])[0])

    def _sample_batch(self, size):
        if self.accept_prob >= 1.0:
            return _complete_batch(self.rng_, size, self.n_, self.n_treated_)
        out = np.empty((size, self.n_))
        filled = 0
        drawn = 0
        while filled < size:
            if drawn > self.max_draws:
                raise AcceptanceStallError(
                    f"no acceptable assignment within {self.max_draws} "
                    "candidate draws; threshold may be too tight"
                )
            batch = _complete_batch(self.rng_, int(self.batch_size),
                                    self.n_, self.n_treated_)
            drawn += self.batch_size
            accepted = batch[self._imbalance(batch) <= self.threshold_]
            take = min(accepted.shape[0], size - filled)
            out[filled:filled + take] = accepted[:take]
            filled += take
        return out


def rerandomization_sample(X, p, accept_prob=0.001, pilot_draws=100_000,
                           rng=None) -> np.ndarray:
    """One rerandomized assignment.

    Runs the pilot calibration on every call; fit a
    :class:`Rerandomization` instance instead when drawing repeatedly.
    """
    design = Rerandomization(
        accept_prob=accept_prob,
        pilot_draws=pilot_draws,
        random_state=validation.check_rng(rng),
    )
    return design.fit(X, p).sample()


# ---------------------------------------------------------------------------
# Gram-Schmidt walk
# ---------------------------------------------------------------------------

def _gsw_direction(B, gram, H, alive, pivot):
    """Walk direction: 1 at the pivot, least-squares coefficients elsewhere.

    The alive non-pivot coefficients minimize ``||b_pivot + B_S v||`` (taking
    the minimum-norm minimizer when it is not unique).  Depending on which
    side is smaller the solve goes through the alive-column Gram matrix or
    through the row-space matrix ``H = B_S B_S^T``; rank-deficient corner
    cases fall back to an SVD least squares.
    """
    others = alive[alive != pivot]
    n = B.shape[1]
    u = np.zeros(n)
    u[pivot] = 1.0
    if others.size == 0:
        return u
    b_pivot = B[:, pivot]
    v = None
    if H is not None and others.size >= B.shape[0]:
        HS = H - np.outer(b_pivot, b_pivot)
        try:
            w = scipy.linalg.cho_solve(scipy.linalg.cho_factor(HS), b_pivot)
            v = -(B[:, others].T @ w)
        except np.linalg.LinAlgError:
            v = None
    if v is None:
        GSS = gram[np.ix_(others, others)]
        try:
            v = scipy.linalg.cho_solve(
                scipy.linalg.cho_factor(GSS), -gram[others, pivot]
            )
        except np.linalg.LinAlgError:
            v = np.linalg.lstsq(B[:, others], -b_pivot, rcond=None)[0]
    u[others] = v
    return u


def _gsw_walk(B, gram, p, rng, pivot_order="random",
              alive_tol=validation.ALIVE_TOL) -> np.ndarray:
    """One pass of the pivoted walk from ``2 p - 1`` to a +-1 vertex."""
    m, n = B.shape
    z = 2.0 * p - 1.0
    z[z >= 1.0 - alive_tol] = 1.0
    z[z <= -1.0 + alive_tol] = -1.0
    alive = np.flatnonzero(np.abs(z) < 1.0)

    H = None
    if m < n:
        # Row-space matrix over alive columns, downdated as coordinates pin.
        H = B @ B.T
        dead = np.flatnonzero(np.abs(z) >= 1.0)
        if dead.size:
            Bd = B[:, dead]
            H = H - Bd @ Bd.T

    pivot = -1
    for _ in range(n):
        if alive.size == 0:
            break
        if pivot not in alive:
            if pivot_order == "random":
                pivot = int(alive[rng.integers(alive.size)])
            else:
                pivot = int(alive[0])
        u = _gsw_direction(B, gram, H, alive, pivot)
        gamma = step_size(z, u, rng)
        z += gamma * u
        np.clip(z, -1.0, 1.0, out=z)
        za = z[alive]
        dead_local = np.abs(za) >= 1.0 - alive_tol
        z[alive[dead_local]] = np.where(za[dead_local] > 0, 1.0, -1.0)
        if H is not None and dead_local.any():
            Bd = B[:, alive[dead_local]]
            H = H - Bd @ Bd.T
        alive = alive[~dead_local]

    if alive.size:
        raise RunawayWalkError(
            f"walk did not terminate within {n} iterations"
        )
    return z


class GramSchmidtWalk(BaseDesign):
    """Pivoted least-squares walk design.

    For any matrix with unit-capped column norms the sampled assignments
    are feasible (mean exactly ``2 p - 1``) with balance objective
    ``||Cov(B z)|| <= 1``.  ``pivot_order`` selects uniformly random pivots
    (default) or lowest-index pivots.
    """

    def __init__(self, pivot_order="random", random_state=None):
        self.pivot_order = pivot_order
        self.random_state = random_state

    def fit(self, B, p):
        if self.pivot_order not in ("random", "index"):
            raise InvalidInputError(
                f"pivot_order must be 'random' or 'index', "
                f"got {self.pivot_order!r}"
            )
        # The walk itself runs on any matrix; the f <= 1 guarantee only
        # holds when column norms are capped at 1.
        self.B_ = validation.check_matrix(B, "B")
        self.p_ = validation.check_probabilities(p, self.B_.shape[1])
        self.n_ = self.p_.size
        self.gram_ = self.B_.T @ self.B_
        self.rng_ = validation.check_rng(self.random_state)
        return self

    def _sample_batch(self, size):
        out = np.empty((size, self.n_))
        for i in range(size):
            out[i] = _gsw_walk(self.B_, self.gram_, self.p_, self.rng_,
                               self.pivot_order)
        return out


def gsw_sample(B, p, rng=None, pivot_order="random") -> np.ndarray:
    """One assignment from the pivoted least-squares walk."""
    rng = validation.check_rng(rng)
    B = validation.check_matrix(B, "B")
    p = validation.check_probabilities(p, B.shape[1])
    return _gsw_walk(B, B.T @ B, p, rng, pivot_order)


# ---------------------------------------------------------------------------
# MWU design
# ---------------------------------------------------------------------------

class MWUDesign(BaseDesign):
    """Multiplicative-weights mixture design.

    ``fit`` runs the full outer loop (the expensive part) and stores the
    resulting :class:`~ddmdesign.mwu.DesignDistribution` as
    ``distribution_``; ``sample`` just draws atoms from it.
    """

    def __init__(self, epsilon=0.2, iterations=200, cov_samples=50,
                 eta=None, alpha_max=10.0, random_state=None):
        self.epsilon = epsilon
        self.iterations = iterations
        self.cov_samples = cov_samples
        self.eta = eta
        self.alpha_max = alpha_max
        self.random_state = random_state

    def fit(self, B, p):
        config = MWUConfig(
            epsilon=self.epsilon,
            iterations=self.iterations,
            cov_samples=self.cov_samples,
            eta=self.eta,
            alpha_max=self.alpha_max,
        )
        self.rng_ = validation.check_rng(self.random_state)
        self.distribution_ = mwu_build(
            B, p, config, OracleConfig(epsilon=self.epsilon), self.rng_
        )
        self.n_ = self.distribution_.atoms.shape[1]
        return self

    def _sample_batch(self, size):
        return mwu_sample(self.distribution_, self.rng_, size=size)
