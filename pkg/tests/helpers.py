"""Shared test data and statistical helpers.

Hosts the three-unit worked instance reused across the suite, a factory for
random unit-column-capped instances, and the cluster-robust standard error
needed when checking samplers that draw from a frozen finite mixture (their
draws share atoms, so iid standard errors would be far too small).
"""
from __future__ import annotations

import numpy as np

# Three-unit instance whose columns have unit norm (up to print rounding).
# Closed-form independent-coin objective: 0.38171; the walk-based designs
# land near 0.417 on it.
WORKED_B = np.array([
    [1.0, -0.375542, 0.558774],
    [0.0, -0.378668, -0.337221],
    [0.0, -0.845919, -0.757663],
])
WORKED_P = np.array([0.925, 0.925, 0.945])


def random_instance(m, n, seed, p_low=0.2, p_high=0.8):
    """Random (B, p) with max column norm exactly 1 and p inside (0, 1)."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((m, n))
    B /= np.linalg.norm(B, axis=0).max()
    p = rng.uniform(p_low, p_high, size=n)
    return B, p


def mixture_mean_stderr(dist):
    """Mean of a finite assignment mixture and its per-coordinate stderr.

    The atoms are martingale draws whose conditional mean is the walk
    target, so the weighted atom mean deviates from that target with
    variance about sum_t w_t^2 Var(atom_t); plug in squared deviations from
    the realized mean with a T/(T-1) correction.
    """
    mean = dist.weights @ dist.atoms
    dev2 = (dist.atoms - mean) ** 2
    t = dist.n_atoms
    var = (dist.weights ** 2) @ dev2 * (t / max(t - 1, 1))
    return mean, np.sqrt(var)
