"""Set-splitting gadgets linking zero-covariance designs to NP-hard search.

A 2-2-splitting of a system of 4-element sets is a +-1 labelling of the
universe that sums to zero inside every set.  The constructions here turn
such a system into design matrices whose optimal balance objective is zero
precisely when a splitting exists, in two flavours:

- an equal-probability gadget (entries ``0, +-1/sqrt(3)``, exactly unit
  columns) where a splitting extends to a sign vector annihilating every
  row, giving a two-atom design with identically zero covariance;
- an unequal-probability gadget (block matrix over incidence + centering
  blocks) where a splitting yields an explicit five-atom feasible
  distribution with exactly zero covariance at three distinct assignment
  probabilities.

All structural identities (zero row sums, probability totals, distribution
means) are exact, so the module keeps integer/rational forms of every
matrix alongside the float versions and verifies with
:mod:`fractions`-level arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInputError, InvalidWitnessError

__all__ = [
    "SetSplittingInstance",
    "parse_set_splitting",
    "format_set_splitting",
    "random_planted_instance",
    "unsplit_count",
    "exhaustive_min_unsplit",
    "EqualProbGadget",
    "build_equal_gadget",
    "sign_completion",
    "equal_gadget_zero_design",
    "UnequalProbGadget",
    "build_unequal_gadget",
    "satisfiable_distribution",
    "AtomicDistribution",
]


# ---------------------------------------------------------------------------
# Set-Splitting instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SetSplittingInstance:
    """A system of 4-element subsets with element multiplicity at most 3.

    Elements are 0-based integers in ``range(universe_size)``; the on-disk
    text format is 1-based (see :func:`parse_set_splitting`).
    """

    universe_size: int
    sets: tuple[tuple[int, int, int, int], ...]

    def __post_init__(self):
        n = self.universe_size
        if n < 4:
            raise InvalidInputError("universe must have at least 4 elements")
        sets = tuple(tuple(int(i) for i in s) for s in self.sets)
        for j, s in enumerate(sets):
            if len(s) != 4 or len(set(s)) != 4:
                raise InvalidInputError(
                    f"set {j} must contain exactly 4 distinct elements, "
                    f"got {s}"
                )
            if min(s) < 0 or max(s) >= n:
                raise InvalidInputError(
                    f"set {j} references elements outside range(0, {n}): {s}"
                )
        counts = np.zeros(n, dtype=np.int64)
        for s in sets:
            counts[list(s)] += 1
        if counts.max() > 3:
            worst = int(np.argmax(counts))
            raise InvalidInputError(
                f"element {worst} appears in {int(counts[worst])} sets; "
                "multiplicity is capped at 3"
            )
        object.__setattr__(self, "sets", sets)

    @property
    def n_sets(self) -> int:
        return len(self.sets)

    @property
    def multiplicities(self) -> np.ndarray:
        """Per-element set-membership counts, length ``universe_size``."""
        counts = np.zeros(self.universe_size, dtype=np.int64)
        for s in self.sets:
            counts[list(s)] += 1
        return counts

    @property
    def incidence(self) -> np.ndarray:
        """0/1 incidence matrix, one row per set (rows sum to 4)."""
        A = np.zeros((self.n_sets, self.universe_size), dtype=np.int64)
        for j, s in enumerate(self.sets):
            A[j, list(s)] = 1
        return A


def parse_set_splitting(text: str) -> SetSplittingInstance:
    """Parse the plain-text format: ``"n m"`` then m lines of 4 1-based ids."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInputError("empty set-splitting description")
    head = lines[0].split()
    if len(head) != 2:
        raise InvalidInputError(
            f"header must be 'n m', got {lines[0]!r}"
        )
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError as exc:
        raise InvalidInputError(f"non-integer header {lines[0]!r}") from exc
    if len(lines) - 1 != m:
        raise InvalidInputError(
            f"header promises {m} sets but {len(lines) - 1} lines follow"
        )
    sets = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 4:
            raise InvalidInputError(
                f"line {line_no}: expected 4 indices, got {len(parts)}"
            )
        try:
            ids = [int(tok) for tok in parts]
        except ValueError as exc:
            raise InvalidInputError(
                f"line {line_no}: non-integer index in {line!r}"
            ) from exc
        if min(ids) < 1 or max(ids) > n:
            raise InvalidInputError(
                f"line {line_no}: indices must lie in 1..{n}, got {ids}"
            )
        sets.append(tuple(i - 1 for i in ids))
    return SetSplittingInstance(n, tuple(sets))


def format_set_splitting(inst: SetSplittingInstance) -> str:
    """Inverse of :func:`parse_set_splitting` (1-based, newline-terminated)."""
    lines = [f"{inst.universe_size} {inst.n_sets}"]
    lines.extend(" ".join(str(i + 1) for i in s) for s in inst.sets)
    return "\n".join(lines) + "\n"


def random_planted_instance(universe_size=12, n_sets=6, rng=None):
    """Random instance with a known splitting witness.

    Labels the universe half +1 / half -1, then builds each set from two
    elements of each label (so the planted labelling 2-2-splits every set),
    drawing elements with probability proportional to remaining capacity
    under the multiplicity-3 cap.

    Returns:
        (instance, witness): the instance and its planted +-1 labelling.
    """
    from . import validation

    rng = validation.check_rng(rng)
    n = int(universe_size)
    m = int(n_sets)
    if n < 4:
        raise InvalidInputError("universe must have at least 4 elements")
    if not 1 <= m <= (3 * n) // 4:
        raise InvalidInputError(
            f"n_sets must lie in [1, 3n/4 = {(3 * n) // 4}], got {m}"
        )
    witness = np.ones(n, dtype=np.int64)
    witness[rng.permutation(n)[: n // 2]] = -1
    plus = np.flatnonzero(witness > 0)
    minus = np.flatnonzero(witness < 0)

    for _ in range(64):
        caps = np.full(n, 3, dtype=np.int64)
        sets = []
        for _ in range(m):
            pick = []
            for side in (plus, minus):
                avail = side[caps[side] > 0]
                if avail.size < 2:
                    break
                weights = caps[avail] / caps[avail].sum()
                pick.extend(
                    rng.choice(avail, size=2, replace=False, p=weights)
                )
            if len(pick) != 4:
                break
            caps[pick] -= 1
            sets.append(tuple(int(i) for i in pick))
        if len(sets) == m:
            return SetSplittingInstance(n, tuple(sets)), witness
    raise InvalidInputError(
        f"could not place {m} sets over {n} elements under the "
        "multiplicity cap; lower n_sets or raise universe_size"
    )


def unsplit_count(inst: SetSplittingInstance, y) -> int:
    """Number of sets whose elements do not sum to zero under labels ``y``."""
    y = np.asarray(y)
    if y.shape != (inst.universe_size,):
        raise InvalidInputError(
            f"witness length {y.size} != universe size {inst.universe_size}"
        )
    if not np.isin(y, (-1, 1)).all():
        raise InvalidInputError("witness entries must be +-1")
    sums = inst.incidence @ y.astype(np.int64)
    return int(np.count_nonzero(sums))


def exhaustive_min_unsplit(inst: SetSplittingInstance, limit=20) -> int:
    """Minimum of :func:`unsplit_count` over all 2^n labellings (small n)."""
    n = inst.universe_size
    if n > limit:
        raise InvalidInputError(
            f"exhaustive search over 2^{n} labellings exceeds limit={limit}"
        )
    codes = np.arange(2**n, dtype=np.uint32)
    bits = (codes[:, None] >> np.arange(n, dtype=np.uint32)) & 1
    Y = 2 * bits.astype(np.int64) - 1
    sums = Y @ inst.incidence.T
    return int(np.count_nonzero(sums, axis=1).min())


# ---------------------------------------------------------------------------
# Equal-probability gadget
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EqualProbGadget:
    """Unit-column design matrix encoding a set-splitting instance.

    Every column has exactly three nonzero entries of magnitude
    ``1/sqrt(3)``; ``scaled`` holds the integer matrix ``sqrt(3) * B`` for
    exact arithmetic.  ``aux_columns[i]`` lists the auxiliary column
    indices created for low-multiplicity element ``i`` (2 columns for
    multiplicity 1, 3 for multiplicity 2).
    """

    instance: SetSplittingInstance
    B: np.ndarray
    scaled: np.ndarray
    aux_columns: dict[int, tuple[int, ...]]

    @property
    def shape(self) -> tuple[int, int]:
        return self.B.shape


def build_equal_gadget(inst: SetSplittingInstance) -> EqualProbGadget:
    """Pad every element up to multiplicity 3 and emit the scaled matrix.

    Elements already in 3 sets map to plain incidence columns.  An element
    in one set gains 4 new rows and 2 auxiliary columns; an element in two
    sets gains 5 new rows and 3 auxiliary columns.  The auxiliary pattern
    is chosen so that a signing of the auxiliaries (see
    :func:`sign_completion`) cancels every new row exactly.
    """
    n, m = inst.universe_size, inst.n_sets
    counts = inst.multiplicities
    if (counts == 0).any():
        missing = int(np.argmin(counts))
        raise InvalidInputError(
            f"element {missing} appears in no set; every element must "
            "occur at least once to build the gadget"
        )
    n1 = int(np.count_nonzero(counts == 1))
    n2 = int(np.count_nonzero(counts == 2))
    d = m + 4 * n1 + 5 * n2
    N = n + 2 * n1 + 3 * n2

    S = np.zeros((d, N), dtype=np.int64)
    for j, st in enumerate(inst.sets):
        S[j, list(st)] = 1

    aux_columns: dict[int, tuple[int, ...]] = {}
    row = m
    col = n
    for i in range(n):
        c = int(counts[i])
        if c == 3:
            continue
        if c == 1:
            r = row
            row += 4
            u1, u2 = col, col + 1
            col += 2
            S[r, i] = S[r + 1, i] = 1
            S[r, u1] = S[r + 2, u1] = S[r + 3, u1] = 1
            S[r + 1, u2] = -1
            S[r + 2, u2] = S[r + 3, u2] = 1
            aux_columns[i] = (u1, u2)
        else:  # c == 2
            r = row
            row += 5
            u1, u2, u3 = col, col + 1, col + 2
            col += 3
            S[r, i] = 1
            S[r, u1] = S[r + 1, u1] = S[r + 2, u1] = 1
            S[r + 1, u2] = S[r + 3, u2] = S[r + 4, u2] = 1
            S[r + 2, u3] = -1
            S[r + 3, u3] = S[r + 4, u3] = 1
            aux_columns[i] = (u1, u2, u3)
    assert row == d and col == N
    return EqualProbGadget(inst, S / math.sqrt(3.0), S, aux_columns)


def sign_completion(gadget: EqualProbGadget, y) -> np.ndarray:
    """Extend element labels to all gadget columns, zeroing the new rows.

    Auxiliary columns for element ``i`` receive signs ``(-y_i, +y_i)``
    (multiplicity 1) or ``(-y_i, +y_i, -y_i)`` (multiplicity 2), which
    makes every row beyond the original sets sum to zero exactly — an
    integer identity on the scaled matrix.
    """
    inst = gadget.instance
    y = np.asarray(y)
    if y.shape != (inst.universe_size,):
        raise InvalidInputError(
            f"labelling length {y.size} != universe size "
            f"{inst.universe_size}"
        )
    if not np.isin(y, (-1, 1)).all():
        raise InvalidInputError("labelling entries must be +-1")
    full = np.empty(gadget.shape[1], dtype=np.int64)
    full[: inst.universe_size] = y
    for i, cols in gadget.aux_columns.items():
        signs = (-y[i], y[i], -y[i])
        for c, s in zip(cols, signs):
            full[c] = s
    return full


def equal_gadget_zero_design(gadget: EqualProbGadget, y):
    """Two-atom zero-covariance design from a splitting witness.

    Checks that ``y`` 2-2-splits every set (else
    :class:`InvalidWitnessError`), completes it to ``y'`` and returns the
    distribution placing weight 1/2 on each of ``+-y'``.  Its mean is 0
    (so all assignment probabilities are exactly 1/2) and ``B y' = 0``
    exactly, hence ``Cov(B z) = 0``.
    """
    bad = unsplit_count(gadget.instance, y)
    if bad:
        raise InvalidWitnessError(
            f"labelling leaves {bad} of {gadget.instance.n_sets} sets "
            "unsplit; a valid witness must split all of them"
        )
    completed = sign_completion(gadget, y)
    atoms = np.stack([completed, -completed])
    half = Fraction(1, 2)
    return AtomicDistribution(atoms, (half, half))


# ---------------------------------------------------------------------------
# Unequal-probability gadget
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnequalProbGadget:
    """Block design matrix with three-valued assignment probabilities.

    Layout (m sets, n elements, Pi the m x m centering matrix
    ``I - (1/m) 11'``)::

        M = [ A  -2I  -2I ]      shape (3m) x (n + 2m)
            [ 0   Pi   0  ]
            [ 0   0    Pi ]

    ``B = M / max_column_norm(M)``; ``m_scaled = m * M`` is integer for
    exact checks.  Probabilities: ``1 - alpha`` on element coordinates,
    ``1 - 2 alpha (1-beta)`` and ``1 - 2 alpha beta`` on the two auxiliary
    blocks; ``z0 = 2 p - 1`` satisfies ``M z0 = 0`` exactly.
    """

    instance: SetSplittingInstance
    alpha: Fraction
    beta: Fraction
    M: np.ndarray
    m_scaled: np.ndarray
    B: np.ndarray
    p: np.ndarray
    z0: np.ndarray
    p_exact: tuple[Fraction, ...]
    z0_exact: tuple[Fraction, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.M.shape


def build_unequal_gadget(inst: SetSplittingInstance, alpha,
                         beta) -> UnequalProbGadget:
    """Assemble the block gadget for parameters ``alpha`` in (0, 1/2),
    ``beta`` in (0, 1).

    ``beta = 1/2`` collapses the two auxiliary probability levels into one
    and makes ``z0`` homogeneous.
    """
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    if not 0 < alpha < Fraction(1, 2):
        raise InvalidInputError(
            f"alpha must lie in (0, 1/2), got {float(alpha)!r}"
        )
    if not 0 < beta < 1:
        raise InvalidInputError(
            f"beta must lie in (0, 1), got {float(beta)!r}"
        )
    n, m = inst.universe_size, inst.n_sets

    # m_scaled = m * M in exact integers.
    A = inst.incidence
    mPi = m * np.eye(m, dtype=np.int64) - np.ones((m, m), dtype=np.int64)
    m_scaled = np.zeros((3 * m, n + 2 * m), dtype=np.int64)
    m_scaled[:m, :n] = m * A
    m_scaled[:m, n:n + m] = -2 * m * np.eye(m, dtype=np.int64)
    m_scaled[:m, n + m:] = -2 * m * np.eye(m, dtype=np.int64)
    m_scaled[m:2 * m, n:n + m] = mPi
    m_scaled[2 * m:, n + m:] = mPi
    M = m_scaled / m

    col_norms = np.linalg.norm(M, axis=0)
    B = M / col_norms.max()

    p_level = 1 - 2 * alpha            # mean on the +-1 scale
    q = 2 * beta - 1
    lam = (1 - p_level) * q            # = 2 alpha q
    p_exact = (
        (1 - alpha,) * n
        + (1 - 2 * alpha * (1 - beta),) * m
        + (1 - 2 * alpha * beta,) * m
    )
    z0_exact = tuple(2 * pe - 1 for pe in p_exact)
    return UnequalProbGadget(
        instance=inst,
        alpha=alpha,
        beta=beta,
        M=M,
        m_scaled=m_scaled,
        B=B,
        p=np.array([float(pe) for pe in p_exact]),
        z0=np.array([float(ze) for ze in z0_exact]),
        p_exact=p_exact,
        z0_exact=z0_exact,
    )


def satisfiable_distribution(gadget: UnequalProbGadget, y):
    """Explicit five-atom feasible design with zero covariance.

    Requires ``y`` to 2-2-split every set.  Atoms (with ``1`` blocks of
    length m): the all-ones vector with weight ``p``; ``[y, 1, -1]`` and
    ``[-y, 1, -1]`` with weight ``p1 = (1-p)(1+q)/4`` each; their
    negations with weight ``p2 = (1-p)(1-q)/4`` each.  Exactly:
    ``p + 2 p1 + 2 p2 = 1``, the mean is ``z0``, and every atom lies in
    the null space of ``M``, so ``Cov(M z) = 0`` identically.
    """
    inst = gadget.instance
    bad = unsplit_count(inst, y)
    if bad:
        raise InvalidWitnessError(
            f"labelling leaves {bad} of {inst.n_sets} sets unsplit; "
            "a valid witness must split all of them"
        )
    n, m = inst.universe_size, inst.n_sets
    y = np.asarray(y, dtype=np.int64)
    ones = np.ones(m, dtype=np.int64)
    up = np.concatenate([y, ones, -ones])
    flip = np.concatenate([-y, ones, -ones])
    atoms = np.stack([
        np.ones(n + 2 * m, dtype=np.int64),
        up,
        -up,
        flip,
        -flip,
    ])
    p_level = 1 - 2 * gadget.alpha
    q = 2 * gadget.beta - 1
    p1 = (1 - p_level) * (1 + q) / 4
    p2 = (1 - p_level) * (1 - q) / 4
    return AtomicDistribution(atoms, (p_level, p1, p2, p1, p2))


# ---------------------------------------------------------------------------
# Finite-support distributions with exact weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AtomicDistribution:
    """Finitely supported +-1 design with rational weights.

    Args:
        atoms: (k, N) integer +-1 matrix, one atom per row.
        weights_exact: k rational weights summing to 1.
    """

    atoms: np.ndarray
    weights_exact: tuple[Fraction, ...]

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.int64)
        if atoms.ndim != 2 or not np.isin(atoms, (-1, 1)).all():
            raise InvalidInputError("atoms must be a 2-D +-1 array")
        weights = tuple(Fraction(w) for w in self.weights_exact)
        if len(weights) != atoms.shape[0]:
            raise InvalidInputError(
                f"{len(weights)} weights for {atoms.shape[0]} atoms"
            )
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise InvalidInputError(
                "weights must be nonnegative rationals summing to 1 exactly"
            )
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights_exact", weights)

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights_exact])

    def mean_exact(self) -> tuple[Fraction, ...]:
        """Coordinatewise mean as exact rationals."""
        cols = self.atoms.T
        return tuple(
            sum(w * int(v) for w, v in zip(self.weights_exact, col))
            for col in cols
        )

    def mean(self) -> np.ndarray:
        return np.array([float(v) for v in self.mean_exact()])

    def covariance(self) -> np.ndarray:
        """Covariance of the atom distribution (float)."""
        w = self.weights
        mu = w @ self.atoms
        centered = self.atoms - mu
        return (centered.T * w) @ centered

    def marginal_probabilities(self) -> tuple[Fraction, ...]:
        """Exact ``Pr(z_i = +1)`` per coordinate."""
        return tuple((1 + v) / 2 for v in self.mean_exact())

    def sample(self, rng, size=None) -> np.ndarray:
        """Draw assignments as float +-1 rows (or one vector)."""
        idx = rng.choice(self.atoms.shape[0], size=size, p=self.weights)
        return self.atoms[idx].astype(float)
