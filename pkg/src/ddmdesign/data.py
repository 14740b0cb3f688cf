"""Synthetic instance generators and covariate CSV ingestion.

Generators draw uniform [-1, 1] entries and are deterministic given a
seeded generator.  The CSV path turns a units-by-covariates table into a
design matrix via: per-column standardization (sample mean 0, sd 1) ->
small Gaussian entry noise (making the matrix numerically full rank) ->
transpose to covariates-by-units -> global scaling to unit maximum column
norm.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from . import validation
from .errors import CsvParseError, InvalidInputError, StandardizationError
from .linalg import normalize_columns

__all__ = [
    "OutcomeModel",
    "OUTCOME_KINDS",
    "gen_random_matrix",
    "gen_covariates",
    "gen_outcomes",
    "ingest_covariate_csv",
]

OUTCOME_KINDS = (
    "linear",
    "quadratic",
    "linear-quadratic",
    "linear-quadratic-cubic",
)


def gen_random_matrix(m=20, n=100, rng=None) -> np.ndarray:
    """Random design matrix: uniform [-1, 1] entries, columns normalized."""
    rng = validation.check_rng(rng)
    if m < 1 or n < 1:
        raise InvalidInputError("matrix dimensions must be positive")
    return normalize_columns(rng.uniform(-1.0, 1.0, (int(m), int(n))))


def gen_covariates(n=100, d=40, rng=None) -> np.ndarray:
    """Raw covariate matrix with uniform [-1, 1] entries (no normalization;
    apply :func:`~ddmdesign.linalg.build_augmented_matrix` scaling at the
    point of use)."""
    rng = validation.check_rng(rng)
    if n < 1 or d < 1:
        raise InvalidInputError("covariate dimensions must be positive")
    return rng.uniform(-1.0, 1.0, (int(n), int(d)))


@dataclass(frozen=True)
class OutcomeModel:
    """Outcome surface built from the sum of leading covariates.

    With ``s_i`` the sum of the first ``active_covariates`` entries of row
    ``i``, the surface is

    - ``linear``: ``s``
    - ``quadratic``: ``s**2``
    - ``linear-quadratic``: ``s + 0.5 s**2``
    - ``linear-quadratic-cubic``: ``s + 0.5 s**2 + 0.5 s**3``

    Treatment outcomes equal the surface; control outcomes add
    ``Normal(0, noise_sd**2)`` noise.
    """

    kind: str = "linear"
    noise_sd: float = 0.1
    active_covariates: int = 20

    def __post_init__(self):
        if self.kind not in OUTCOME_KINDS:
            raise InvalidInputError(
                f"kind must be one of {OUTCOME_KINDS}, got {self.kind!r}"
            )
        if self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be nonnegative")
        if self.active_covariates < 1:
            raise InvalidInputError("active_covariates must be positive")

    def surface(self, X) -> np.ndarray:
        """Noise-free outcome values for covariate rows ``X``."""
        X = validation.check_matrix(X, "X")
        if X.shape[1] < self.active_covariates:
            raise InvalidInputError(
                f"model sums the first {self.active_covariates} covariates "
                f"but X has only {X.shape[1]}"
            )
        s = X[:, : self.active_covariates].sum(axis=1)
        if self.kind == "linear":
            return s
        if self.kind == "quadratic":
            return s**2
        if self.kind == "linear-quadratic":
            return s + 0.5 * s**2
        return s + 0.5 * s**2 + 0.5 * s**3


def gen_outcomes(X, model: OutcomeModel | None = None, rng=None):
    """Potential outcomes ``(a, b)`` with ``a`` on the surface and
    ``b = a + noise``."""
    model = model or OutcomeModel()
    rng = validation.check_rng(rng)
    a = model.surface(X)
    b = a + rng.normal(0.0, model.noise_sd, a.size)
    return a, b


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _read_csv_table(path) -> tuple[np.ndarray, list[str] | None]:
    """Rectangular float table plus optional header names.

    The first row is treated as a header exactly when at least one of its
    cells does not parse as a number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise CsvParseError(f"{path}: empty CSV")

    def parse_row(cells, row_no):
        out = []
        for col_no, cell in enumerate(cells, start=1):
            try:
                out.append(float(cell))
            except ValueError:
                raise CsvParseError(
                    f"{path}: non-numeric cell {cell!r}",
                    row=row_no, column=col_no,
                ) from None
        return out

    header = None
    try:
        first = parse_row(rows[0], 1)
        data = [first]
        start = 2
    except CsvParseError:
        header = [c.strip() for c in rows[0]]
        data = []
        start = 2
        rows = rows[1:]
    else:
        rows = rows[1:]

    width = len(header) if header is not None else len(data[0])
    for row_no, cells in enumerate(rows, start=start):
        if len(cells) != width:
            raise CsvParseError(
                f"{path}: expected {width} cells, found {len(cells)}",
                row=row_no,
            )
        data.append(parse_row(cells, row_no))
    if not data:
        raise CsvParseError(f"{path}: no data rows below the header")
    return np.asarray(data, dtype=float), header


def ingest_covariate_csv(path, noise_sd=0.02, rng=None, subsample=None,
                         rank_check=True) -> np.ndarray:
    """Design matrix from a units-by-covariates CSV.

    Pipeline: (optional seeded subsample of ``subsample`` rows without
    replacement) -> per-column standardization -> independent
    ``Normal(0, noise_sd**2)`` noise per entry -> transpose -> scale to
    unit maximum column norm.  Noise is added after standardization, so
    ``noise_sd`` is relative to unit-variance columns.

    Raises:
        CsvParseError: non-numeric cells or ragged rows, with coordinates.
        StandardizationError: a constant column has no scale to remove.
    """
    rng = validation.check_rng(rng)
    table, header = _read_csv_table(path)
    if subsample is not None:
        subsample = int(subsample)
        if not 2 <= subsample <= table.shape[0]:
            raise InvalidInputError(
                f"subsample must lie in [2, {table.shape[0]}], "
                f"got {subsample}"
            )
        table = table[rng.choice(table.shape[0], subsample, replace=False)]
    if table.shape[0] < 2:
        raise StandardizationError(
            f"{path}: need at least 2 rows to standardize"
        )
    sd = table.std(axis=0)
    flat = np.flatnonzero(sd == 0)
    if flat.size:
        col = int(flat[0])
        name = header[col] if header else f"index {col + 1}"
        raise StandardizationError(
            f"{path}: column {name} is constant and cannot be standardized"
        )
    table = (table - table.mean(axis=0)) / sd
    table += rng.normal(0.0, noise_sd, table.shape)
    B = normalize_columns(table.T)
    if rank_check:
        rank = int(np.sum(np.linalg.svd(B, compute_uv=False) > 1e-8))
        if rank < min(B.shape):
            warnings.warn(
                f"ingested matrix is rank-deficient ({rank} < "
                f"{min(B.shape)}) even after noise",
                stacklevel=2,
            )
    return B
