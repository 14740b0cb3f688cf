"""Command-line experiment harness.

Subcommands
-----------
- ``ddm-sweep``: estimate the balance objective ``||Cov(B z)||`` for a set
  of designs over a grid of assignment probabilities, with confidence
  intervals across matrix replications.
- ``mse-sweep``: simulate the mean-squared error of the inverse-probability
  ATE estimator for the same designs on a synthetic outcome model.
- ``gen-data``: write synthetic matrices / covariates / full instances.
- ``hardness-demo``: build the set-splitting gadgets, verify their exact
  identities, and write a plain-text report.
- ``plot``: render a results CSV as metric-vs-p curves with CI bands.

Every command is deterministic given ``(--seed, config)``: work items get
independent substreams spawned from the master seed by task index, results
are emitted in task order, and floats are formatted with a fixed ``%.12g``
rule, so re-runs produce byte-identical outputs even under ``--jobs > 1``.

Config precedence is CLI flag > ``--config`` JSON file > built-in default.
Exit codes: 0 success, 2 invalid arguments, 3 numerical failure, 4 file
I/O or format failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import multiprocessing
import sys
from fractions import Fraction
from types import SimpleNamespace

import numpy as np

from .data import (
    OUTCOME_KINDS,
    OutcomeModel,
    gen_covariates,
    gen_outcomes,
    gen_random_matrix,
    ingest_covariate_csv,
)
from .designs import (
    BernoulliDesign,
    CompleteRandomization,
    GramSchmidtWalk,
    MWUDesign,
    RandomizedBlockDesign,
    Rerandomization,
)
from .errors import (
    DDMDesignError,
    FileFormatError,
    InvalidInputError,
    NumericalError,
)
from .estimation import ExperimentInstance, ate, ht_replicates
from .hardness import (
    build_equal_gadget,
    build_unequal_gadget,
    equal_gadget_zero_design,
    exhaustive_min_unsplit,
    format_set_splitting,
    parse_set_splitting,
    random_planted_instance,
    satisfiable_distribution,
    sign_completion,
    unsplit_count,
)
from .linalg import build_augmented_matrix, normalize_columns
from .mwu import ddm_objective

SCHEMA = "ddmdesign-results v1"
COLUMNS = ("design", "p", "phi", "metric", "value", "ci_lo", "ci_hi", "rep")
DESIGNS = ("mwu", "gsw", "bernoulli", "complete", "block", "rerand")
_COVARIATE_DESIGNS = ("block", "rerand")
_AUGMENTED_DESIGNS = ("mwu", "gsw")
_Z95 = 1.959963984540054


def _fmt(value) -> str:
    return "%.12g" % float(value)


# ---------------------------------------------------------------------------
# argument parsing and config merging
# ---------------------------------------------------------------------------

_DDM_DEFAULTS = dict(
    seed=0, source="random", csv=None, subsample=None, m=20, n=100, d=40,
    phi=0.5, p_grid="0.5:0.975:20", designs=",".join(DESIGNS), eps=0.2,
    iters=200, oracle_samples=50, cov_samples=10_000, reps=5, block_size=10,
    accept_prob=0.001, pilot_draws=100_000, jobs=1, out="ddm_results.csv",
)

_MSE_DEFAULTS = dict(
    seed=0, n=100, d=40, model="linear", noise_sd=0.1, active=20,
    phi="0.5,0.9", p_grid="0.05:0.95:19", designs=",".join(DESIGNS),
    eps=0.2, iters=200, oracle_samples=50, reps=2000, block_size=10,
    accept_prob=0.001, pilot_draws=100_000, jobs=1, out="mse_results.csv",
)

_GEN_DEFAULTS = dict(
    seed=0, kind="matrix", m=20, n=100, d=40, model="linear", noise_sd=0.1,
    active=20, out="data.csv",
)

_HARDNESS_DEFAULTS = dict(
    seed=0, instance=None, witness=None, alpha="1/4", beta="1/3",
    universe=12, sets=6, out="hardness_report.txt",
)

_PLOT_DEFAULTS = dict(results="ddm_results.csv", out="plot.svg")


def _add_common(sub):
    sub.add_argument("--seed", type=int, help="master seed (default 0)")
    sub.add_argument("--config", help="JSON file of flag defaults")
    sub.add_argument("--out", help="output path")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddmdesign",
        description="Balance-objective and ATE-error experiment harness "
                    "for randomized designs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ddm = sub.add_parser(
        "ddm-sweep",
        help="estimate ||Cov(Bz)|| over a probability grid",
        description="Defaults reproduce a full-scale sweep; reduce --iters, "
                    "--reps and --cov-samples for quick runs.",
    )
    _add_common(ddm)
    ddm.add_argument("--source", choices=("random", "augmented", "csv"),
                     help="design matrix source")
    ddm.add_argument("--csv", help="covariate CSV for --source csv")
    ddm.add_argument("--subsample", type=int,
                     help="subsample this many CSV rows before ingestion")
    ddm.add_argument("--m", type=int, help="rows of the random matrix")
    ddm.add_argument("--n", type=int, help="number of units")
    ddm.add_argument("--d", type=int,
                     help="covariate dimension for --source augmented")
    ddm.add_argument("--phi", type=float,
                     help="robustness/balance trade-off for --source augmented")
    ddm.add_argument("--p-grid", dest="p_grid",
                     help="comma floats or start:stop:count, all in (0,1)")
    ddm.add_argument("--designs", help=f"comma subset of {','.join(DESIGNS)}")
    ddm.add_argument("--eps", type=float, help="MWU accuracy parameter")
    ddm.add_argument("--iters", type=int, help="MWU iteration count")
    ddm.add_argument("--oracle-samples", dest="oracle_samples", type=int,
                     help="oracle draws per MWU iteration")
    ddm.add_argument("--cov-samples", dest="cov_samples", type=int,
                     help="assignments drawn to estimate each covariance")
    ddm.add_argument("--reps", type=int, help="matrix replications for CIs")
    ddm.add_argument("--block-size", dest="block_size", type=int)
    ddm.add_argument("--accept-prob", dest="accept_prob", type=float)
    ddm.add_argument("--pilot-draws", dest="pilot_draws", type=int)
    ddm.add_argument("--jobs", type=int, help="worker processes")
    ddm.set_defaults(func=cmd_ddm_sweep, defaults=_DDM_DEFAULTS)

    mse = sub.add_parser(
        "mse-sweep",
        help="simulate ATE-estimator MSE over a probability grid",
    )
    _add_common(mse)
    mse.add_argument("--n", type=int, help="number of units")
    mse.add_argument("--d", type=int, help="covariate dimension")
    mse.add_argument("--model", choices=OUTCOME_KINDS, help="outcome surface")
    mse.add_argument("--noise-sd", dest="noise_sd", type=float)
    mse.add_argument("--active", type=int,
                     help="covariates entering the outcome surface")
    mse.add_argument("--phi", help="comma list applied to mwu/gsw designs")
    mse.add_argument("--p-grid", dest="p_grid")
    mse.add_argument("--designs", help=f"comma subset of {','.join(DESIGNS)}")
    mse.add_argument("--eps", type=float)
    mse.add_argument("--iters", type=int)
    mse.add_argument("--oracle-samples", dest="oracle_samples", type=int)
    mse.add_argument("--reps", type=int, help="estimator replications")
    mse.add_argument("--block-size", dest="block_size", type=int)
    mse.add_argument("--accept-prob", dest="accept_prob", type=float)
    mse.add_argument("--pilot-draws", dest="pilot_draws", type=int)
    mse.add_argument("--jobs", type=int)
    mse.set_defaults(func=cmd_mse_sweep, defaults=_MSE_DEFAULTS)

    gen = sub.add_parser("gen-data", help="write synthetic inputs as CSV")
    _add_common(gen)
    gen.add_argument("--kind", choices=("matrix", "covariates", "instance"))
    gen.add_argument("--m", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--d", type=int)
    gen.add_argument("--model", choices=OUTCOME_KINDS)
    gen.add_argument("--noise-sd", dest="noise_sd", type=float)
    gen.add_argument("--active", type=int)
    gen.set_defaults(func=cmd_gen_data, defaults=_GEN_DEFAULTS)

    hard = sub.add_parser(
        "hardness-demo",
        help="build set-splitting gadgets and verify their exact identities",
    )
    _add_common(hard)
    hard.add_argument("--instance",
                      help="instance file ('n m' header then 4 indices/line); "
                           "omitted: a random planted instance")
    hard.add_argument("--witness",
                      help="comma +-1 labels; omitted: the planted witness "
                           "when available, else all ones")
    hard.add_argument("--alpha", help="fraction in (0,1/2), e.g. 1/4")
    hard.add_argument("--beta", help="fraction in (0,1), e.g. 1/3")
    hard.add_argument("--universe", type=int, help="planted-instance elements")
    hard.add_argument("--sets", type=int, help="planted-instance sets")
    hard.set_defaults(func=cmd_hardness_demo, defaults=_HARDNESS_DEFAULTS)

    plot = sub.add_parser("plot", help="render a results CSV")
    plot.add_argument("--config", help="JSON file of flag defaults")
    plot.add_argument("--results", help="results CSV produced by a sweep")
    plot.add_argument("--out", help="image path (.svg/.pdf for vector output)")
    plot.set_defaults(func=cmd_plot, defaults=_PLOT_DEFAULTS)

    return parser


def _resolve_options(args) -> SimpleNamespace:
    """Merge CLI flags over config-file values over built-in defaults."""
    defaults = args.defaults
    config = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(
                f"{args.config}: not valid JSON ({exc})"
            ) from None
        if not isinstance(raw, dict):
            raise FileFormatError(
                f"{args.config}: config must be a flat JSON object"
            )
        for key, value in raw.items():
            norm = key.replace("-", "_")
            if norm not in defaults:
                raise InvalidInputError(
                    f"unknown config key {key!r} "
                    f"(valid: {', '.join(sorted(defaults))})"
                )
            config[norm] = value
    merged = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        merged[key] = cli_value if cli_value is not None else config.get(
            key, default
        )
    return SimpleNamespace(**merged)


def _parse_grid(text) -> list[float]:
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidInputError(
                f"grid syntax is start:stop:count, got {text!r}"
            )
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise InvalidInputError("grid count must be positive")
        values = np.linspace(start, stop, count)
    else:
        values = np.array([float(tok) for tok in text.split(",") if tok])
    if values.size == 0:
        raise InvalidInputError("empty probability grid")
    if (values <= 0).any() or (values >= 1).any():
        raise InvalidInputError(
            f"probability grid must lie strictly in (0,1), got {text!r}"
        )
    return [float(v) for v in values]


def _parse_designs(text) -> list[str]:
    names = [tok.strip() for tok in str(text).split(",") if tok.strip()]
    if not names:
        raise InvalidInputError("no designs requested")
    for name in names:
        if name not in DESIGNS:
            raise InvalidInputError(
                f"unknown design {name!r} (valid: {', '.join(DESIGNS)})"
            )
    return names


def _parse_phi_list(text) -> list[float]:
    values = [float(tok) for tok in str(text).split(",") if tok.strip()]
    if not values:
        raise InvalidInputError("empty phi list")
    for v in values:
        if not 0.0 < v <= 1.0:
            raise InvalidInputError(f"phi must lie in (0,1], got {v!r}")
    return values


# ---------------------------------------------------------------------------
# results CSV
# ---------------------------------------------------------------------------

def write_results(path, rows) -> None:
    """Write rows (sequences matching COLUMNS) under the schema header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {SCHEMA} columns={','.join(COLUMNS)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(rows)


def read_results(path) -> list[dict]:
    """Read a results CSV, validating the schema header."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith(f"# {SCHEMA}"):
            raise FileFormatError(
                f"{path}: missing schema header '# {SCHEMA} ...'"
            )
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != COLUMNS:
            raise FileFormatError(
                f"{path}: expected columns {','.join(COLUMNS)}, "
                f"got {reader.fieldnames}"
            )
        return list(reader)


def _aggregate(values) -> tuple[float, str, str]:
    """Mean and normal-approximation 95% CI strings across replications."""
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, "", ""
    half = _Z95 * values.std(ddof=1) / np.sqrt(values.size)
    return mean, _fmt(mean - half), _fmt(mean + half)


# ---------------------------------------------------------------------------
# worker plumbing
# ---------------------------------------------------------------------------

def _rng_for(seed, lane, index) -> np.random.Generator:
    """Independent substream addressed by (lane, index) under a master seed."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(lane, index))
    )


def _run_tasks(worker, payloads, jobs):
    jobs = int(jobs)
    if jobs > 1:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(jobs) as pool:
            return pool.map(worker, payloads)
    return [worker(payload) for payload in payloads]


def _build_design(name, options, rng, B=None, p=None, n=None, X=None):
    if name == "bernoulli":
        return BernoulliDesign(random_state=rng).fit(p, n)
    if name == "complete":
        return CompleteRandomization(random_state=rng).fit(p, n)
    if name == "block":
        return RandomizedBlockDesign(
            block_size=int(options.block_size), random_state=rng
        ).fit(X, p)
    if name == "rerand":
        return Rerandomization(
            accept_prob=float(options.accept_prob),
            pilot_draws=int(options.pilot_draws),
            random_state=rng,
        ).fit(X, p)
    if name == "gsw":
        return GramSchmidtWalk(random_state=rng).fit(B, p)
    if name == "mwu":
        return MWUDesign(
            epsilon=float(options.eps),
            iterations=int(options.iters),
            cov_samples=int(options.oracle_samples),
            random_state=rng,
        ).fit(B, p)
    raise InvalidInputError(f"unknown design {name!r}")


# ---------------------------------------------------------------------------
# ddm-sweep
# ---------------------------------------------------------------------------

def _ddm_matrix(options, rep):
    """Design matrix and covariate table for one matrix replication."""
    rng = _rng_for(options.seed, 0, rep)
    if options.source == "random":
        B = gen_random_matrix(int(options.m), int(options.n), rng)
        return B, B.T
    if options.source == "augmented":
        X = gen_covariates(int(options.n), int(options.d), rng)
        X = normalize_columns(X.T).T
        return build_augmented_matrix(X, float(options.phi)), X
    if options.source == "csv":
        if not options.csv:
            raise InvalidInputError("--source csv requires --csv PATH")
        B = ingest_covariate_csv(
            options.csv, rng=rng, subsample=options.subsample
        )
        return B, B.T
    raise InvalidInputError(f"unknown source {options.source!r}")


def _ddm_task(payload):
    options, name, p, rep, index = payload
    B, X = _ddm_matrix(options, rep)
    rng = _rng_for(options.seed, 1, index)
    design = _build_design(
        name, options, rng, B=B, p=p, n=B.shape[1], X=X
    )
    Z = design.sample(size=int(options.cov_samples))
    z0 = 2.0 * np.full(B.shape[1], p) - 1.0
    return ddm_objective(Z, B, z0)


def cmd_ddm_sweep(args) -> int:
    options = _resolve_options(args)
    grid = _parse_grid(options.p_grid)
    designs = _parse_designs(options.designs)
    reps = int(options.reps)
    if reps < 1:
        raise InvalidInputError("reps must be positive")
    phi_label = _fmt(options.phi) if options.source == "augmented" else "n/a"

    payloads = []
    index = 0
    for name in designs:
        for p in grid:
            for rep in range(reps):
                payloads.append((options, name, p, rep, index))
                index += 1
    values = _run_tasks(_ddm_task, payloads, options.jobs)

    rows = []
    cursor = 0
    for name in designs:
        for p in grid:
            chunk = values[cursor:cursor + reps]
            cursor += reps
            for rep, value in enumerate(chunk):
                rows.append((name, _fmt(p), phi_label, "opnorm_cov",
                             _fmt(value), "", "", rep))
            mean, lo, hi = _aggregate(chunk)
            rows.append((name, _fmt(p), phi_label, "opnorm_cov",
                         _fmt(mean), lo, hi, "agg"))
    write_results(options.out, rows)
    return 0


# ---------------------------------------------------------------------------
# mse-sweep
# ---------------------------------------------------------------------------

def _mse_instance(options):
    rng = _rng_for(options.seed, 0, 0)
    X = gen_covariates(int(options.n), int(options.d), rng)
    model = OutcomeModel(
        kind=options.model,
        noise_sd=float(options.noise_sd),
        active_covariates=int(options.active),
    )
    a, b = gen_outcomes(X, model, rng)
    return X, a, b


def _mse_task(payload):
    options, name, phi, p, index = payload
    X, a, b = _mse_instance(options)
    X_capped = normalize_columns(X.T).T
    inst = ExperimentInstance(X_capped, a, b, p)
    rng = _rng_for(options.seed, 1, index)
    B = (build_augmented_matrix(X_capped, phi)
         if name in _AUGMENTED_DESIGNS else None)
    design = _build_design(
        name, options, rng, B=B, p=p, n=inst.n, X=X_capped
    )
    tau = ate(inst)
    estimates = ht_replicates(design, inst, int(options.reps), rng)
    losses = (estimates - tau) ** 2
    batches = np.array_split(losses, min(10, losses.size))
    return float(losses.mean()), [float(b.mean()) for b in batches]


def cmd_mse_sweep(args) -> int:
    options = _resolve_options(args)
    grid = _parse_grid(options.p_grid)
    designs = _parse_designs(options.designs)
    phis = _parse_phi_list(options.phi)
    if int(options.reps) < 2:
        raise InvalidInputError("reps must be at least 2")

    payloads = []
    combos = []
    index = 0
    for name in designs:
        for phi in (phis if name in _AUGMENTED_DESIGNS else [None]):
            for p in grid:
                payloads.append((options, name, phi, p, index))
                combos.append((name, phi, p))
                index += 1
    results = _run_tasks(_mse_task, payloads, options.jobs)

    rows = []
    for (name, phi, p), (value, batch_means) in zip(combos, results):
        _, lo, hi = _aggregate(batch_means)
        rows.append((name, _fmt(p), _fmt(phi) if phi is not None else "n/a",
                     "mse", _fmt(value), lo, hi, "agg"))
    write_results(options.out, rows)
    return 0


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        writer.writerows([_fmt(v) for v in row] for row in rows)


def cmd_gen_data(args) -> int:
    options = _resolve_options(args)
    rng = _rng_for(options.seed, 0, 0)
    if options.kind == "matrix":
        B = gen_random_matrix(int(options.m), int(options.n), rng)
        _write_csv(options.out, None, B)
    elif options.kind == "covariates":
        X = gen_covariates(int(options.n), int(options.d), rng)
        header = [f"x{j + 1}" for j in range(X.shape[1])]
        _write_csv(options.out, header, X)
    elif options.kind == "instance":
        X, a, b = _mse_instance(options)
        header = [f"x{j + 1}" for j in range(X.shape[1])] + ["a", "b"]
        rows = np.column_stack([X, a, b])
        _write_csv(options.out, header, rows)
    else:
        raise InvalidInputError(f"unknown kind {options.kind!r}")
    return 0


# ---------------------------------------------------------------------------
# hardness-demo
# ---------------------------------------------------------------------------

def _max_abs_fraction(values) -> Fraction:
    top = Fraction(0)
    for v in values:
        top = max(top, abs(v))
    return top


def _exact_residual(int_matrix, exact_vector) -> Fraction:
    rows = (
        sum(int(c) * v for c, v in zip(row, exact_vector))
        for row in int_matrix
    )
    return _max_abs_fraction(rows)


def cmd_hardness_demo(args) -> int:
    options = _resolve_options(args)
    alpha = Fraction(options.alpha)
    beta = Fraction(options.beta)

    if options.instance:
        with open(options.instance, encoding="utf-8") as fh:
            inst = parse_set_splitting(fh.read())
        planted = None
    else:
        inst, planted = random_planted_instance(
            int(options.universe), int(options.sets),
            _rng_for(options.seed, 0, 0),
        )
    if options.witness:
        witness = np.array(
            [int(tok) for tok in str(options.witness).split(",")]
        )
    elif planted is not None:
        witness = planted
    else:
        witness = np.ones(inst.universe_size, dtype=np.int64)

    lines = []
    out = lines.append
    out(f"set-splitting instance: n={inst.universe_size} elements, "
        f"m={inst.n_sets} sets")
    out("".join(
        f"  set {j + 1}: {' '.join(str(i + 1) for i in s)}\n"
        for j, s in enumerate(inst.sets)
    ).rstrip("\n"))
    bad = unsplit_count(inst, witness)
    source = "planted" if (planted is not None and witness is planted) \
        else "provided"
    out(f"witness ({source}): {','.join(str(int(v)) for v in witness)}")
    out(f"unsplit sets under witness: {bad} "
        f"({'valid witness' if bad == 0 else 'NOT a witness'})")
    if inst.universe_size <= 16:
        best = exhaustive_min_unsplit(inst)
        out(f"exhaustive minimum of unsplit sets: {best} "
            f"({'satisfiable' if best == 0 else 'unsatisfiable'})")

    gadget = build_equal_gadget(inst)
    d, N = gadget.shape
    norms_sq = (gadget.scaled**2).sum(axis=0)
    out("")
    out(f"equal-probability gadget: {d} x {N}")
    out(f"  columns with exactly unit norm: "
        f"{int(np.count_nonzero(norms_sq == 3))}/{N} (exact)")
    completion = sign_completion(gadget, witness)
    tail = gadget.scaled[inst.n_sets:] @ completion
    out(f"  sign-completion tail residual: "
        f"{int(np.abs(tail).max(initial=0))} (exact integer)")
    if bad == 0:
        design = equal_gadget_zero_design(gadget, witness)
        full = gadget.scaled @ completion
        out(f"  two-atom design: mean residual "
            f"{_max_abs_fraction(design.mean_exact())} (exact), "
            f"max |B y'| = {int(np.abs(full).max())} (exact), "
            f"all marginals = 1/2")
    else:
        out("  two-atom zero-covariance design unavailable: "
            "witness does not split every set")

    unequal = build_unequal_gadget(inst, alpha, beta)
    rows3m, cols = unequal.shape
    out("")
    out(f"unequal-probability gadget (alpha={alpha}, beta={beta}): "
        f"{rows3m} x {cols}")
    levels = sorted(set(unequal.p_exact), reverse=True)
    out(f"  probability levels: {', '.join(str(v) for v in levels)}")
    if beta == Fraction(1, 2):
        out("  note: beta = 1/2 collapses the auxiliary levels "
            "(lambda = 0, homogeneous z0)")
    out(f"  max |M z0| = {_exact_residual(unequal.m_scaled, unequal.z0_exact)}"
        f" (exact rational)")
    out(f"  max column norm of B: {_fmt(np.linalg.norm(unequal.B, axis=0).max())}")
    if bad == 0:
        dist = satisfiable_distribution(unequal, witness)
        out(f"  five-atom design: weight sum = "
            f"{sum(dist.weights_exact, Fraction(0))} (exact)")
        mean_res = _max_abs_fraction(
            m - z for m, z in zip(dist.mean_exact(), unequal.z0_exact)
        )
        out(f"  five-atom mean - z0 residual: {mean_res} (exact)")
        atom_res = _max_abs_fraction(
            _exact_residual(unequal.m_scaled, atom) for atom in dist.atoms
        )
        out(f"  max |M z| over atoms: {atom_res} (exact, forces Cov(Mz)=0)")
    else:
        out("  five-atom zero-covariance design unavailable: "
            "witness does not split every set")
    out("")

    report = "\n".join(lines)
    if options.out == "-":
        sys.stdout.write(report)
    else:
        with open(options.out, "w", encoding="utf-8") as fh:
            fh.write(report)
        instance_path = str(options.out) + ".instance"
        with open(instance_path, "w", encoding="utf-8") as fh:
            fh.write(format_set_splitting(inst))
    return 0


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def plot_results(rows, ax) -> int:
    """Draw aggregate rows as metric-vs-p curves; returns the series count."""
    series: dict[tuple[str, str], list] = {}
    for row in rows:
        if row["rep"] != "agg":
            continue
        series.setdefault((row["design"], row["phi"]), []).append(row)
    for (design, phi), points in sorted(series.items()):
        points.sort(key=lambda r: float(r["p"]))
        x = np.array([float(r["p"]) for r in points])
        y = np.array([float(r["value"]) for r in points])
        label = design if phi == "n/a" else f"{design} (phi={phi})"
        ax.plot(x, y, marker="o", label=label)
        banded = [r for r in points if r["ci_lo"] and r["ci_hi"]]
        if banded:
            bx = np.array([float(r["p"]) for r in banded])
            lo = np.array([float(r["ci_lo"]) for r in banded])
            hi = np.array([float(r["ci_hi"]) for r in banded])
            ax.fill_between(bx, lo, hi, alpha=0.2)
    ax.set_xlabel("p")
    if rows:
        ax.set_ylabel(rows[0]["metric"])
    if series:
        ax.legend()
    return len(series)


def cmd_plot(args) -> int:
    options = _resolve_options(args)
    rows = read_results(options.results)
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    plot_results(rows, ax)
    fig.tight_layout()
    out = str(options.out)
    metadata = None
    if out.endswith(".svg"):
        metadata = {"Date": None}
    elif out.endswith(".pdf"):
        metadata = {"CreationDate": None}
    fig.savefig(out, metadata=metadata)
    plt.close(fig)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DDMDesignError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
