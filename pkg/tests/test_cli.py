"""End-to-end tests for the command-line harness.

Everything here runs at toy scale (tiny matrices, a handful of MWU
iterations, small sample counts) so the full surface -- all five
subcommands, config precedence, the exit-code contract and the
byte-identical re-run guarantee -- is exercised in seconds.
"""

from __future__ import annotations

import json
import re
from types import SimpleNamespace

import numpy as np
import numpy.testing as npt
import pytest

from ddmdesign import cli
from ddmdesign.cli import (
    COLUMNS,
    DESIGNS,
    SCHEMA,
    main,
    plot_results,
    read_results,
    write_results,
)
from ddmdesign.data import gen_random_matrix
from ddmdesign.errors import FileFormatError, InvalidInputError, StalledWalkError
from ddmdesign.hardness import parse_set_splitting

# ===========================================================================
# shared toy-scale configurations
# ===========================================================================

FAST_DDM_FLAGS = [
    "--seed", "11", "--m", "4", "--n", "12", "--p-grid", "0.3,0.6",
    "--eps", "0.5", "--iters", "4", "--oracle-samples", "4",
    "--cov-samples", "300", "--reps", "2", "--block-size", "4",
    "--accept-prob", "0.2", "--pilot-draws", "400",
]

FAST_MSE_FLAGS = [
    "--seed", "5", "--n", "16", "--d", "3", "--model", "linear",
    "--noise-sd", "0.05", "--active", "3", "--phi", "0.6",
    "--p-grid", "0.5", "--designs", "bernoulli,mwu", "--eps", "0.5",
    "--iters", "4", "--oracle-samples", "4", "--reps", "60",
]

# Three four-element sets over seven elements; the witness 2-2-splits all
# of them while the all-ones labelling splits none.
MIXED_INSTANCE = "7 3\n1 2 3 4\n1 2 5 6\n1 3 5 7\n"
MIXED_WITNESS = "1,-1,-1,1,1,-1,-1"


def run_ddm_sweep(out_path, extra=()):
    return main(["ddm-sweep", *FAST_DDM_FLAGS, "--out", str(out_path), *extra])


def fast_ddm_options(out_path):
    """The resolved option namespace matching FAST_DDM_FLAGS."""
    merged = dict(cli._DDM_DEFAULTS)
    merged.update(
        seed=11, m=4, n=12, p_grid="0.3,0.6", eps=0.5, iters=4,
        oracle_samples=4, cov_samples=300, reps=2, block_size=4,
        accept_prob=0.2, pilot_draws=400, out=str(out_path),
    )
    return SimpleNamespace(**merged)


@pytest.fixture(scope="module")
def ddm_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("sweep") / "results.csv"
    assert run_ddm_sweep(path) == 0
    return path


# ===========================================================================
# parsing helpers
# ===========================================================================

def test_fmt_uses_twelve_significant_digits():
    assert cli._fmt(0.5) == "0.5"
    assert cli._fmt(2) == "2"
    assert cli._fmt(1.0 / 3.0) == "0.333333333333"


def test_parse_grid_linspace_form():
    got = cli._parse_grid("0.1:0.9:5")
    npt.assert_allclose(got, [0.1, 0.3, 0.5, 0.7, 0.9], rtol=0, atol=1e-15)
    assert cli._parse_grid("0.4:0.4:1") == [0.4]


def test_parse_grid_comma_form():
    assert cli._parse_grid("0.25,0.5,0.75") == [0.25, 0.5, 0.75]
    assert cli._parse_grid("0.5") == [0.5]


def test_parse_grid_rejects_bad_input():
    for text in ("0:0.9:3", "0.1:1:3", "0.2,1.0", "0.1:0.9", "", "0.5:0.9:0"):
        with pytest.raises(InvalidInputError):
            cli._parse_grid(text)


def test_parse_designs_subset_and_whitespace():
    assert cli._parse_designs(" gsw , mwu ") == ["gsw", "mwu"]
    assert cli._parse_designs(",".join(DESIGNS)) == list(DESIGNS)
    with pytest.raises(InvalidInputError, match="unknown design"):
        cli._parse_designs("mwu,frobnicate")
    with pytest.raises(InvalidInputError):
        cli._parse_designs(" , ")


def test_parse_phi_list_bounds():
    assert cli._parse_phi_list("0.5,1.0") == [0.5, 1.0]
    for text in ("0", "1.5", "-0.2", ""):
        with pytest.raises(InvalidInputError):
            cli._parse_phi_list(text)


# ===========================================================================
# rng addressing and aggregation
# ===========================================================================

def test_rng_for_is_addressed_by_lane_and_index():
    base = cli._rng_for(7, 1, 3).random(5)
    npt.assert_array_equal(cli._rng_for(7, 1, 3).random(5), base)
    assert not np.array_equal(cli._rng_for(7, 1, 4).random(5), base)
    assert not np.array_equal(cli._rng_for(7, 2, 3).random(5), base)
    assert not np.array_equal(cli._rng_for(8, 1, 3).random(5), base)


def test_aggregate_matches_manual_normal_interval():
    values = [1.0, 2.0, 4.0]
    mean, lo, hi = cli._aggregate(values)
    assert mean == pytest.approx(7.0 / 3.0, rel=1e-15)
    half = 1.959963984540054 * np.std(values, ddof=1) / np.sqrt(3.0)
    assert lo == cli._fmt(mean - half)
    assert hi == cli._fmt(mean + half)


def test_aggregate_single_value_has_no_interval():
    assert cli._aggregate([1.5]) == (1.5, "", "")


# ===========================================================================
# results CSV round trip
# ===========================================================================

def test_results_roundtrip_preserves_rows(tmp_path):
    rows = [
        ("mwu", "0.5", "n/a", "opnorm_cov", "1.25", "1.1", "1.4", 0),
        ("gsw", "0.5", "0.9", "opnorm_cov", "2", "", "", "agg"),
    ]
    path = tmp_path / "r.csv"
    write_results(path, rows)
    first = path.read_text(encoding="utf-8").splitlines()[0]
    assert first == f"# {SCHEMA} columns={','.join(COLUMNS)}"
    back = read_results(path)
    assert back == [
        dict(zip(COLUMNS,
                 ("mwu", "0.5", "n/a", "opnorm_cov", "1.25", "1.1", "1.4",
                  "0"))),
        dict(zip(COLUMNS, ("gsw", "0.5", "0.9", "opnorm_cov", "2", "", "",
                           "agg"))),
    ]


def test_read_results_rejects_missing_schema_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(COLUMNS) + "\nmwu,0.5,n/a,opnorm_cov,1,,,0\n")
    with pytest.raises(FileFormatError, match="schema header"):
        read_results(path)


def test_read_results_rejects_wrong_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(f"# {SCHEMA} columns=a,b\na,b\n1,2\n")
    with pytest.raises(FileFormatError, match="expected columns"):
        read_results(path)


# ===========================================================================
# config precedence
# ===========================================================================

def test_config_precedence_cli_over_config_over_default(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 3, "n": 9}))
    out = tmp_path / "B.csv"
    code = main(["gen-data", "--kind", "matrix", "--config", str(cfg),
                 "--n", "6", "--seed", "0", "--out", str(out)])
    assert code == 0
    loaded = np.loadtxt(out, delimiter=",")
    assert loaded.shape == (3, 6)  # m from the config file, n from the flag


def test_resolve_options_normalizes_dashed_config_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"noise-sd": 0.25}))
    args = SimpleNamespace(defaults=cli._GEN_DEFAULTS, config=str(cfg))
    options = cli._resolve_options(args)
    assert options.noise_sd == 0.25
    assert options.kind == "matrix"  # untouched built-in default


def test_unknown_config_key_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["gen-data", "--config", str(cfg),
                 "--out", str(tmp_path / "x.csv")]) == 2


def test_malformed_config_exits_4(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("this is not json")
    assert main(["gen-data", "--config", str(cfg),
                 "--out", str(tmp_path / "x.csv")]) == 4
    cfg.write_text(json.dumps([1, 2, 3]))
    assert main(["gen-data", "--config", str(cfg),
                 "--out", str(tmp_path / "x.csv")]) == 4


def test_missing_subcommand_raises_usage_error():
    with pytest.raises(SystemExit):
        main([])


# ===========================================================================
# ddm-sweep
# ===========================================================================

def test_ddm_sweep_rows_and_schema(ddm_csv):
    rows = read_results(ddm_csv)
    # per (design, p): one row per replication plus one aggregate row
    assert len(rows) == len(DESIGNS) * 2 * 3
    assert {r["design"] for r in rows} == set(DESIGNS)
    assert {r["p"] for r in rows} == {"0.3", "0.6"}
    assert all(r["metric"] == "opnorm_cov" for r in rows)
    assert all(r["phi"] == "n/a" for r in rows)
    assert all(float(r["value"]) >= 0.0 for r in rows)
    agg = [r for r in rows if r["rep"] == "agg"]
    assert len(agg) == len(DESIGNS) * 2
    for r in agg:
        assert r["ci_lo"] and r["ci_hi"]
        assert float(r["ci_lo"]) <= float(r["value"]) <= float(r["ci_hi"])
    reps = sorted(r["rep"] for r in rows if r["design"] == "mwu"
                  and r["p"] == "0.3")
    assert reps == ["0", "1", "agg"]


def test_ddm_sweep_rerun_is_byte_identical(ddm_csv, tmp_path):
    again = tmp_path / "again.csv"
    assert run_ddm_sweep(again) == 0
    assert again.read_bytes() == ddm_csv.read_bytes()


def test_ddm_sweep_parallel_run_matches_serial(ddm_csv, tmp_path):
    par = tmp_path / "par.csv"
    assert run_ddm_sweep(par, extra=("--jobs", "2")) == 0
    assert par.read_bytes() == ddm_csv.read_bytes()


def test_ddm_sweep_rows_replay_from_task_indices(ddm_csv, tmp_path):
    """Each stored value is reproducible from its (lane, index) address."""
    rows = read_results(ddm_csv)
    options = fast_ddm_options(tmp_path / "unused.csv")
    grid = cli._parse_grid(options.p_grid)
    names = cli._parse_designs(options.designs)
    task_index = {}
    counter = 0
    for name in names:
        for p in grid:
            for rep in range(int(options.reps)):
                task_index[(name, cli._fmt(p), str(rep))] = counter
                counter += 1
    for key in (("bernoulli", "0.3", "0"), ("mwu", "0.6", "1"),
                ("gsw", "0.3", "0")):
        row = next(r for r in rows
                   if (r["design"], r["p"], r["rep"]) == key)
        name, p_str, rep_str = key
        value = cli._ddm_task(
            (options, name, float(p_str), int(rep_str), task_index[key])
        )
        assert row["value"] == cli._fmt(value)


def test_ddm_sweep_source_csv_requires_path(tmp_path):
    assert run_ddm_sweep(tmp_path / "r.csv", extra=("--source", "csv")) == 2


def test_ddm_sweep_bad_grid_exits_2(tmp_path):
    code = main(["ddm-sweep", "--p-grid", "0:0.9:4",
                 "--out", str(tmp_path / "r.csv")])
    assert code == 2


def test_numerical_failures_exit_3(tmp_path, monkeypatch):
    def stalled(worker, payloads, jobs):
        raise StalledWalkError("no admissible step")

    monkeypatch.setattr(cli, "_run_tasks", stalled)
    assert run_ddm_sweep(tmp_path / "r1.csv") == 3

    def singular(worker, payloads, jobs):
        raise np.linalg.LinAlgError("eigendecomposition failed")

    monkeypatch.setattr(cli, "_run_tasks", singular)
    assert run_ddm_sweep(tmp_path / "r2.csv") == 3


def test_unwritable_output_exits_4(tmp_path):
    missing = tmp_path / "no-such-dir" / "B.csv"
    assert main(["gen-data", "--kind", "matrix", "--m", "2", "--n", "3",
                 "--out", str(missing)]) == 4


# ===========================================================================
# mse-sweep
# ===========================================================================

def test_mse_sweep_smoke(tmp_path):
    out = tmp_path / "mse.csv"
    assert main(["mse-sweep", *FAST_MSE_FLAGS, "--out", str(out)]) == 0
    rows = read_results(out)
    assert [(r["design"], r["phi"]) for r in rows] == [
        ("bernoulli", "n/a"), ("mwu", "0.6"),
    ]
    for r in rows:
        assert r["metric"] == "mse"
        assert r["rep"] == "agg"
        assert float(r["value"]) >= 0.0
        assert r["ci_lo"] and r["ci_hi"]
        assert float(r["ci_lo"]) <= float(r["value"]) <= float(r["ci_hi"])


def test_mse_sweep_requires_two_reps(tmp_path):
    code = main(["mse-sweep", *FAST_MSE_FLAGS[:-2], "--reps", "1",
                 "--out", str(tmp_path / "mse.csv")])
    assert code == 2


# ===========================================================================
# gen-data
# ===========================================================================

def test_gen_data_matrix_matches_library_generator(tmp_path):
    out = tmp_path / "B.csv"
    argv = ["gen-data", "--kind", "matrix", "--m", "4", "--n", "6",
            "--seed", "3", "--out", str(out)]
    assert main(argv) == 0
    loaded = np.loadtxt(out, delimiter=",")
    expected = gen_random_matrix(4, 6, cli._rng_for(3, 0, 0))
    npt.assert_allclose(loaded, expected, rtol=1e-11, atol=1e-15)
    again = tmp_path / "B2.csv"
    assert main(argv[:-1] + [str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_gen_data_covariates_header_and_shape(tmp_path):
    out = tmp_path / "X.csv"
    assert main(["gen-data", "--kind", "covariates", "--n", "8", "--d", "3",
                 "--seed", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,x2,x3"
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (8, 3)


def test_gen_data_instance_appends_outcome_columns(tmp_path):
    out = tmp_path / "inst.csv"
    assert main(["gen-data", "--kind", "instance", "--n", "8", "--d", "3",
                 "--model", "quadratic", "--active", "2",
                 "--seed", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,x2,x3,a,b"
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (8, 5)


# ===========================================================================
# hardness-demo
# ===========================================================================

def test_hardness_demo_planted_instance_report(tmp_path):
    out = tmp_path / "report.txt"
    assert main(["hardness-demo", "--seed", "0", "--out", str(out)]) == 0
    report = out.read_text()
    assert "set-splitting instance: n=12 elements, m=6 sets" in report
    assert "witness (planted):" in report
    assert "unsplit sets under witness: 0 (valid witness)" in report
    assert "exhaustive minimum of unsplit sets: 0 (satisfiable)" in report
    match = re.search(r"columns with exactly unit norm: (\d+)/(\d+) \(exact\)",
                      report)
    assert match is not None and match.group(1) == match.group(2)
    assert "sign-completion tail residual: 0 (exact integer)" in report
    assert "two-atom design: mean residual 0 (exact)" in report
    assert "probability levels: 5/6, 3/4, 2/3" in report
    assert "max |M z0| = 0 (exact rational)" in report
    assert "five-atom design: weight sum = 1 (exact)" in report
    assert "five-atom mean - z0 residual: 0 (exact)" in report
    assert "max |M z| over atoms: 0 (exact, forces Cov(Mz)=0)" in report
    companion = parse_set_splitting(
        (tmp_path / "report.txt.instance").read_text()
    )
    assert companion.universe_size == 12 and companion.n_sets == 6


def test_hardness_demo_instance_file_with_witness(tmp_path):
    inst_file = tmp_path / "inst.txt"
    inst_file.write_text(MIXED_INSTANCE)
    out = tmp_path / "report.txt"
    assert main(["hardness-demo", "--instance", str(inst_file),
                 "--witness", MIXED_WITNESS, "--out", str(out)]) == 0
    report = out.read_text()
    assert "set-splitting instance: n=7 elements, m=3 sets" in report
    assert f"witness (provided): {MIXED_WITNESS}" in report
    assert "unsplit sets under witness: 0 (valid witness)" in report
    assert "max |B y'| = 0 (exact)" in report


def test_hardness_demo_all_ones_fallback_is_not_a_witness(tmp_path):
    inst_file = tmp_path / "inst.txt"
    inst_file.write_text(MIXED_INSTANCE)
    out = tmp_path / "report.txt"
    assert main(["hardness-demo", "--instance", str(inst_file),
                 "--out", str(out)]) == 0
    report = out.read_text()
    assert "witness (provided): 1,1,1,1,1,1,1" in report
    assert "unsplit sets under witness: 3 (NOT a witness)" in report
    assert "exhaustive minimum of unsplit sets: 0 (satisfiable)" in report
    assert "two-atom zero-covariance design unavailable" in report
    assert "five-atom zero-covariance design unavailable" in report


def test_hardness_demo_beta_half_collapses_levels(tmp_path):
    inst_file = tmp_path / "inst.txt"
    inst_file.write_text(MIXED_INSTANCE)
    out = tmp_path / "report.txt"
    assert main(["hardness-demo", "--instance", str(inst_file),
                 "--witness", MIXED_WITNESS, "--beta", "1/2",
                 "--out", str(out)]) == 0
    report = out.read_text()
    assert "probability levels: 3/4" in report
    assert "beta = 1/2 collapses the auxiliary levels" in report


def test_hardness_demo_writes_report_to_stdout(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    inst_file = tmp_path / "inst.txt"
    inst_file.write_text(MIXED_INSTANCE)
    assert main(["hardness-demo", "--instance", str(inst_file),
                 "--witness", MIXED_WITNESS, "--out", "-"]) == 0
    report = capsys.readouterr().out
    assert "set-splitting instance: n=7 elements, m=3 sets" in report
    # stdout mode must not leave report or companion files behind
    assert sorted(path.name for path in tmp_path.iterdir()) == ["inst.txt"]


def test_hardness_demo_invalid_alpha_exits_2(tmp_path):
    out = str(tmp_path / "report.txt")
    assert main(["hardness-demo", "--alpha", "2/3", "--out", out]) == 2
    assert main(["hardness-demo", "--alpha", "nonsense", "--out", out]) == 2


# ===========================================================================
# plot
# ===========================================================================

def test_plot_results_counts_series_and_labels():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    def row(design, phi, p, value, rep="agg"):
        return {"design": design, "p": p, "phi": phi,
                "metric": "opnorm_cov", "value": value,
                "ci_lo": "", "ci_hi": "", "rep": rep}

    rows = [
        row("mwu", "0.5", "0.2", "1.0"),
        row("mwu", "0.5", "0.4", "0.9"),
        row("mwu", "0.9", "0.2", "1.1"),
        row("gsw", "n/a", "0.2", "2.0"),
        row("gsw", "n/a", "0.3", "2.0", rep="0"),  # per-rep rows are skipped
    ]
    fig, ax = plt.subplots()
    try:
        assert plot_results(rows, ax) == 3
        assert len(ax.lines) == 3
        labels = [t.get_text() for t in ax.get_legend().get_texts()]
        assert labels == ["gsw", "mwu (phi=0.5)", "mwu (phi=0.9)"]
    finally:
        plt.close(fig)


def test_plot_command_writes_svg(ddm_csv, tmp_path):
    out = tmp_path / "curves.svg"
    assert main(["plot", "--results", str(ddm_csv), "--out", str(out)]) == 0
    head = out.read_text()[:500]
    assert head.startswith("<?xml")
    assert "<svg" in head


def test_plot_accepts_empty_results(tmp_path):
    src = tmp_path / "empty.csv"
    write_results(src, [])
    out = tmp_path / "empty.svg"
    assert main(["plot", "--results", str(src), "--out", str(out)]) == 0
    assert out.exists()


def test_plot_schema_mismatch_exits_4(tmp_path):
    src = tmp_path / "bad.csv"
    src.write_text("design,p\nmwu,0.5\n")
    assert main(["plot", "--results", str(src),
                 "--out", str(tmp_path / "x.svg")]) == 4


def test_plot_missing_results_file_exits_4(tmp_path):
    assert main(["plot", "--results", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "x.svg")]) == 4
