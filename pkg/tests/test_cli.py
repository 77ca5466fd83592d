import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from agnostic import report
from agnostic.cli import main
from agnostic.harness import IntervalReport

from conftest import WINE
from oracles import conformal_p_intercept_only


def write_csv(path, header, rows):
    path.write_text(",".join(header) + "\n" + "\n".join(",".join(map(repr, r)) for r in rows) + "\n")
    return path


@pytest.fixture(scope="module")
def wine_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("wine")
    assert main(["harness", "--input", str(WINE), "--response", "Quality", "--out", str(out),
                 "--plot"]) == 0
    return out


def test_harness_writes_files(wine_out):
    for name in ("selection.tsv", "risk.tsv", "inflation.tsv", "projected.tsv", "intervals.svg"):
        assert (wine_out / name).stat().st_size > 0
    risk = {r.label: r for r in report.read_intervals(wine_out / "risk.tsv")}
    assert risk["R"].upper < risk["R_null"].lower
    names = [r["name"] for r in report.read_tsv(wine_out / "selection.tsv")]
    assert "Alcohol" in names and names[0] == "(Intercept)"
    assert (wine_out / "intervals.svg").read_text().startswith("<svg")


def test_missing_input(tmp_path):
    assert main(["harness", "--input", str(tmp_path / "nope.csv"), "--response", "y",
                 "--out", str(tmp_path)]) == 1


def test_unknown_response(tmp_path):
    f = write_csv(tmp_path / "d.csv", ["a", "y"], [(1.0, 2.0)] * 10)
    assert main(["select", "--input", str(f), "--response", "z", "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("argv", [["harness"], ["bound", "--C", "1"], ["frobnicate"],
                                  ["harness", "--input", "x", "--response", "y", "--alpha", "2"]])
def test_bad_flags(argv):
    assert main(argv) == 3


def _run(tmp_path, threads, tag):
    out = tmp_path / tag
    env = dict(os.environ, HARNESS_THREADS=str(threads))
    for cmd in (["harness", "--input", str(WINE), "--response", "Quality", "--selector", "lasso"],
                ["bound", "--C", "1", "--L", "1", "--n", "100", "--p", "5", "--delta", "0.1",
                 "--verify", "--reps", "100", "--holdout", "5000"]):
        subprocess.run([sys.executable, "-m", "agnostic.cli", *cmd, "--out", str(out)],
                       env=env, check=True, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_thread_count_does_not_change_output(tmp_path):
    one, eight = _run(tmp_path, 1, "t1"), _run(tmp_path, 8, "t8")
    assert one.keys() == eight.keys() and len(one) >= 5
    assert one == eight


def test_conformal_matches_enumeration(tmp_path):
    f = write_csv(tmp_path / "d.csv", ["x", "y"], [(1.0, 0.0), (5.0, 1.0), (2.0, 3.0), (8.0, 7.0)])
    assert main(["conformal", "--input", str(f), "--response", "y", "--x-new", "4",
                 "--predictor", "mean", "--alpha", "0.3", "--grid-points", "101",
                 "--out", str(tmp_path)]) == 0
    rows = report.read_tsv(tmp_path / "pvalues.tsv")
    assert len(rows) == 101
    for r in rows:
        assert Fraction(r["p_value"]) == conformal_p_intercept_only([0, 1, 3, 7], float(r["y"]))
    iv = report.read_tsv(tmp_path / "interval.tsv")[0]
    assert float(iv["lo"]) < float(iv["hi"]) and iv["empty"] == "0"


def test_conformal_tiny_alpha_is_numerical_failure(tmp_path):
    rng = np.random.default_rng(0)
    f = write_csv(tmp_path / "d.csv", ["a", "y"], rng.standard_normal((20, 2)).tolist())
    assert main(["conformal", "--input", str(f), "--response", "y", "--x-new", "0",
                 "--alpha", "0.001", "--out", str(tmp_path)]) == 2


def test_conformal_x_new_checks(tmp_path):
    f = write_csv(tmp_path / "d.csv", ["a", "b", "y"], [(1.0, 2.0, 3.0)] * 5)
    base = ["conformal", "--input", str(f), "--response", "y", "--out", str(tmp_path)]
    assert main(base + ["--x-new", "1"]) == 3
    assert main(base + ["--x-new", "1,zz"]) == 3
    assert main(base + ["--x-new", "0,0", "--predictor", "subset:q"]) == 3
    row = write_csv(tmp_path / "row.csv", ["b", "a"], [(0.5, 0.25)])
    assert main(base + ["--x-new-csv", str(tmp_path / "missing.csv")]) == 1
    rng = np.random.default_rng(1)
    g = write_csv(tmp_path / "e.csv", ["a", "b", "y"], rng.standard_normal((30, 3)).tolist())
    assert main(["conformal", "--input", str(g), "--response", "y", "--x-new-csv", str(row),
                 "--out", str(tmp_path)]) == 0


def test_conformal_lambda_path_keeps_signal(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((60, 4))
    y = 5 * x[:, 0] + 0.1 * rng.standard_normal(60)
    f = write_csv(tmp_path / "d.csv", ["a", "b", "c", "d", "y"], np.column_stack([x, y]).tolist())
    assert main(["conformal", "--input", str(f), "--response", "y", "--x-new", "0.5,0,0,0",
                 "--lambda-path", "--k-lambdas", "20", "--grid-points", "200",
                 "--out", str(tmp_path)]) == 0
    rows = report.read_tsv(tmp_path / "lambda_choice.tsv")
    chosen = [r for r in rows if r["chosen"] == "1"]
    assert len(rows) == 20 and len(chosen) == 1
    assert float(chosen[0]["l1_norm"]) > 0
    iv = report.read_tsv(tmp_path / "interval.tsv")[0]
    assert float(iv["lo"]) < 2.5 < float(iv["hi"])


def test_bound_prints_value(capsys, tmp_path):
    assert main(["bound", "--C", "1", "--L", "1", "--n", "8", "--p", "1",
                 "--delta", repr(2 / np.e), "--out", str(tmp_path)]) == 0
    assert float(capsys.readouterr().out.strip()) == pytest.approx(1.0, abs=1e-11)


def test_bound_rejects_delta(tmp_path):
    assert main(["bound", "--C", "1", "--L", "1", "--n", "8", "--p", "1", "--delta", "1",
                 "--out", str(tmp_path)]) == 3
    assert main(["bound", "--C", "1", "--L", "1", "--n", "8", "--p", "1", "--delta", "0.1",
                 "--verify", "--reps", "50", "--out", str(tmp_path)]) == 3


def test_bound_verify_writes_file(tmp_path):
    assert main(["bound", "--C", "1", "--L", "1", "--n", "100", "--p", "5", "--delta", "0.1",
                 "--verify", "--reps", "100", "--holdout", "5000", "--out", str(tmp_path)]) == 0
    row = report.read_tsv(tmp_path / "boundcheck.tsv")[0]
    assert row["dgp"] == "bounded-sign" and row["reps"] == "100"
    assert 0 <= float(row["violation_rate"]) <= 1


@pytest.mark.parametrize("selector,trace", [("stepwise", "cp_trace.tsv"),
                                            ("lasso", "lasso_path.tsv")])
def test_select(tmp_path, selector, trace):
    assert main(["select", "--input", str(WINE), "--response", "Quality", "--selector", selector,
                 "--out", str(tmp_path)]) == 0
    assert len(report.read_tsv(tmp_path / trace)) > 1
    assert len(report.read_tsv(tmp_path / "selection.tsv")) >= 2


def test_tsv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    reps = []
    for i in range(20):
        a, b, c = np.sort(rng.standard_normal(3) * 10.0 ** rng.integers(-8, 8))
        reps.append(IntervalReport(f"v{i}", b, a, c, 0.95, "bonferroni(3)", "normal"))
    report.write_intervals(tmp_path / "i.tsv", reps)
    back = report.read_intervals(tmp_path / "i.tsv")
    for r, s in zip(reps, back):
        assert (s.label, s.correction, s.method, s.level) == (r.label, r.correction, r.method, 0.95)
        for f in ("estimate", "lower", "upper"):
            assert getattr(s, f) == pytest.approx(getattr(r, f), rel=5e-12)
            assert getattr(s, f) == float(f"{getattr(r, f):.12g}")


def test_fmt():
    assert report.fmt(0.0) == "0" and report.fmt(True) == "1" and report.fmt(np.int64(7)) == "7"
    assert report.fmt(1 / 3) == "0.333333333333"
