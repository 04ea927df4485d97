import csv
import json

import numpy as np
import pytest

from hsicmap.bench import fit_rate
from hsicmap.hsic import rhsic
from hsicmap.kernelcore import Bandwidth
from hsicmap.loader import read_matrix
from hsicmap.main import ResultRecord, main
from hsicmap.nulltest import feature_seed
from hsicmap.rff import feature_pair
from hsicmap.sensmap import rhsic_sensitivity


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch):
    for name in ("HSICMAP_METHOD", "HSICMAP_NULL", "HSICMAP_PERMUTATIONS", "HSICMAP_BANDWIDTH", "HSICMAP_STANDARDIZE", "HSICMAP_FEATURES"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("HSICMAP_LOG_LEVEL", "WARNING")


def _lines(out: str) -> list[dict]:
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_test_command_on_identical_columns(write_csv, capsys):
    col = np.arange(100.0) / 99.0
    x = write_csv("x.csv", col)
    y = write_csv("y.csv", col)
    assert main(["test", str(x), str(y), "--seed", "0"]) == 0
    out = capsys.readouterr().out
    (rec,) = _lines(out)
    assert rec["reject"] is True
    assert rec["pValue"] < 0.01
    assert rec["method"] == "hsic" and rec["n"] == 100 and rec["D"] is None
    assert rec["wallTimeMs"] is None
    assert ResultRecord.from_json(out.strip()).to_json() == out.strip()


def test_test_command_is_byte_reproducible(write_csv, capsys):
    rng = np.random.default_rng(0)
    x = write_csv("x.csv", rng.uniform(size=100))
    y = write_csv("y.csv", rng.uniform(size=100))
    argv = ["test", str(x), str(y), "--method", "rhsic", "--seed", "4", "--permutations", "50"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    rec = json.loads(first)
    assert 0.0 < rec["pValue"] <= 1.0
    assert rec["D"] == 30


def test_timing_flag_reports_wall_time(write_csv, capsys):
    col = np.linspace(0, 1, 30)
    x, y = write_csv("x.csv", col), write_csv("y.csv", col ** 2)
    assert main(["test", str(x), str(y), "--timing", "--permutations", "20"]) == 0
    assert json.loads(capsys.readouterr().out)["wallTimeMs"] >= 0.0


def test_malformed_csv_exits_with_line_number(tmp_path, write_csv, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1\n2\nabc\n4\n", encoding="utf-8")
    y = write_csv("y.csv", np.arange(4.0))
    assert main(["test", str(bad), str(y)]) == 2
    err = capsys.readouterr().err
    assert f"{bad}:3:" in err


def test_row_count_mismatch_exits_2(write_csv, capsys):
    x = write_csv("x.csv", np.arange(5.0))
    y = write_csv("y.csv", np.arange(6.0))
    assert main(["test", str(x), str(y)]) == 2
    assert "x.csv" in capsys.readouterr().err


def test_constant_input_with_auto_bandwidth_exits_3(write_csv, capsys):
    x = write_csv("x.csv", np.arange(10.0))
    y = write_csv("y.csv", np.ones(10))
    assert main(["test", str(x), str(y)]) == 3
    assert "degenerate" in capsys.readouterr().err


def test_bad_flag_value_exits_2(write_csv, capsys):
    x = write_csv("x.csv", np.arange(10.0))
    assert main(["test", str(x), str(x), "--alpha", "2"]) == 2
    assert main(["test", str(x), str(x), "--bandwidth", "wide"]) == 2


def test_sensitivity_files(tmp_path, write_csv, capsys):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 2))
    x = write_csv("x.csv", X, header=["a", "b"])
    y = write_csv("y.csv", np.sin(X[:, 0]) + 0.1 * rng.standard_normal(50), header=["target"])
    prefix = tmp_path / "out" / "run"
    argv = ["sensitivity", str(x), str(y), "--out", str(prefix), "--method", "rhsic", "--seed", "2"]
    assert main(argv) == 0
    summary = json.loads(capsys.readouterr().out)
    assert len(summary["files"]) == 3

    Sx = read_matrix(f"{prefix}_Sx.csv")
    assert Sx.values.shape == (50, 2) and Sx.names == ["a", "b"]
    lines = (tmp_path / "out" / "run_aggregates.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "kind,index,name,value"
    assert lines[1].startswith("per_feature,0,a,")

    before = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    assert main(argv) == 0
    after = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    assert before == after


def test_test_and_sensitivity_draw_the_same_frequencies(tmp_path, write_csv, capsys):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 2))
    y = X[:, :1] ** 2 + 0.1 * rng.standard_normal((40, 1))
    x, yf = write_csv("x.csv", X), write_csv("y.csv", y)
    assert main(["test", str(x), str(yf), "--method", "rhsic", "--seed", "9", "--permutations", "10"]) == 0
    rec = json.loads(capsys.readouterr().out)
    prefix = tmp_path / "shared"
    assert main(["sensitivity", str(x), str(yf), "--method", "rhsic", "--seed", "9", "--out", str(prefix)]) == 0

    Zx, Zy = feature_pair(X, y, 30, Bandwidth(rec["sigmaX"]), Bandwidth(rec["sigmaY"]), feature_seed(9))
    assert rhsic(Zx, Zy).value == pytest.approx(rec["statistic"], rel=1e-12)
    expected = rhsic_sensitivity(X, y, Zx, Zy)
    np.testing.assert_allclose(read_matrix(f"{prefix}_Sx.csv").values, expected.Sx, rtol=1e-12, atol=1e-300)


def test_sensitivity_of_constant_variable_is_zero(tmp_path, write_csv):
    x = write_csv("x.csv", np.linspace(-1, 1, 20))
    y = write_csv("y.csv", np.full(20, 4.0))
    prefix = tmp_path / "zero"
    assert main(["sensitivity", str(x), str(y), "--bandwidth", "1.0", "--out", str(prefix)]) == 0
    assert np.all(read_matrix(f"{prefix}_Sx.csv").values == 0.0)
    assert np.all(read_matrix(f"{prefix}_Sy.csv").values == 0.0)


def test_rank_command_finds_planted_feature(write_csv, capsys):
    rng = np.random.default_rng(2)
    X = rng.standard_normal((120, 4))
    x = write_csv("x.csv", X)
    y = write_csv("y.csv", X[:, 3])
    assert main(["rank", str(x), str(y), "--criterion", "pearson", "--nf", "2"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["selected"][0] == 3
    assert len(rec["selected"]) == 2
    assert sorted(rec["ranking"]) == [0, 1, 2, 3]
    assert main(["rank", str(x), str(y), "--nf", "9"]) == 2


def test_generate_then_causal(tmp_path, capsys):
    pairdir, meta = tmp_path / "pairs", tmp_path / "meta.csv"
    assert main(["generate", str(pairdir), str(meta), "--pairs", "8", "--n", "60", "--seed", "5"]) == 0
    capsys.readouterr()
    prefix = tmp_path / "res" / "cep"
    assert main(["causal", str(pairdir), str(meta), "--out", str(prefix), "--seed", "1", "--score", "Cs"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["pairs"] == 8
    assert {"aucC", "aucCs", "apC", "apCs", "accuracyC", "accuracyCs"} <= set(summary)
    for name in ("roc_C", "roc_Cs", "pr_C", "pr_Cs", "rate_C", "rate_Cs", "decisions"):
        assert (tmp_path / "res" / f"cep_{name}.csv").exists()


def test_causal_with_missing_pair_file_exits_2(tmp_path, capsys):
    (tmp_path / "pairs").mkdir()
    meta = tmp_path / "meta.csv"
    meta.write_text("id,direction,weight\n7,1->2,1\n", encoding="utf-8")
    assert main(["causal", str(tmp_path / "pairs"), str(meta), "--out", str(tmp_path / "c")]) == 2
    assert "pair0007.txt" in capsys.readouterr().err


def test_bench_smoke(capsys):
    assert main(["bench", "--sizes", "50", "--grid", "16", "--seeds", "3", "--seed", "0"]) == 0
    header, row = capsys.readouterr().out.strip().splitlines()
    assert header == "n,D,hsic,rhsic,hsic_ms,rhsic_ms,stat_error,sensitivity_error,product_error,bound"
    assert all(np.isfinite(float(v)) for v in row.split(","))


@pytest.mark.slow
def test_bench_error_column_decays_like_inverse_root_d(capsys):
    argv = ["bench", "--sizes", "100", "--grid", "16,64,256,1024", "--seeds", "20", "--seed", "0"]
    assert main(argv) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.strip().splitlines()))
    grid = [int(r["D"]) for r in rows]
    assert grid == [16, 64, 256, 1024]
    assert -0.7 <= fit_rate(grid, [float(r["stat_error"]) for r in rows]).slope <= -0.3
    assert all(float(r["product_error"]) <= float(r["bound"]) for r in rows)


def test_bench_without_product_column(capsys):
    assert main(["bench", "--sizes", "30", "--grid", "8", "--seeds", "2", "--no-product"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.strip().splitlines()))
    assert rows[0]["product_error"] == "nan"
    assert float(rows[0]["stat_error"]) >= 0.0
    assert main(["bench", "--sizes", "30", "--seeds", "0"]) == 2


def test_compare_reports_every_problem(capsys):
    assert main(["compare", "--n", "40", "--permutations", "20", "--seed", "0"]) == 0
    lines = _lines(capsys.readouterr().out)
    assert len(lines) == 15
    assert {"problem", "pearson", "hsic", "rhsic", "pValue", "meanSampleSensitivity"} <= set(lines[0])


def test_malformed_first_row_exits_2_with_line_one(tmp_path, write_csv, capsys):
    bad = tmp_path / "first.csv"
    bad.write_text("1,abc\n2,3\n4,5\n", encoding="utf-8")
    y = write_csv("y.csv", np.arange(3.0))
    assert main(["test", str(bad), str(y)]) == 2
    assert f"{bad}:1:" in capsys.readouterr().err


@pytest.mark.parametrize("method", ["hsic", "rhsic"])
def test_compare_regimes_ascent_step_raises_the_statistic(method, capsys):
    argv = ["compare", "--regimes", "--n", "120", "--seed", "0", "--method", method, "--features", "64"]
    assert main(argv) == 0
    lines = {rec["problem"]: rec for rec in _lines(capsys.readouterr().out)}
    assert set(lines) == {
        "linear-homoscedastic", "linear-heteroscedastic",
        "nonlinear-homoscedastic", "nonlinear-heteroscedastic",
    }
    for name in ("linear-homoscedastic", "linear-heteroscedastic"):
        rec = lines[name]
        assert rec["method"] == method
        assert rec["increased"] is True
        assert rec["statisticAfterStep"] > rec["statistic"] > 0.0
        assert len(rec["perFeature"]) == 2


def test_rank_by_hsic_finds_a_quadratic_that_pearson_misses(write_csv, capsys):
    rng = np.random.default_rng(8)
    X = rng.uniform(-1, 1, (500, 3))
    x = write_csv("x.csv", X)
    y = write_csv("y.csv", X[:, 0] ** 2)
    assert main(["rank", str(x), str(y), "--criterion", "hsic", "--nf", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["selected"] == [0]
    assert main(["rank", str(x), str(y), "--criterion", "pearson", "--nf", "3"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["scores"][0] < 0.35
