import re
import subprocess
import sys

import numpy as np
import pytest

from wnnimpute.cli import main, parse_method_label
from wnnimpute.data import CategoricalMatrix, read_csv, write_csv
from wnnimpute.simulation import discretize, mcar_mask, sample_mvn_ar1


@pytest.fixture
def complete_csv(tmp_path):
    X = sample_mvn_ar1(40, 6, 0.8, 1)
    Z = discretize(X, [[0.4, 0.35, 0.25]] * 6)
    path = tmp_path / "complete.csv"
    write_csv(Z, path)
    return path, Z


@pytest.fixture
def masked_csv(tmp_path, complete_csv):
    _, Z = complete_csv
    masked = mcar_mask(Z, 0.1, 2)[0]
    path = tmp_path / "masked.csv"
    write_csv(masked, path)
    return path, masked


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_impute_mode(tmp_path, masked_csv, capsys):
    src, Z = masked_csv
    out = tmp_path / "out.csv"
    code, _, _ = _run(["impute", src, out, "--method", "mode"], capsys)
    assert code == 0
    assert out.read_text().startswith("# wnnimpute ")
    before = [r.split(",") for r in src.read_text().splitlines()[1:]]
    after = [r.split(",") for r in out.read_text().splitlines()[2:]]
    assert read_csv(out).n_missing == 0
    for rb, ra in zip(before, after):
        assert all(a == b for a, b in zip(ra, rb) if b != "NA")


def test_impute_deterministic(tmp_path, masked_csv, capsys):
    src, _ = masked_csv
    args = ["--method", "wnnsel_cat", "--lambda", "0.5", "--omega", "4", "--q", "2",
            "--kernel", "gaussian", "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(["impute", src, a, *args], capsys)[0] == 0
    assert _run(["impute", src, b, *args], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_threads_do_not_change_output(tmp_path, masked_csv, capsys):
    src, _ = masked_csv
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["--lambda", "0.3", "--omega", "2", "--no-header"]
    _run(["impute", src, a, *base], capsys)
    _run(["impute", src, b, *base, "--threads", "3"], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_tuned_pair_matches_tune_command(tmp_path, masked_csv, capsys):
    src, _ = masked_csv
    grid = ["--lambda-grid", "0.05,0.5,2", "--omega-grid", "0,2,6", "--cv-sets", "2",
            "--seed", "4"]
    code, _, err = _run(["impute", src, tmp_path / "o.csv", *grid], capsys)
    assert code == 0
    line = re.search(r"tuned lambda=(\S+) omega=(\S+)", err)
    assert line
    code, _, err2 = _run(["tune", src, tmp_path / "cv.csv", *grid], capsys)
    assert code == 0
    assert re.search(r"tuned lambda=(\S+) omega=(\S+)", err2).groups() == line.groups()
    rows = (tmp_path / "cv.csv").read_text().splitlines()
    assert rows[1] == "t,lambda,omega,pfc" and len(rows) == 2 + 2 * 3 * 3


def test_dum_and_knn(tmp_path, masked_csv, capsys):
    src, _ = masked_csv
    assert _run(["impute", src, tmp_path / "d.csv", "--method", "wnnsel_dum",
                 "--lambda", "0.3", "--omega", "2"], capsys)[0] == 0
    assert _run(["impute", src, tmp_path / "k.csv", "--method", "knn_cat", "--k", "3",
                 "--knn-distance", "cohen"], capsys)[0] == 0


@pytest.mark.parametrize("extra", [
    ["--method", "wnnsel_dum", "--kernel", "triangular"],
    ["--method", "wnnsel_dum", "--q", "1"],
    ["--method", "knn_cat"],
    ["--method", "mode", "--lambda", "0.5"],
    ["--method", "wnnsel_cat", "--knn-distance", "smc"],
    ["--q", "3"],
    ["--lambda-grid", "a,b"],
])
def test_usage_errors(tmp_path, masked_csv, extra, capsys):
    src, _ = masked_csv
    with pytest.raises(SystemExit) as exc:
        main(["impute", str(src), str(tmp_path / "o.csv"), *extra])
    assert exc.value.code == 2


def test_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n1\n")
    code, _, err = _run(["impute", bad, tmp_path / "o.csv", "--method", "mode"], capsys)
    assert code == 3
    assert err.strip().startswith("error: parse:") and len(err.strip().splitlines()) == 1


def test_missing_file_exit_code(tmp_path, capsys):
    code, _, err = _run(["impute", tmp_path / "nope.csv", tmp_path / "o.csv"], capsys)
    assert code == 3 and err.startswith("error: io:")


def test_method_not_applicable(tmp_path, capsys):
    path = tmp_path / "mixed.csv"
    path.write_text("a,b\nx,1\ny,2\nx,3\nNA,1\n")
    code, _, err = _run(["impute", path, tmp_path / "o.csv", "--method", "knn_cat",
                         "--k", "2"], capsys)
    assert code == 3 and "method-not-applicable" in err


def test_infeasible_plan_exit_code(tmp_path, capsys):
    path = tmp_path / "small.csv"
    path.write_text("a,b\n1,1\n2,2\n1,NA\n")
    code, _, err = _run(["tune", path, tmp_path / "cv.csv", "--injection-rate", "0.9",
                         "--cv-sets", "1"], capsys)
    assert code == 4 and err.startswith("error: plan-infeasible")


def test_bench(tmp_path, complete_csv, capsys):
    src, Z = complete_csv
    out = tmp_path / "bench.csv"
    code, stdout, _ = _run(["bench", src, "--rates", "0.1,0.2", "--runs", "2",
                            "--methods", "mode,knn_cat.smc.k3", "--out", out], capsys)
    assert code == 0 and "knn_cat.smc.k3" in stdout
    rows = [r.split(",") for r in out.read_text().splitlines() if not r.startswith("#")]
    assert rows[0][:5] == ["miss_rate", "method", "run", "pfc", "n_cells"]
    for r in rows[1:]:
        assert int(r[4]) == round(float(r[0]) * Z.codes.size)
    assert len(rows) == 1 + 2 * 2 * 2


def test_bench_bad_label(complete_csv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", str(complete_csv[0]), "--methods", "wnnsel_cat.box.q1"])
    assert exc.value.code == 2


def test_assoc(tmp_path, complete_csv, capsys):
    src, Z = complete_csv
    out = tmp_path / "a.csv"
    assert _run(["assoc", src, out, "--no-header"], capsys)[0] == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + Z.p
    assert float(lines[1].split(",")[1]) == 1.0
    assert _run(["assoc", src, out, "--measure", "dummy_pearson"], capsys)[0] == 0


def test_simulate(tmp_path, capsys):
    scen = tmp_path / "s.yaml"
    scen.write_text(
        "name: mini\nn: 20\np: 4\nrho: 0.8\ncategories: {choices: [3]}\n"
        "miss_rates: [0.1, 0.2]\nreplicates: 2\nseed: 1\n"
        "methods:\n  - {method: mode}\n  - {method: wnnsel_cat, q: 1}\ncv: {n_sets: 1}\n")
    out, table = tmp_path / "r.csv", tmp_path / "t.txt"
    code, stdout, _ = _run(["simulate", scen, "--out", out, "--table", table], capsys)
    assert code == 0 and "mini" in stdout
    assert len([r for r in out.read_text().splitlines() if not r.startswith("#")]) == 1 + 2 * 2 * 2
    assert table.read_text().strip() == stdout.strip()


def test_parse_method_label_roundtrip():
    for label in ("mode", "wnnsel_dum", "wnnsel_cat.gauss.q1", "wnnsel_cat.tri.q2",
                  "knn_cat.pcc.k5"):
        assert parse_method_label(label).label() == label
    with pytest.raises(ValueError):
        parse_method_label("wnnsel_cat")


def test_console_script(tmp_path, masked_csv):
    src, _ = masked_csv
    proc = subprocess.run([sys.executable, "-m", "wnnimpute.cli", "impute", str(src),
                           str(tmp_path / "o.csv"), "--method", "mode"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "wnnimpute.cli", "frobnicate"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
