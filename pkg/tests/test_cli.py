import csv
import io
import json
import subprocess
import sys

import pytest

from arrowflow import cli
from arrowflow.data import REPORT_FIELDS
from arrowflow.modelio import load_model
from arrowflow.oracles import OracleReport

FAST = {"views": 3, "simulations": 2, "iterations": 60, "layers": [16], "embed_dim": 8}


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(FAST))
    return p


@pytest.fixture
def iris_csv():
    from conftest import FIXTURES
    return FIXTURES / "iris.csv"


@pytest.fixture
def trained(tmp_path, cfg, iris_csv, capsys):
    model = tmp_path / "model.json"
    code, out = run(capsys, "train", "--data", iris_csv, "--config", cfg, "--out", model,
                    "--log", tmp_path / "log.csv")
    assert code == 0
    return model, out


def test_train_report_and_determinism(trained, tmp_path, cfg, iris_csv, capsys):
    model, out = trained
    rows = rows_of(out)
    assert len(rows) == 1 and list(rows[0]) == list(REPORT_FIELDS)
    assert rows[0]["n_reps"] == "2"
    assert (tmp_path / "log.csv").read_text().startswith("simulation,view,t,eta,train_error")
    _, again = run(capsys, "train", "--data", iris_csv, "--config", cfg)
    assert again == out


def test_eval_reproduces_training_error(trained, iris_csv, capsys):
    model, _ = trained
    _, header = load_model(model)
    code, out = run(capsys, "eval", "--model", model, "--data", iris_csv)
    assert code == 0
    assert float(rows_of(out)[0]["error_mean"]) == pytest.approx(
        100 * header["extra"]["test_error"], abs=1e-3)


def test_eval_gaussian_grid(trained, iris_csv, capsys):
    model, _ = trained
    code, out = run(capsys, "eval", "--model", model, "--data", iris_csv,
                    "--perturb", "gaussian:0,0.1,0.25,0.5,1.0,2.0")
    rows = rows_of(out)
    assert code == 0 and len(rows) == 6
    assert [r["perturbation"] for r in rows][0] == "gaussian:0"
    assert all(r["n_reps"] == "5" for r in rows)


def test_eval_monotone_on_native_model(tmp_path, iris_csv, capsys):
    p = tmp_path / "native.json"
    p.write_text(json.dumps({**FAST, "encoding": "native"}))
    model = tmp_path / "n.json"
    run(capsys, "train", "--data", iris_csv, "--config", p, "--out", model)
    _, out = run(capsys, "eval", "--model", model, "--data", iris_csv, "--perturb", "none",
                 "--perturb", "monotone:log1p", "--perturb", "monotone:scale_100")
    errs = {r["error_mean"] for r in rows_of(out)}
    assert len(errs) == 1


def test_eval_feature_mismatch(trained, capsys):
    from conftest import FIXTURES
    model, _ = trained
    code, _ = run(capsys, "eval", "--model", model, "--data", FIXTURES / "wine.csv")
    assert code == 3


def test_sweep_rows_and_resume(tmp_path, cfg, iris_csv, capsys):
    out = tmp_path / "sweep.csv"
    grid = json.dumps({"embed_dim": [6, 8], "layers": [[8], [16]]})
    code, text = run(capsys, "sweep", "--data", iris_csv, "--config", cfg, "--grid", grid,
                     "--out", out)
    assert code == 0 and len(rows_of(text)) == 4
    rows = rows_of(out.read_text())
    assert len(rows) == 4
    rows[0]["error_mean"] = "12345"  # a completed row must be kept, not recomputed
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(REPORT_FIELDS))
        w.writeheader()
        w.writerows(rows)
    _, text = run(capsys, "sweep", "--data", iris_csv, "--config", cfg, "--grid", grid,
                  "--out", out)
    assert rows_of(text)[0]["error_mean"] == "12345"


def test_sweep_bad_grid(cfg, iris_csv, capsys):
    code, _ = run(capsys, "sweep", "--data", iris_csv, "--config", cfg, "--grid", "{}")
    assert code == 2
    code, _ = run(capsys, "sweep", "--data", iris_csv, "--config", cfg, "--grid", "{oops")
    assert code == 2


def test_knn_learning_gain_column(cfg, iris_csv, capsys):
    code, out = run(capsys, "knn", "--data", iris_csv, "--config", cfg, "--k", "1,3")
    rows = rows_of(out)
    assert code == 0 and [r["k_neighbors"] for r in rows] == ["1", "3"]
    assert all("learning_gain" in r for r in rows)


def test_proptest_exit_codes(capsys, monkeypatch):
    code, out = run(capsys, "proptest", "--quick")
    assert code == 0 and "FAIL" not in out
    bad = OracleReport("broken", 1, 1, 0.0, 1.0, False)
    monkeypatch.setattr("arrowflow.oracles.run_all", lambda seed, quick: [bad])
    code, out = run(capsys, "proptest")
    assert code == 4 and "FAIL" in out


def test_energy_table(capsys):
    code, out = run(capsys, "energy", "--format", "md")
    assert code == 0 and "14.884" in out and "35,014" in out and "43,571" in out
    assert out.splitlines()[1].startswith("|--")


def test_encode_native(iris_csv, capsys):
    code, out = run(capsys, "encode", "--data", iris_csv)
    rows = rows_of(out)
    assert code == 0 and len(rows) == 150
    assert rows[0]["permutation"] == "0 1 2 3"


def test_encode_with_model(trained, iris_csv, capsys):
    model, _ = trained
    _, out = run(capsys, "encode", "--data", iris_csv, "--model", model)
    rows = rows_of(out)
    assert len(rows) == 3 * 150 and len(rows[0]["permutation"].split()) == 8


def test_config_and_data_errors(tmp_path, iris_csv, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"embed_dim": 1}')
    assert run(capsys, "train", "--data", iris_csv, "--config", bad)[0] == 2
    nolabel = tmp_path / "nolabel.csv"
    nolabel.write_text("x\n1\n2\n")
    assert run(capsys, "train", "--data", nolabel)[0] == 3
    assert run(capsys, "train", "--data", tmp_path / "missing.csv")[0] == 3


def test_threads_env_override(monkeypatch):
    monkeypatch.setenv("ARROWFLOW_THREADS", "3")
    assert cli.resolve_threads(1) == 3
    monkeypatch.setenv("ARROWFLOW_THREADS", "x")
    with pytest.raises(cli.ConfigError):
        cli.resolve_threads(1)
    monkeypatch.delenv("ARROWFLOW_THREADS")
    assert cli.resolve_threads(None) == 1


def test_threaded_train_matches_serial(cfg, iris_csv, capsys, monkeypatch):
    _, serial = run(capsys, "train", "--data", iris_csv, "--config", cfg)
    monkeypatch.setenv("ARROWFLOW_THREADS", "2")
    _, threaded = run(capsys, "train", "--data", iris_csv, "--config", cfg)
    assert serial == threaded


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "arrowflow", "energy"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and "ratio mlp/sort" in res.stdout


def test_md_format():
    text = cli.format_table([{"a": 1, "b": "xy"}], ["a", "b"], "md")
    assert text.splitlines() == ["| a | b  |", "|---|----|", "| 1 | xy |"]
