import json

import numpy as np
import pytest
from click.testing import CliRunner

from dagfoci.cli import main
from dagfoci.dataset import Dataset, load_csv, write_csv
from dagfoci.sem import chain, do_intervene, example1, sample


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def ex1(tmp_path):
    p = tmp_path / "ex1.csv"
    write_csv(sample(example1(), 1500, seed=1), p)
    return p


def test_codec_commands(runner, ex1, tmp_path):
    r = runner.invoke(main, ["codec", str(ex1), "--target", "X6", "--z", "X2"])
    assert r.exit_code == 0, r.output
    assert "seed=0" in r.output.splitlines()[0]
    assert "T_n(X6, X2) =" in r.output
    out = tmp_path / "c.json"
    r = runner.invoke(main, ["codec", str(ex1), "--target", "X6", "--z", "X2", "--given", "X3", "--out", str(out)])
    assert r.exit_code == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1 and doc["conditioning_size"] == 1


def test_unknown_column(runner, ex1):
    r = runner.invoke(main, ["codec", str(ex1), "--target", "X6", "--z", "Q"])
    assert r.exit_code != 0
    assert "unknown column" in r.output


def test_foci_command(runner, ex1):
    r = runner.invoke(main, ["foci", str(ex1), "--target", "X11", "--seed", "3"])
    assert r.exit_code == 0
    assert "boundary: {" in r.output and "step\tchosen\tT_n" in r.output
    assert "seed=3" in r.output


def test_foci_empty_and_constant(runner, tmp_path):
    p = tmp_path / "e.csv"
    write_csv(Dataset(np.array([[1.0, 0.0], [2.0, 5.0], [3.0, 1.0], [4.0, 2.6]]), ("y", "x")), p)
    r = runner.invoke(main, ["foci", str(p), "--target", "y"])
    assert r.exit_code == 0 and "boundary: {}" in r.output
    c = tmp_path / "c.csv"
    write_csv(Dataset(np.array([[1.0, 0.0], [1.0, 5.0], [1.0, 1.0]]), ("y", "x")), c)
    r = runner.invoke(main, ["foci", str(c), "--target", "y"])
    assert r.exit_code != 0


def test_dagfoci_command_reports_provenance(runner, ex1, tmp_path):
    out = tmp_path / "r.json"
    r = runner.invoke(main, ["dagfoci", str(ex1), "--target", "X6", "--n-perms", "30", "--jobs", "1", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert "verdict:" in r.output and "cluster components:" in r.output
    doc = json.loads(out.read_text())
    assert doc["command"] == "dagfoci" and doc["seed"] == 0
    assert doc["config"]["n_perms"] == 30
    assert "tests" in doc["result"]


def test_undetectable_exits_zero(runner, monkeypatch, ex1):
    from dagfoci import cli
    from dagfoci.dag_foci import UNDETECTABLE, ParentalSets

    monkeypatch.setattr(cli, "dag_foci", lambda *a, **k: ParentalSets(UNDETECTABLE, ()))
    r = runner.invoke(main, ["dagfoci", str(ex1), "--target", "X6"])
    assert r.exit_code == 0
    assert "DAG-FOCI is not able to detect the parents" in r.output


def test_env_var_override(runner, ex1, tmp_path):
    out = tmp_path / "r.json"
    r = runner.invoke(
        main, ["dagfoci", str(ex1), "--target", "X11", "--out", str(out)],
        env={"DAGFOCI_DAGFOCI_N_PERMS": "7"},
    )
    assert r.exit_code == 0
    assert json.loads(out.read_text())["config"]["n_perms"] == 7


def test_invalid_alpha(runner, ex1):
    r = runner.invoke(main, ["dagfoci", str(ex1), "--target", "X6", "--alpha", "1.5"])
    assert r.exit_code != 0


def _chain_files(tmp_path, n=2000):
    obs, intv = tmp_path / "obs.csv", tmp_path / "int.csv"
    write_csv(sample(chain(), n, seed=1), obs)
    write_csv(sample(do_intervene(chain(), "Y"), n, seed=2), intv)
    return obs, intv


def test_intervene_two_files(runner, tmp_path):
    obs, intv = _chain_files(tmp_path)
    r = runner.invoke(main, ["intervene", str(obs), str(intv), "--target", "Y"])
    assert r.exit_code == 0, r.output
    assert "refined parents:" in r.output and "children:" in r.output
    assert "assumption:" in r.output


def test_intervene_env_tags_equals_two_files(runner, tmp_path):
    obs, intv = _chain_files(tmp_path)
    a, b = load_csv(obs), load_csv(intv)
    both = Dataset(np.vstack([a.values, b.values]), a.names, ("obs",) * a.n + ("do",) * b.n)
    p = tmp_path / "both.csv"
    write_csv(both, p)
    r1 = runner.invoke(main, ["intervene", str(obs), str(intv), "--target", "Y"])
    r2 = runner.invoke(main, ["intervene", str(p), "--obs-env", "obs", "--int-env", "do", "--target", "Y"])
    assert r2.exit_code == 0, r2.output
    assert r1.output == r2.output


def test_intervene_schema_mismatch(runner, tmp_path):
    obs, _ = _chain_files(tmp_path, 200)
    other = tmp_path / "o.csv"
    write_csv(Dataset(np.random.default_rng(0).normal(size=(50, 3)), ("A", "B", "C")), other)
    r = runner.invoke(main, ["intervene", str(obs), str(other), "--target", "Y"])
    assert r.exit_code != 0 and "schema mismatch" in r.output


def test_simulate(runner, tmp_path):
    out = tmp_path / "s.csv"
    r = runner.invoke(main, ["simulate", "--builtin", "example1", "--n", "100", "--out", str(out)])
    assert r.exit_code == 0
    d = load_csv(out)
    assert d.m == 16 and d.n == 100
    r = runner.invoke(main, ["simulate", "--builtin", "example1", "--n", "5"])
    assert r.output.splitlines()[0].startswith("X1,X2")


def test_simulate_spec_with_do(runner, tmp_path):
    spec = tmp_path / "my.json"
    spec.write_text(example1().dumps())
    out = tmp_path / "s.csv"
    r = runner.invoke(main, ["simulate", "--spec", str(spec), "--do", "X6", "--n", "50", "--seed", "4", "--out", str(out)])
    assert r.exit_code == 0, r.output
    expected = sample(do_intervene(example1(), "X6"), 50, seed=4)
    assert np.array_equal(load_csv(out).values, expected.values)


def test_simulate_unknown_builtin(runner):
    r = runner.invoke(main, ["simulate", "--builtin", "example7"])
    assert r.exit_code != 0 and "unknown builtin" in r.output


def test_benchmark_commands(runner, tmp_path):
    out, table = tmp_path / "b.json", tmp_path / "b.tsv"
    r = runner.invoke(
        main,
        ["benchmark", "--builtin", "example2", "--target", "X5", "--n", "300", "--runs", "2",
         "--n-perms", "10", "--jobs", "1", "--out", str(out), "--table", str(table)],
    )
    assert r.exit_code == 0, r.output
    doc = json.loads(out.read_text())
    assert len(doc["records"]) == 2 and doc["seed"] == 0
    assert table.read_text().startswith("n\t")
    r = runner.invoke(main, ["benchmark", "--builtin", "example2", "--target", "X5", "--n", "300", "--runs", "0"])
    assert r.exit_code != 0


def test_sweep_command(runner, tmp_path):
    out = tmp_path / "s.json"
    r = runner.invoke(main, ["benchmark", "--sweep", "codec-gap", "--n", "400", "--alphas", "0.05,1", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert "alpha\tT_Y_X3" in r.output
    assert len(json.loads(out.read_text())["rows"]) == 2


def test_deterministic_output(runner, ex1):
    a = runner.invoke(main, ["foci", str(ex1), "--target", "X6", "--seed", "5"]).output
    b = runner.invoke(main, ["foci", str(ex1), "--target", "X6", "--seed", "5", "--jobs", "2"]).output
    assert a == b
