import json
import math
import subprocess
import sys

import numpy as np
import pytest

from votetrade.cli import main
from votetrade.io import read_grid_csv


def write_spec(path, family, **params):
    path.write_text(json.dumps({"family": family, "params": params}))
    return str(path)


@pytest.fixture
def uniform_spec(tmp_path):
    return write_spec(tmp_path / "uniform.json", "uniform")


@pytest.fixture
def skewed_spec(tmp_path):
    return write_spec(tmp_path / "skewed.json", "quadrant_constant", weights=[0.1, 0.4, 0.3, 0.2])


def load(path):
    with open(path) as fh:
        return json.load(fh)


def test_solve_uniform(tmp_path, uniform_spec):
    out = tmp_path / "sol.json"
    assert main(["solve", "--dist", uniform_spec, "--out", str(out)]) == 0
    sol = load(out)
    np.testing.assert_allclose(sol["slopes"], 1.0, atol=1e-6)
    assert sol["converged"] and sol["n"] == 11


def test_solve_skewed_classifies_both_directions(tmp_path, skewed_spec):
    from votetrade.equilibrium import offers

    out = tmp_path / "sol.json"
    assert main(["solve", "--dist", skewed_spec, "--out", str(out), "--grid", "9"]) == 0
    assert offers(load(out)["theta_star"], (0.8, 0.4)) == (True, True)
    xs, ys, mask = read_grid_csv(tmp_path / "sol_regions.csv")
    assert len(mask) == 81 and len(np.unique(xs)) == 9


def test_malformed_spec_writes_nothing(tmp_path, capsys):
    bad = write_spec(tmp_path / "bad.json", "product_power", alpha=3)
    out = tmp_path / "sol.json"
    assert main(["solve", "--dist", bad, "--out", str(out)]) == 1
    assert not out.exists()
    assert "alpha" in capsys.readouterr().err


def test_invalid_json_is_usage_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["solve", "--dist", str(p), "--out", str(tmp_path / "o.json")]) == 1


def test_missing_spec_file_is_io_error(tmp_path):
    assert main(["solve", "--dist", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o.json")]) == 3


@pytest.mark.parametrize("argv", [["solve", "--n", "10"], ["solve", "--n", "11"], ["bogus"]])
def test_argument_errors_exit_one(argv, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


def test_non_convergence_exit_two(tmp_path, skewed_spec, capsys):
    out = tmp_path / "sol.json"
    assert main(["solve", "--dist", skewed_spec, "--out", str(out), "--max-iter", "2"]) == 2
    assert "residual" in capsys.readouterr().err
    assert not out.exists()


def test_solution_round_trip_is_bit_exact(tmp_path, skewed_spec):
    sol = tmp_path / "sol.json"
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", "--dist", skewed_spec, "--out", str(sol)]) == 0
    assert main(["welfare", "--dist", skewed_spec, "--solution", str(sol), "--out", str(a)]) == 0
    assert main(["welfare", "--dist", skewed_spec, "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert load(a)["probability"] == pytest.approx(0.18568, abs=1e-4)


@pytest.mark.parametrize(
    "family,params,expected,tol",
    [("uniform", {}, 1 / 9, 1e-3), ("product_power", {"alpha": 4}, 0.95, 0.01), ("product_vee", {}, 0.0, 1e-6)],
)
def test_welfare_examples(tmp_path, family, params, expected, tol):
    spec = write_spec(tmp_path / "d.json", family, **params)
    out = tmp_path / "w.json"
    assert main(["welfare", "--dist", spec, "--out", str(out), "--grid", "6"]) == 0
    assert load(out)["probability"] == pytest.approx(expected, abs=tol)
    assert len(read_grid_csv(tmp_path / "w_mask.csv")[2]) == 36


def test_simulate_is_reproducible(tmp_path, uniform_spec):
    outs = []
    for k in range(2):
        out = tmp_path / f"s{k}.json"
        assert main(["simulate", "--dist", uniform_spec, "--trials", "100000", "--seed", "1", "--out", str(out)]) == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]
    assert load(tmp_path / "s0.json")["mode"] == "single"


def test_simulate_zero_trials(tmp_path, uniform_spec):
    assert main(["simulate", "--dist", uniform_spec, "--trials", "0", "--out", str(tmp_path / "s.json")]) == 1


def test_simulate_all_pairs_check(tmp_path):
    survey = tmp_path / "sym.csv"
    survey.write_text("a,b\n1,1\n7,7\n2,6\n6,2\n3,5\n5,3\n")
    spec = tmp_path / "sym.json"
    assert main(["ingest", "--csv", str(survey), "--bandwidth", "0.4", "--out", str(spec)]) == 0
    out = tmp_path / "s.json"
    argv = ["simulate", "--dist", str(spec), "--mode", "groupwide", "--trials", "100000", "--seed", "3",
            "--out", str(out)]
    assert main(argv) == 0
    report = load(out)
    assert report["mode"] == "all-pairs"
    assert report["effective_q_check"]["passed"]


def test_ingest_symmetric_two_point(tmp_path):
    survey = tmp_path / "two.csv"
    survey.write_text("issue1,issue2\n2,2\n6,6\n")
    spec = tmp_path / "two.json"
    assert main(["ingest", "--csv", str(survey), "--bandwidth", "0.5", "--out", str(spec), "--grid", "5"]) == 0
    out = tmp_path / "sol.json"
    assert main(["solve", "--dist", str(spec), "--out", str(out)]) == 0
    np.testing.assert_allclose(load(out)["theta_star"], math.pi / 4, atol=1e-4)
    assert len(read_grid_csv(tmp_path / "two_density.csv")[2]) == 25


def test_ingest_correlated_survey(tmp_path):
    k = np.arange(1, 8)
    a, b = np.meshgrid(k, k, indexing="ij")
    w = np.exp(-0.5 * ((a - 3.0) ** 2 + (b - 5.0) ** 2 - 1.2 * (a - 3.0) * (b - 5.0)) / 2.5)
    cells = np.random.default_rng(1).choice(49, size=1500, p=(w / w.sum()).ravel())
    survey = tmp_path / "s.csv"
    survey.write_text("x,y\n" + "".join(f"{c // 7 + 1},{c % 7 + 1}\n" for c in cells))
    spec = tmp_path / "kde.json"
    assert main(["ingest", "--csv", str(survey), "--out", str(spec)]) == 0
    val = load(tmp_path / "kde_validation.json")
    assert val["mass"] == pytest.approx(1.0, abs=1e-6) and val["records"] == 1500


def test_ingest_empty_csv(tmp_path, capsys):
    survey = tmp_path / "empty.csv"
    survey.write_text("")
    assert main(["ingest", "--csv", str(survey), "--out", str(tmp_path / "x.json")]) == 1
    assert not (tmp_path / "x.json").exists()


def test_ingest_bad_rows_list_lines(tmp_path, capsys):
    survey = tmp_path / "bad.csv"
    survey.write_text("a,b\n1,2\nx,3\n4,5\n9,1\n")
    assert main(["ingest", "--csv", str(survey), "--out", str(tmp_path / "x.json")]) == 1
    err = capsys.readouterr().err
    assert "3" in err and "5" in err


def test_export_density_grid_header(tmp_path, uniform_spec):
    out = tmp_path / "g.csv"
    assert main(["export-grid", "--dist", uniform_spec, "--grid", "4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#") and lines[1].startswith("#") and lines[2] == "x,y,value"
    assert "resolution=4" in lines[0] and "bounds=-1,1,-1,1" in lines[0]
    np.testing.assert_allclose(read_grid_csv(out)[2], 0.25)


def test_module_entry_point(tmp_path, uniform_spec):
    out = tmp_path / "r.csv"
    cmd = [sys.executable, "-m", "votetrade", "export-grid", "--dist", uniform_spec, "--kind", "regions",
           "--grid", "3", "--out", str(out)]
    assert subprocess.run(cmd, capture_output=True).returncode == 0
    assert out.exists()
