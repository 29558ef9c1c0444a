import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from heislab.cli import CONSTANT_COLUMNS, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, text, name="x.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "counterexample" in out and "weighted-norm-counterexample" in out


def test_constants_table(capsys):
    assert main(["constants", "--n", "1", "--ratio", "1.2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert tuple(rows[0]) == CONSTANT_COLUMNS
    assert float(rows[0]["alpha_min"]) == pytest.approx(0.75)
    assert float(rows[0]["alpha_max"]) == pytest.approx(1.0)
    assert float(rows[0]["tau"]) >= 4


def test_constants_rejects_ratio_outside_bound(capsys):
    assert main(["constants", "--ratio", "1.5"]) == 1
    assert "Cordes-Landis" in capsys.readouterr().err


def test_run_counterexample(tmp_path, capsys):
    code = main(["run", str(CONFIGS / "counterexample.cfg"), "--out-dir", str(tmp_path)])
    assert code == 0
    table = list(csv.DictReader(open(tmp_path / "counterexample.csv")))
    assert all(r["anchor"] == "weighted-norm-counterexample" for r in table)
    viol = [r for r in table if r["series"] == "violations"]
    assert viol and all(float(r["margin"]) > 0 for r in viol) and viol[0]["eps"] and viol[0]["t"]
    summary = json.loads((tmp_path / "counterexample.summary.json").read_text())
    assert summary["pass"] is True and summary["status"] == "pass"
    assert "counterexample: pass" in capsys.readouterr().out


def test_malformed_config_reports_line(tmp_path, capsys):
    path = _write(tmp_path, "[experiment]\nname = counterexample\n[grid]\nresolutions = 8 4\n")
    assert main(["run", path]) == 1
    assert "line 4:" in capsys.readouterr().err


def test_unknown_experiment_lists_names(tmp_path, capsys):
    path = _write(tmp_path, "[experiment]\nname = nonesuch\n")
    assert main(["run", path]) == 1
    err = capsys.readouterr().err
    assert "line 2:" in err and "counterexample" in err and "harnack" in err


def test_invalid_scenario_exit_code(tmp_path):
    path = _write(tmp_path, "[experiment]\nname = boundary_lipschitz\nfields = identity\n"
                            "sources = constant(1)\n[grid]\nresolutions = 4\n")
    assert main(["run", path, "--out-dir", str(tmp_path)]) == 2
    summary = json.loads((tmp_path / "boundary_lipschitz.summary.json").read_text())
    assert summary["status"] == "invalid-scenario"


def test_failing_experiment_exit_code(tmp_path):
    assert main(["run", "--experiment", "subsolution", "--out-dir", str(tmp_path)]) == 1


def test_workers_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["run", "--experiment", "counterexample", "--experiment", "calculus_identities", "--workers", "2"]
    assert main(args + ["--out-dir", str(a)]) == 0
    assert main(args + ["--out-dir", str(b), "--seed", "0"]) == 0
    for name in ("counterexample.csv", "counterexample.summary.json", "calculus_identities.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_resolution_override(tmp_path):
    assert main(["run", "--experiment", "inftoinf", "--resolution-override", "4",
                 "--out-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "inftoinf.summary.json").read_text())
    assert summary["config"]["resolutions"] == [4]


def test_solve_to_csv(tmp_path):
    out = tmp_path / "u.csv"
    code = main(["solve", "--domain", "ball(center=0 0 0, radius=1)", "--source", "constant(-1)",
                 "--resolution", "4", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    interior = [r for r in rows if r["class"] == "interior"]
    assert interior and all(float(r["value"]) >= 0 for r in interior)
    assert {r["class"] for r in rows} == {"interior", "dirichlet"}


def test_solve_bad_domain(capsys):
    assert main(["solve", "--domain", "blob()"]) == 1


def test_check_identities(capsys):
    assert main(["check-identities", "--count", "20"]) == 0
    assert "fundamental_solution_closed_form: pass" in capsys.readouterr().out


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "heislab.cli", "list"], capture_output=True, text=True)
    assert out.returncode == 0 and "harnack" in out.stdout
