import json
import subprocess
import sys

import pytest

from nsconic.bench import gen_max_likelihood
from nsconic.cli import main
from nsconic.cones import NonNeg
from nsconic.problem import ProblemData, write_problem


@pytest.fixture
def ml_file(tmp_path):
    path = tmp_path / "ml.json"
    write_problem(gen_max_likelihood(10, seed=1), path)
    return path


def test_solve(ml_file, tmp_path, capsys):
    out = tmp_path / "sol.json"
    assert main(["solve", str(ml_file), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "status:     Solved" in text
    sol = json.loads(out.read_text())
    assert sol["status"] == "Solved" and len(sol["x"]) == 11


def test_solve_verbose_log(ml_file, capsys):
    main(["solve", str(ml_file), "-v"])
    text = capsys.readouterr().out
    assert "pres" in text and "status: Solved" in text


def test_solve_infeasible_writes_null_certificate_half(tmp_path):
    path = tmp_path / "inf.json"
    write_problem(ProblemData.build([1.0], [[-1.0], [1.0]], [-1.0, 0.0], [NonNeg(2)]), path)
    out = tmp_path / "sol.json"
    assert main(["solve", str(path), "--out", str(out)]) == 0
    sol = json.loads(out.read_text())
    assert sol["status"] == "PrimalInfeasible" and sol["x"] == [None]


def test_solve_iteration_cap_exit_code(ml_file):
    assert main(["solve", str(ml_file), "--max-iter", "1"]) == 1


def test_solve_bad_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"version": "1", "cones": [{"type": "soc"}]}')
    assert main(["solve", str(path)]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.json")]) == 2


def test_bench_writes_csv_and_markdown(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["bench", "max_volume", "--sizes", "6", "--repeats", "1", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "family,formulation,size,iterations,solve_ms,status,objective"
    assert len(lines) == 3
    assert (tmp_path / "r.md").read_text().startswith("| family |")
    assert "| Solved |" in capsys.readouterr().out


def test_bench_unknown_suite():
    with pytest.raises(SystemExit) as e:
        main(["bench", "nope"])
    assert e.value.code == 2


def test_check(capsys):
    assert main(["check", "--samples", "10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 10 and all(l.startswith("PASS") for l in lines)


def test_module_entry_point(ml_file):
    p = subprocess.run([sys.executable, "-m", "nsconic", "solve", str(ml_file)], capture_output=True, text=True)
    assert p.returncode == 0 and "Solved" in p.stdout
