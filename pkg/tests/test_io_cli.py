import json
import math
import os
import pathlib
import subprocess
import sys

import numpy as np
import pytest

from golden_compare import assert_matches_golden
from perbif import ProblemParams, constant_solution, verify
from perbif import io as pio
from perbif.cli import main

GOLDEN = pathlib.Path(__file__).resolve().parent / "golden"
SRC = str(pathlib.Path(__file__).resolve().parents[1] / "src")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_subprocess(*argv, env=None):
    full_env = dict(os.environ)
    full_env["PYTHONPATH"] = SRC + os.pathsep + full_env.get("PYTHONPATH", "")
    full_env.update(env or {})
    return subprocess.run([sys.executable, "-m", "perbif", *argv], capture_output=True,
                          env=full_env, check=False)


@pytest.fixture(scope="module")
def solve_doc(tmp_path_factory):
    path = tmp_path_factory.mktemp("solve") / "k1.json"
    assert main(["solve", "--q", "3", "--mu", "3", "--k", "1", "--out", str(path)]) == 0
    return path


# -- serialization -------------------------------------------------------------

def test_format_float():
    assert pio.format_float(0.1) == "0.10000000000000001"
    assert pio.format_float(-0.0) == "0"
    assert pio.format_float(2.0) == "2"
    assert float(pio.format_float(math.pi)) == math.pi
    with pytest.raises(ValueError):
        pio.format_float(math.nan)


def test_dumps_layout_and_round_trip():
    doc = {"b": 1, "a": [1.5, None, True], "rows": [{"t": 0.0, "u": -0.0}], "empty": {}}
    text = pio.dumps(doc)
    assert list(json.loads(text)) == ["b", "a", "rows", "empty"]
    assert '{"t": 0, "u": 0}' in text
    assert json.loads(text)["a"] == [1.5, None, True]
    with pytest.raises(TypeError):
        pio.dumps({"x": object()})


def test_solution_document_round_trip(branch1_q3_mu3):
    doc = pio.solution_document(branch1_q3_mu3, verify(branch1_q3_mu3))
    assert list(doc) == ["schema_version", "params", "branch_k", "u_max", "u_min", "energy",
                         "zero_count", "verification", "samples"]
    back = pio.solution_from_document(json.loads(pio.dumps(doc)))
    np.testing.assert_array_equal(back.u, branch1_q3_mu3.u)
    np.testing.assert_array_equal(back.du, branch1_q3_mu3.du)
    assert back.params == branch1_q3_mu3.params and back.k == 1
    assert verify(back).passed


@pytest.mark.parametrize("mutate, msg", [
    (lambda d: d.pop("samples"), "missing field"),
    (lambda d: d.update(schema_version=2), "schema_version"),
    (lambda d: d["params"].update(q=0.5), "invalid params"),
    (lambda d: d.update(branch_k=1.5), "integer"),
    (lambda d: d.update(u_max="big"), "finite number"),
    (lambda d: d["samples"][3].update(t=1.0), "uniformly"),
    (lambda d: d.update(samples=d["samples"][:4]), "too few"),
    (lambda d: d["samples"].__setitem__(2, [1, 2, 3]), "samples must"),
])
def test_malformed_documents(branch1_q3_mu3, mutate, msg):
    doc = json.loads(pio.dumps(pio.solution_document(branch1_q3_mu3, verify(branch1_q3_mu3))))
    mutate(doc)
    with pytest.raises(pio.MalformedDocument, match=msg):
        pio.solution_from_document(doc)


def test_write_csv():
    import io
    buf = io.StringIO()
    pio.write_csv(buf, ["k", "x"], [(1, 0.5), (2, "a,b")])
    assert buf.getvalue() == 'k,x\n1,0.5\n2,"a,b"\n'


# -- commands ------------------------------------------------------------------

def test_instants(capsys):
    code, out, _ = run(capsys, "instants", "--q", "3", "--T", "6.283185307179586", "--k-max", "3")
    assert code == 0
    assert out == "k,mu_k,omega_k\n1,0.5,1\n2,2,2\n3,4.5,3\n"
    code, out, _ = run(capsys, "instants", "--q", "2", "--k-max", "1")
    assert out.splitlines()[1] == "1,1,1"


def test_instants_validation(capsys):
    code, _, err = run(capsys, "instants", "--q", "0.5", "--k-max", "3")
    assert code == 2 and "q must exceed 1" in err
    assert run(capsys, "instants", "--q", "3", "--k-max", "0")[0] == 2
    assert run(capsys, "instants", "--q", "3")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_solve_k1(capsys, tmp_path):
    csv_path = tmp_path / "profile.csv"
    code, out, _ = run(capsys, "solve", "--q", "3", "--mu", "3", "--T", "6.283185307179586",
                       "--k", "1", "--csv", str(csv_path))
    assert code == 0
    doc = json.loads(out)
    assert doc["zero_count"] == 2 and doc["branch_k"] == 1
    assert all(doc["verification"]["passes"].values()) and doc["verification"]["passed"]
    assert len(doc["samples"]) == 1024
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,u,du" and len(lines) == 1025


def test_solve_k2(capsys):
    code, out, _ = run(capsys, "solve", "--q", "3", "--mu", "3", "--k", "2", "--grid", "256")
    assert code == 0 and json.loads(out)["zero_count"] == 4


def test_solve_below_instant(capsys):
    code, out, err = run(capsys, "solve", "--q", "3", "--mu", "0.4", "--k", "1")
    assert code == 3 and "below degeneracy instant k=1" in err and out == ""


def test_solve_solver_failure(capsys):
    # a grid of 8 samples cannot resolve ten zeros: every step is rejected
    code, _, err = run(capsys, "solve", "--q", "3", "--mu", "50", "--k", "5", "--grid", "8")
    assert code == 4 and "solver failure" in err and "diagnostics" in err


def test_bad_grid_is_usage_error(capsys):
    code, _, err = run(capsys, "solve", "--q", "3", "--mu", "3", "--k", "1", "--grid", "1000")
    assert code == 2 and "power of two" in err


def test_diagram(capsys):
    code, out, err = run(capsys, "diagram", "--q", "3", "--T", "6.283185307179586", "--mu-max", "5",
                         "--branches", "2")
    assert code == 0
    rows = np.array([[float(x) for x in line.split(",")] for line in out.splitlines()[1:]])
    assert out.splitlines()[0] == "branch_k,mu,u_max,u_min,energy,zero_count"
    for k, mu_k in ((1, 0.5), (2, 2.0)):
        fam = rows[rows[:, 0] == k]
        assert fam[0, 1] > mu_k and fam[0, 2] - 1.0 < 1e-2
        assert fam[-1, 1] == 5.0
        assert np.all(fam[:, 5] == 2 * k)
    assert np.all(rows[rows[:, 0] == 1, 2] < math.sqrt(2.0))
    assert "k=1: ok" in err and "k=2: ok" in err


def test_diagram_missing_branch_and_empty(capsys):
    code, out, err = run(capsys, "diagram", "--q", "3", "--mu-max", "1", "--branches", "2")
    assert code == 0 and "k=2: not present" in err
    assert {line.split(",")[0] for line in out.splitlines()[1:]} == {"1"}
    code, out, err = run(capsys, "diagram", "--q", "3", "--mu-max", "0.4", "--branches", "1")
    assert code == 3 and out == ""


@pytest.mark.parametrize("q, mu, line", [("2", "4.5", "lower_bound=2 found=3"),
                                         ("3", "0.3", "lower_bound=0 found=1"),
                                         ("3", "2.0", "lower_bound=1 found=2")])
def test_count(capsys, q, mu, line):
    code, out, _ = run(capsys, "count", "--q", q, "--mu", mu, "--T", "6.283185307179586")
    assert code == 0
    first, rest = out.split("\n", 1)
    assert first == line
    summary = json.loads(rest)
    assert [b["zero_count"] for b in summary["branches"]] == [2 * b["k"] for b in
                                                               summary["branches"]]


def test_yamabe(capsys):
    code, out, _ = run(capsys, "yamabe", "--n", "4", "--RN", "4", "--r", "0.5")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "critical_radii_below_r=" and len(lines) == 4
    code, out, _ = run(capsys, "yamabe", "--n", "4", "--RN", "4", "--r", "2.5")
    rows = [line.split(",") for line in out.splitlines()[3:]]
    assert [r[0] for r in rows] == ["0", "1", "2"]
    assert all(float(r[3]) < 1e-6 and float(r[4]) < 1e-6 and r[6] == "true" for r in rows)


def test_yamabe_writes_factors(capsys, tmp_path):
    code, _, _ = run(capsys, "yamabe", "--n", "4", "--RN", "4", "--r", "1.5", "--out",
                     str(tmp_path))
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["factor_k0.json", "factor_k1.json"]
    assert main(["verify", str(tmp_path / "factor_k1.json")]) == 0


def test_yamabe_validation(capsys):
    code, _, err = run(capsys, "yamabe", "--n", "1", "--RN", "4", "--r", "1")
    assert code == 2 and "n must be" in err
    assert run(capsys, "yamabe", "--n", "4", "--RN", "-1", "--r", "1")[0] == 2


def test_verify_own_output(capsys, solve_doc):
    code, out, _ = run(capsys, "verify", str(solve_doc))
    assert code == 0 and json.loads(out)["passed"] is True


def test_verify_scaled_document(capsys, solve_doc, tmp_path):
    doc = json.loads(solve_doc.read_text())
    for s in doc["samples"]:
        s["u"] *= 1.01
    path = tmp_path / "scaled.json"
    path.write_text(json.dumps(doc))
    code, out, err = run(capsys, "verify", str(path))
    assert code == 6 and "identity_2_9" in err
    report = json.loads(out)
    assert report["identity_2_9_relative_residual"] > 1e-3 and report["passed"] is False


def test_verify_constant_document(capsys, tmp_path):
    sol = constant_solution(ProblemParams(3.0, 3.0), 32)
    path = tmp_path / "const.json"
    path.write_text(pio.dumps(pio.solution_document(sol, verify(sol))))
    code, out, _ = run(capsys, "verify", str(path))
    report = json.loads(out)
    assert code == 0 and report["identity_2_9_relative_residual"] is None


@pytest.mark.parametrize("content", ["not json", "[]", '{"schema_version": 1}'])
def test_verify_malformed(capsys, tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    code, out, err = run(capsys, "verify", str(path))
    assert code == 5 and out == "" and err.startswith("error:")


def test_verify_missing_file(capsys, tmp_path):
    assert run(capsys, "verify", str(tmp_path / "nope.json"))[0] == 5


# -- determinism and fixtures ---------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["solve", "--q", "3", "--mu", "3", "--k", "2", "--grid", "128"],
    ["count", "--q", "2", "--mu", "4.5"],
    ["yamabe", "--n", "4", "--RN", "4", "--r", "2.5"],
    ["diagram", "--q", "3", "--mu-max", "3", "--branches", "2"],
])
def test_repeated_invocations_byte_identical(argv):
    first = run_subprocess(*argv)
    second = run_subprocess(*argv)
    assert first.returncode == 0, first.stderr
    assert first.stdout == second.stdout and first.stderr == second.stderr


def test_log_level_from_environment():
    quiet = run_subprocess("count", "--q", "3", "--mu", "1")
    loud = run_subprocess("count", "--q", "3", "--mu", "1", env={"PERBIF_LOG": "DEBUG"})
    assert quiet.stderr == b""
    assert b"DEBUG" in loud.stderr
    assert quiet.stdout == loud.stdout


@pytest.mark.parametrize("name, argv", [
    ("count_q2_mu4.5.txt", ["count", "--q", "2", "--mu", "4.5"]),
    ("count_q3_mu3.txt", ["count", "--q", "3", "--mu", "3"]),
    ("yamabe_n4_RN4_r0.5.txt", ["yamabe", "--n", "4", "--RN", "4", "--r", "0.5"]),
    ("yamabe_n4_RN4_r2.5.txt", ["yamabe", "--n", "4", "--RN", "4", "--r", "2.5"]),
])
def test_golden_cli(capsys, name, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert_matches_golden(out, (GOLDEN / name).read_text(encoding="utf-8"))
