import json
import subprocess
import sys

import pytest

from heavenly.cli import EquationSpec, SpecError, load_spec_file, main, parse_value, run
from heavenly.jet import Q


def report(argv):
    code, text, lines, _ = run(argv)
    return code, json.loads(text), lines


def test_parse_value():
    assert parse_value("3/4") == Q(3, 4)
    assert parse_value(" -2 ") == Q(-2)
    assert parse_value("sym") == "sym"
    for bad in ("1.5.2", "x", "1/0"):
        with pytest.raises(SpecError):
            parse_value(bad)


def test_spec_file(tmp_path):
    path = tmp_path / "eq.ini"
    path.write_text("[coefficients]\na13 = 1\nc5 = 2/3\na7 = sym\n\n[options]\npoints = 4\nseed = 9\n"
                    "nonvanishing = u_23, u_t1\n")
    spec = load_spec_file(str(path))
    assert spec.values == {"a13": Q(1), "c5": Q(2, 3), "a7": "sym"}
    assert (spec.points, spec.seed, spec.max_order) == (4, 9, 6)
    assert spec.nonvanishing == ("u_23", "u_t1")
    assert isinstance(spec, EquationSpec)


def test_spec_file_errors(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[options]\nwidth = 3\n")
    with pytest.raises(SpecError):
        load_spec_file(str(path))
    with pytest.raises(SpecError):
        load_spec_file(str(tmp_path / "missing.ini"))


def test_spec_file_command(tmp_path):
    path = tmp_path / "eq.ini"
    path.write_text("[coefficients]\na13 = 1\n")
    code, doc, _ = report(["lagrangian", str(path)])
    assert code == 0 and doc["exit"] == 0


def test_lagrangian_commands():
    code, doc, lines = report(["lagrangian", "--catalog", "E1"])
    assert code == 0
    assert all(c["verdict"] == "pass" for c in doc["checks"])
    code, doc, lines = report(["lagrangian", "--set", "a13=1"])
    assert code == 0
    assert "L = 1/2*u*u_tt" in lines
    code, doc, _ = report(["lagrangian", "--set", "a13=1", "--perturb", "u_t1^3"])
    assert code == 1 and doc["exit"] == 1
    names = {c["name"]: c["verdict"] for c in doc["checks"]}
    assert names["helmholtz-self-adjoint"] == "fail"


def test_hamiltonian_commands():
    code, doc, lines = report(["hamiltonian", "--catalog", "E3"])
    assert code == 0
    assert any(line.startswith("K11 = ") for line in lines)
    code, doc, _ = report(["hamiltonian", "--set", "c5=1"])
    assert code == 2 and "DeltaZero" in doc["error"]


def test_hamiltonian_all_labels():
    code, doc, lines = report(["hamiltonian", "--all-labels"])
    assert code == 0
    assert "42/42 table matches" in lines
    assert sum(c["name"].startswith("K-table-") for c in doc["checks"]) == 42


def test_factorize_lax_biham():
    assert report(["factorize", "--catalog", "general-heavenly", "--points", "3"])[0] == 0
    assert report(["lax", "--catalog", "husain", "--points", "3"])[0] == 0
    code, doc, lines = report(["biham", "--catalog", "E1", "--points", "3"])
    assert code == 0
    assert doc["constraints"] == ["c8*c10 - c5*c9 = 0"]
    assert "b0" in doc["h0"]


def test_set_specializes_catalog():
    code, doc, _ = report(["factorize", "--catalog", "general-heavenly", "--set", "beta=2", "--set", "gamma=1/3",
                           "--points", "2"])
    assert code == 0


def test_structural_errors():
    assert report(["biham", "--catalog", "nope"])[0] == 2
    assert report(["factorize", "--catalog", "bogus"])[0] == 2
    assert report(["biham", "--catalog", "E1", "--set", "c5=1"])[0] == 2
    assert report(["lagrangian", "--set", "zz=1"])[0] == 2
    assert report(["lagrangian", "--set", "a13"])[0] == 2
    assert report(["lagrangian"])[0] == 2
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2


def test_json_fields_and_sorting():
    _, doc, _ = report(["lax", "--catalog", "E2", "--points", "2"])
    assert set(doc) == {"command", "seed", "checks", "constraints", "h0", "exit"}
    assert doc["command"] == ["lax", "--catalog", "E2", "--points", "2"]
    names = [c["name"] for c in doc["checks"]]
    assert names == sorted(names)
    assert set(doc["checks"][0]) == {"name", "verdict", "residual_summary", "millis"}
    assert all(c["millis"] == 0 for c in doc["checks"])


def test_human_and_machine_agree():
    _, doc, lines = report(["factorize", "--catalog", "E1", "--points", "2"])
    for check in doc["checks"]:
        assert any(line.split()[:2] == [check["verdict"].upper(), check["name"]] for line in lines)


def test_determinism_byte_identical():
    argv = ["biham", "--catalog", "E4", "--points", "5", "--seed", "17"]
    assert run(argv)[1] == run(argv)[1]
    argv = ["factorize", "--catalog", "E5", "--seed", "3"]
    assert run(argv)[1] == run(argv)[1]


def test_main_writes_json(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["lax", "--catalog", "modified-heavenly", "--points", "2", "--json", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert json.loads(out.read_text()) == json.loads(captured.out)
    assert "lax:" in captured.err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heavenly", "lagrangian", "--set", "a7=1"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["exit"] == 0
