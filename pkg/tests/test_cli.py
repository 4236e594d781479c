import csv
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

from entroad.cli import parse_axis, run
from entroad.errors import ValidationError
from entroad.optimize import legendre_transform
from entroad.system import ideal_gas

DOCS = Path(__file__).resolve().parent.parent / "docs"
TWO = str(DOCS / "two_tanks.json")
BATH = str(DOCS / "bath_gas.json")


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write(tmp_path, doc, name="doc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_eval_two_tanks():
    code, out = run(["eval", TWO])
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["U", "entropy", "status", "tank1.U", "tank2.U"]
    K = math.log(1 / 3) + 2 * math.log(2 / 3)
    assert float(r[0]["entropy"]) == pytest.approx(3 * math.log(3) + K, abs=1e-8)
    assert r[0]["status"] == "attained"
    assert r[2]["entropy"] == "-inf" and r[2]["status"] == "infeasible"


def test_eval_table_format():
    code, out = run(["eval", TWO, "--format", "table"])
    assert code == 0
    assert out.splitlines()[0].split() == ["U", "entropy", "status", "tank1.U", "tank2.U"]
    assert set(out.splitlines()[1]) <= {"-", " "}


def test_empty_queries_header_only(tmp_path):
    doc = json.loads(Path(TWO).read_text())
    doc["queries"] = []
    code, out = run(["eval", write(tmp_path, doc)])
    assert code == 0 and out == "U,entropy,status,tank1.U,tank2.U\n"


def test_sweep_two_tanks_increasing():
    code, out = run(["sweep", TWO, "--axis", "U=1:10:10"])
    assert code == 0
    r = rows(out)
    assert [float(x["U"]) for x in r] == [float(u) for u in range(1, 11)]
    vals = [float(x["entropy"]) for x in r]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_sweep_bath_matches_legendre():
    code, out = run(["sweep", BATH, "--axis", "V=1:3:3", "--axis", "N=1:3:3"])
    assert code == 0
    r = rows(out)
    assert len(r) == 9
    assert [(float(x["V"]), float(x["N"])) for x in r] == [(v, n) for v in (1, 2, 3) for n in (1, 2, 3)]
    for x in r:
        ref = legendre_transform(ideal_gas(), 0.5, [float(x["V"]), float(x["N"])])
        assert float(x["entropy"]) == pytest.approx(ref, abs=1e-6)


def test_zero_point_sweep():
    code, out = run(["sweep", TWO, "--axis", "U=1:10:0"])
    assert code == 0 and out == "U,entropy,status,tank1.U,tank2.U\n"


def test_sweep_row_errors_recorded(tmp_path):
    doc = json.loads(Path(TWO).read_text())
    doc["solver"] = {"max_iters": 2}
    code, out = run(["sweep", write(tmp_path, doc), "--axis", "U=1:2:2"])
    assert code == 2
    r = rows(out)
    assert len(r) == 2 and all(x["status"].startswith("error") for x in r)


def test_sweep_out_of_target_is_infeasible_row():
    code, out = run(["sweep", TWO, "--axis", "U=-1:1:3"])
    r = rows(out)
    assert code == 0
    assert [x["status"] for x in r] == ["infeasible", "infeasible", "attained"]


def test_parse_axis():
    name, vals = parse_axis("U=0:1:5")
    assert name == "U" and list(vals) == [0.0, 0.25, 0.5, 0.75, 1.0]
    for bad in ("U", "U=0:1", "U=a:1:2", "U=0:1:-1", "=0:1:2"):
        with pytest.raises(ValidationError):
            parse_axis(bad)


def test_sweep_unknown_axis():
    code, _ = run(["sweep", TWO, "--axis", "Q=1:2:2"])
    assert code == 1


def test_dump_normalized_round_trip(tmp_path):
    code, text = run(["eval", TWO, "--dump-normalized"])
    assert code == 0
    p = tmp_path / "norm.json"
    p.write_text(text)
    code2, text2 = run(["eval", str(p), "--dump-normalized"])
    assert code2 == 0 and text2 == text
    assert run(["eval", TWO])[1] == run(["eval", str(p)])[1]


def test_validation_error_exit_code(tmp_path):
    doc = json.loads(Path(TWO).read_text())
    doc["compose"]["op"] = "nope"
    assert run(["eval", write(tmp_path, doc)])[0] == 1
    assert run(["eval", str(tmp_path / "missing.json")])[0] == 1


def test_solver_failure_exit_code(tmp_path):
    doc = json.loads(Path(TWO).read_text())
    doc["solver"] = {"max_iters": 2}
    assert run(["eval", write(tmp_path, doc)])[0] == 2


def test_laws_command():
    code, out = run(["laws", "--seed", "1", "--trials", "1"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "laws seed=1 trials=1"
    assert lines[-1] == "result: PASS"
    assert len(lines) == 7 and all("trials=1" in l for l in lines[1:6])
    assert run(["laws", "--trials", "0"])[0] == 1


def test_catalog_commands():
    code, out = run(["catalog", "list"])
    assert code == 0 and "two_tanks(C1, C2)" in out
    code, out = run(["catalog", "run", "two_tanks", "--param", "C1=2", "--param", "C2=2"])
    assert code == 0
    r = rows(out)
    assert len(r) == 10 and all(x["check"] == "ok" for x in r)
    code, out = run(["catalog", "run", "canonical", "--param", "H=0,1", "--param", "beta=1"])
    assert code == 0
    assert run(["catalog", "run", "nope"])[0] == 1
    assert run(["catalog", "run", "two_tanks", "--param", "D=1"])[0] == 1
    assert run(["catalog", "run", "two_tanks", "--param", "C1=-1"])[0] == 1
    assert run(["catalog", "run"])[0] == 1


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as info:
        run(["frobnicate"])
    assert info.value.code == 1


def test_console_script_and_threads_env(tmp_path):
    env = dict(os.environ, ENTROAD_THREADS="0")
    a = subprocess.run([sys.executable, "-m", "entroad.cli", "sweep", TWO, "--axis", "U=1:5:5"],
                       capture_output=True, text=True, env=env)
    env["ENTROAD_THREADS"] = "3"
    b = subprocess.run([sys.executable, "-m", "entroad.cli", "sweep", TWO, "--axis", "U=1:5:5"],
                       capture_output=True, text=True, env=env)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout
