import csv
import io
import json
import math
import subprocess
import sys

import pytest

from qdn.cli import main

from corpus import CLI_CONTRACT as CONTRACT, FIXTURES


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def outcomes(text):
    return {tuple(r["monomial"]): r["probability"] for r in json.loads(text)["outcomes"]}


@pytest.mark.parametrize("argv, expected", CONTRACT, ids=[" ".join(str(a).split("/")[-1] for a in c[0]) for c in CONTRACT])
def test_exit_code_contract(capsys, argv, expected):
    code, _, _ = run_cli(capsys, *argv)
    assert code == expected


def test_run_sg(capsys):
    code, out, _ = run_cli(capsys, "run", FIXTURES / "sg.qdn.json")
    assert code == 0
    probs = outcomes(out)
    assert probs == pytest.approx({(1,): 0.36, (2,): 0.64}, abs=1e-15)


def test_run_bad_names_stage(capsys):
    code, _, err = run_cli(capsys, "run", FIXTURES / "bad.qdn.json")
    assert code == 1
    assert "stage 0" in err


def test_run_parse_error_has_location(capsys):
    code, _, err = run_cli(capsys, "run", FIXTURES / "malformed.qdn.json")
    assert code == 2
    assert "line 5" in err
    code, _, err = run_cli(capsys, "run", FIXTURES / "out_of_range.qdn.json")
    assert "stages[0].rules[0].to[0].monomial[0]" in err


def test_run_epr_oracle(capsys):
    code, _, err = run_cli(capsys, "run", FIXTURES / "epr.qdn.json", "--oracle")
    assert code == 0
    dev = float(err.split("oracle max deviation:")[1].split()[0])
    assert dev <= 1e-12


def test_run_honors_queries(capsys):
    code, out, _ = run_cli(capsys, "run", FIXTURES / "hsz.qdn.json", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["monomial"] for r in rows] == ["1 2", "1 3", "2 3", "1 4", "2 4"]
    assert float(rows[0]["probability"]) == 0
    assert math.fsum(float(r["probability"]) for r in rows) == pytest.approx(1, abs=1e-12)


def test_preset_epr_quarter(capsys):
    code, out, _ = run_cli(capsys, "preset", "epr", "--theta", "1.5707963", "--phi", "0")
    probs = outcomes(out)
    assert len(probs) == 4
    assert all(abs(p - 0.25) < 1e-7 for p in probs.values())


def test_preset_sg_single_outcome(capsys):
    code, out, _ = run_cli(capsys, "preset", "sg", "--alpha", "1,0", "--beta", "0,0")
    assert outcomes(out) == {(1,): 1.0}


def test_preset_emit_then_run(capsys, tmp_path):
    doc = tmp_path / "ds.qdn.json"
    code, _, _ = run_cli(capsys, "preset", "double-slit", "--sites", "8", "--slits", "1,7", "--emit", "--out", doc)
    assert code == 0
    _, direct, _ = run_cli(capsys, "preset", "double-slit", "--sites", "8", "--slits", "1,7")
    _, via_file, _ = run_cli(capsys, "run", doc)
    assert direct == via_file
    assert math.fsum(outcomes(direct).values()) == pytest.approx(1, abs=1e-12)


def test_output_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run_cli(capsys, "run", FIXTURES / "epr.qdn.json", "--format", "csv", "--out", path)
    assert a.read_bytes() == b.read_bytes()


def test_oracle_seed_is_reproducible(capsys):
    runs = [run_cli(capsys, "oracle", "--random", "--stages", "4", "--seed", "17")[1] for _ in range(2)]
    assert runs[0] == runs[1]


def test_validate_report(capsys):
    code, out, _ = run_cli(capsys, "validate", FIXTURES / "bad.qdn.json")
    assert code == 1
    assert "stage 0: FAILED" in out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qdn", "run", str(FIXTURES / "bad.qdn.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1
    proc = subprocess.run(
        [sys.executable, "-m", "qdn", "preset", "sg", "--alpha", "1,0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert outcomes(proc.stdout) == {(1,): 1.0}
