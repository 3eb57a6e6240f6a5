import json
import subprocess
import sys

import numpy as np
import pytest

from comblab.cli import SCHEMA, main
from comblab.tensorlab import Operator, operator_to_dict

EXAMPLES = ["w-comb", "ghz-comb", "bisep", "bisep-cond", "sqrt-swap", "app-g", "fig4", "fig5", "fig6"]


@pytest.fixture
def ghz_state_file(tmp_path):
    def make(scale=1.0):
        v = np.zeros(8)
        v[0] = v[7] = 1 / np.sqrt(2)
        op = Operator(np.outer(v, v) * scale, (2, 2, 2), ("A", "B", "C"))
        path = tmp_path / f"ghz_{scale}.json"
        path.write_text(json.dumps(operator_to_dict(op)))
        return str(path)
    return make


def run(*argv):
    return main([str(a) for a in argv])


@pytest.mark.parametrize("name", EXAMPLES)
def test_examples_round_trip_through_verify(tmp_path, name):
    out = tmp_path / f"{name}.json"
    assert run("example", name, "-o", out) == 0
    assert run("verify", out) == 0


def test_example_to_stdout(capsys):
    assert run("example", "w-comb") == 0
    payload = json.loads(capsys.readouterr().out)
    assert "legs" in payload


def test_rounded_data_switches_to_loose(tmp_path, capsys):
    out = tmp_path / "g.json"
    run("example", "app-g", "-o", out)
    capsys.readouterr()
    assert run("verify", out) == 0
    assert "loose" in capsys.readouterr().out


def test_scaled_state_fails_verify(ghz_state_file):
    assert run("verify", ghz_state_file(2.0)) == 2


def test_gme_on_ghz_state(ghz_state_file, capsys, tmp_path):
    w = tmp_path / "w.json"
    assert run("gme", ghz_state_file(), "-o", w) == 0
    assert "GME" in capsys.readouterr().out
    assert isinstance(json.loads(w.read_text()), dict)


def test_gme_fixture(tmp_path, ghz_state_file):
    ref = tmp_path / "ref.json"
    ref.write_text(json.dumps({"value": -1 / 6}))
    assert run("gme", ghz_state_file(2.0), "--fixture", ref) == 0
    ref.write_text(json.dumps({"value": -0.2}))
    assert run("gme", ghz_state_file(), "--fixture", ref) == 2


def test_gme_normalize_scales_value(tmp_path, ghz_state_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("gme", ghz_state_file(4.0), "--json", a)
    run("gme", ghz_state_file(4.0), "--normalize", "--json", b)
    va = json.loads(a.read_text())["verdicts"]["gme"]["value"]
    vb = json.loads(b.read_text())["verdicts"]["gme"]["value"]
    assert va == pytest.approx(4 * vb, rel=1e-6)
    assert vb == pytest.approx(-1 / 6, abs=1e-6)


def test_ppt(tmp_path, capsys):
    f = tmp_path / "w.json"
    run("example", "w-comb", "-o", f)
    capsys.readouterr()
    assert run("ppt", f, "--cut", "A:BC") == 0
    assert "NPT" in capsys.readouterr().out
    assert run("ppt", f) == 4  # --cut is required
    assert run("ppt", f, "--cut", "A:XY") == 4


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["verify", "/nonexistent/file.json"]])
def test_usage_errors(argv):
    assert main(argv) == 4


def test_malformed_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("verify", bad) == 4
    bad.write_text(json.dumps([1, 2]))
    assert run("verify", bad) == 4
    bad.write_text(json.dumps({"dims": [2], "labels": ["A"], "real": [[1, 0], [0, 1], [0, 0]]}))
    assert run("verify", bad) == 4


def test_json_report_schema(tmp_path):
    f, rep = tmp_path / "w.json", tmp_path / "r.json"
    run("example", "w-comb", "-o", f)
    assert run("verify", f, "--json", rep) == 0
    data = json.loads(rep.read_text())
    assert data["schema"] == SCHEMA
    for key in ("version", "command", "inputs", "tolerances", "verdicts", "residuals", "values", "seeds",
                "timing", "exit_code"):
        assert key in data
    assert data["exit_code"] == 0
    assert data["verdicts"]["causality"]["verdict"] == "pass"
    assert list(data["inputs"].values())[0] and len(list(data["inputs"].values())[0]) == 64


def test_json_deterministic_modulo_timing(tmp_path):
    f = tmp_path / "w.json"
    run("example", "w-comb", "-o", f)
    reports = []
    for k in range(2):
        r = tmp_path / f"r{k}.json"
        run("scan", f, "--samples", 5000, "--json", r)
        d = json.loads(r.read_text())
        d.pop("timing")
        d["command"] = None
        d["values"].get("scan", {}).pop("elapsed", None)
        reports.append(d)
    assert reports[0] == reports[1]


def test_scan_exit_codes(tmp_path, capsys):
    f = tmp_path / "w.json"
    run("example", "w-comb", "-o", f)
    assert run("scan", f, "--samples", 2000) == 0
    assert run("scan", f, "--samples", 2000, "--party", "Q") == 4


def test_dilate_round_trip(tmp_path):
    f, c = tmp_path / "w.json", tmp_path / "circ.json"
    run("example", "w-comb", "-o", f)
    assert run("dilate", f, "-o", c) == 0
    assert run("verify", c) == 0


def test_dilate_rejects_non_causal(ghz_state_file):
    assert run("dilate", ghz_state_file(2.0)) == 2


def test_seesaw_fast(tmp_path):
    out, audit = tmp_path / "cand.json", tmp_path / "audit.json"
    code = run("seesaw", "--iters", 12, "--eps", 0.002, "--effects", 200, "--samples", 20000, "-o", out,
               "--audit", audit)
    assert code == 0
    assert run("verify", out) == 0
    assert json.loads(audit.read_text())["status"] == "candidate"


def test_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "comblab.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "comblab" in proc.stdout
