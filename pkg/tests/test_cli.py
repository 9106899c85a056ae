import json
import subprocess
import sys

import pytest

from narmon.cli import main

from helpers import CORPUS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json", "--no-timing")
    return code, json.loads(out)


def test_compile_text(capsys):
    code, out, _ = run(capsys, "compile", CORPUS / "nspk.pnar")
    assert code == 0
    assert "send enc(pi2(dec(v7, v6)), v5)" in out
    assert "pi1(dec(v7, v6)) = v1" in out


def test_compile_json_and_out(capsys, tmp_path):
    target = tmp_path / "frames.json"
    code, rep = run_json(capsys, "compile", CORPUS / "nspk.pnar", "--out", target)
    assert code == 0
    assert rep["result"]["prudent"] is True
    assert "elapsed_ms" not in rep
    saved = json.loads(target.read_text())
    assert saved["frames"]["A"] == rep["result"]["frames"]["A"]
    assert rep["inputs"][str(CORPUS / "nspk.pnar")]


def test_compile_no_prudent(capsys):
    code, rep = run_json(capsys, "compile", CORPUS / "nspk.pnar", "--no-prudent")
    assert code == 0
    steps = rep["result"]["frames"]["A"]["steps"]
    assert all(not s.get("tests") for s in steps)


def test_not_executable(capsys, tmp_path):
    p = tmp_path / "bad.pnar"
    p.write_text("protocol Bad\nroles A, B\nA knows A\n1. A -> B : secret\n")
    code, _, err = run(capsys, "compile", p)
    assert code == 2
    assert "not executable" in err


def test_parse_error_exit(capsys, tmp_path):
    p = tmp_path / "bad.pnar"
    p.write_text("protocol Bad\nroles A\n1. A -> : x\n")
    code, _, err = run(capsys, "compile", p)
    assert code == 1
    assert f"{p}:3:9:" in err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["compile"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    code, _, _ = run(capsys, "compile", CORPUS / "missing.pnar")
    assert code == 1


def test_wrong_document_kind(capsys):
    code, _, err = run(capsys, "compile", CORPUS / "iso9797.attack")
    assert code == 1
    assert "expected a Protocol" in err


def test_check_refines(capsys):
    code, rep = run_json(
        capsys, "check-refines", CORPUS / "refine-k1.trace", CORPUS / "refine-k2.trace", "--oracle"
    )
    assert code == 0
    r = rep["result"]
    assert r["first_refines_second"] is True
    assert r["second_refines_first"] is False
    assert r["second_witness_first"] == ["sdec(v2, v4)", "v5"]
    assert r["oracle"]["agrees"] is True


def test_check_refines_text(capsys):
    code, out, _ = run(capsys, "check-refines", CORPUS / "refine-k2.trace", CORPUS / "refine-k1.trace")
    assert code == 0
    assert "witness: sdec(v2, v4) =? v5" in out


def test_detect(capsys):
    code, rep = run_json(
        capsys, "detect", CORPUS / "iso9797.attack", CORPUS / "iso9797.monitor", CORPUS / "iso9797.pnar"
    )
    assert code == 0
    r = rep["result"]
    assert r["detectable"] is True
    assert r["via"] == {"basis": True, "staticeq": True}
    assert r["routes_agree"] is True


def test_synthesize(capsys, tmp_path):
    out = tmp_path / "rule.json"
    code, rep = run_json(
        capsys, "synthesize", CORPUS / "iso9797.attack", CORPUS / "iso9797.monitor",
        CORPUS / "iso9797.pnar", "--out", out,
    )
    assert code == 0
    assert rep["result"]["rule"] == {"lhs": "v1", "rhs": "v2", "polarity": "block_if_satisfied"}
    assert json.loads(out.read_text()) == rep["result"]["rule"]


def test_undetectable_exit(capsys, tmp_path):
    quiet = tmp_path / "quiet.monitor"
    quiet.write_text("monitor quiet for ISO9797\n")
    code, _, _ = run(capsys, "synthesize", CORPUS / "iso9797.attack", quiet, CORPUS / "iso9797.pnar")
    assert code == 3


def test_simulate_lowe(capsys):
    code, rep = run_json(
        capsys, "simulate", CORPUS / "nspk.pnar", CORPUS / "nspk-lowe.attack",
        "--monitor", CORPUS / "nspk.monitor", "--attack", CORPUS / "nspk-lowe.attack",
    )
    assert code == 0
    r = rep["result"]
    assert [p["status"] for p in r["participants"]] == ["accept", "accept"]
    assert r["verdict"] == "block"


def test_simulate_honest_with_rule_file(capsys, tmp_path):
    rule = tmp_path / "rule.json"
    run(capsys, "synthesize", CORPUS / "nspk-lowe.attack", CORPUS / "nspk.monitor",
        CORPUS / "nspk.pnar", "--out", rule)
    code, out, _ = run(
        capsys, "simulate", CORPUS / "nspk.pnar", CORPUS / "nspk-honest.exec",
        "--monitor", CORPUS / "nspk.monitor", "--rules", rule,
    )
    assert code == 0
    assert "verdict: ALLOW" in out


def test_rules_need_monitor(capsys, tmp_path):
    rule = tmp_path / "rule.json"
    rule.write_text('{"lhs": "v1", "rhs": "v2", "polarity": "block_if_satisfied"}')
    code, _, _ = run(capsys, "simulate", CORPUS / "nspk.pnar", CORPUS / "nspk-honest.exec", "--rules", rule)
    assert code == 1


def test_warning_on_divergent_knowledge(capsys):
    code, out, err = run(
        capsys, "detect", CORPUS / "nspk-lowe.attack", CORPUS / "nspk.monitor", CORPUS / "nspk.pnar"
    )
    assert code == 0
    assert err.count("warning: attack Lowe") == 1


def test_json_is_deterministic(capsys):
    args = ("detect", CORPUS / "iso9797.attack", CORPUS / "iso9797.monitor", CORPUS / "iso9797.pnar")
    outs = {run(capsys, *args, "--format", "json", "--no-timing")[1] for _ in range(3)}
    assert len(outs) == 1


def test_theory_file(capsys, tmp_path):
    theory = tmp_path / "t.theory"
    from narmon.theories import CLASSIC_SOURCE
    theory.write_text(CLASSIC_SOURCE)
    code, _, _ = run(capsys, "compile", CORPUS / "nspk.pnar", "--theory", theory)
    assert code == 0
    code, _, _ = run(capsys, "compile", CORPUS / "nspk.pnar", "--theory", "no-such-theory")
    assert code == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "narmon", "--version"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("narmon ")
