"""Command-line surface: run, verify, probe, and their exit codes."""
import io
import json
import os
import subprocess

import pytest

from ceerlab.ceers import CeerTable
from ceerlab.cli import main
from ceerlab.pairing import pair

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")

TINY_SIGMA3 = """\
construction = sigma3
stages = 4
[universal]
1: 0 1
[wcolumn 0]
2: 0
3: 1
"""


@pytest.fixture
def tiny_scenario(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text(TINY_SIGMA3)
    return str(path)


def shipped(name):
    return os.path.join(SCENARIOS, name)


# -- run -----------------------------------------------------------------


def test_run_writes_log_and_summary(tiny_scenario, tmp_path, capsys):
    out = str(tmp_path / "tiny.log.jsonl")
    rc = main(["run", tiny_scenario, "--out", out])
    assert rc == 0
    text = capsys.readouterr().out
    assert "construction: sigma3" in text
    assert f"log: {out}" in text
    lines = open(out).read().splitlines()
    assert json.loads(lines[0])["construction"] == "sigma3"
    assert len(lines) == 3


def test_run_default_log_sits_next_to_scenario(tiny_scenario, capsys):
    rc = main(["run", tiny_scenario])
    assert rc == 0
    expected = tiny_scenario[: -len(".txt")] + ".log.jsonl"
    assert os.path.exists(expected)
    assert f"log: {expected}" in capsys.readouterr().out


def test_run_reruns_byte_identical(tiny_scenario, tmp_path, capsys):
    a, b = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    assert main(["run", tiny_scenario, "--out", a]) == 0
    assert main(["run", tiny_scenario, "--out", b]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_run_stage_override(tiny_scenario, tmp_path, capsys):
    out = str(tmp_path / "o.jsonl")
    rc = main(["run", tiny_scenario, "--stages", "2", "--out", out])
    assert rc == 0
    header = json.loads(open(out).read().splitlines()[0])
    assert header["params"]["stages"] == 2


def test_run_missing_scenario(capsys, tmp_path):
    rc = main(["run", str(tmp_path / "nope.txt")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_run_bad_epsilon(tiny_scenario, capsys):
    rc = main(["run", tiny_scenario, "--epsilon", "lots"])
    assert rc == 2
    assert "bad epsilon" in capsys.readouterr().err


def test_run_reports_audit_failure_with_exit_one(tmp_path, capsys):
    out = str(tmp_path / "dark.jsonl")
    rc = main([
        "run", shipped("dark-group-basic.txt"),
        "--epsilon", "1/100", "--out", out,
    ])
    assert rc == 1
    assert "gs audit: FAILED" in capsys.readouterr().out


# -- verify ---------------------------------------------------------------


@pytest.mark.parametrize(
    "log,suite",
    [
        ("star-universal-basic.log.jsonl", "triangularity"),
        ("star-universal-basic.log.jsonl", "level-census"),
        ("star-universal-basic.log.jsonl", "vi-vs-U"),
        ("sug-basic.log.jsonl", "triangularity"),
        ("dark-ring-basic.log.jsonl", "membership"),
        ("dark-group-basic.log.jsonl", "membership"),
    ],
)
def test_verify_shipped_logs_pass(log, suite, capsys):
    rc = main(["verify", shipped(log), suite])
    out = capsys.readouterr().out
    assert rc == 0, out
    assert f"suite {suite}: PASS" in out


def test_verify_unknown_suite(capsys):
    rc = main(["verify", shipped("star-universal-basic.log.jsonl"), "magic"])
    assert rc == 2
    assert "unknown suite" in capsys.readouterr().err


def test_verify_wrong_construction(capsys):
    rc = main(["verify", shipped("star-universal-basic.log.jsonl"),
               "membership"])
    assert rc == 2
    assert "applies to" in capsys.readouterr().out


def test_verify_missing_log(tmp_path, capsys):
    rc = main(["verify", str(tmp_path / "none.jsonl"), "triangularity"])
    assert rc == 2
    assert "cannot read log" in capsys.readouterr().err


def test_verify_malformed_log(tmp_path, capsys):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"construction":"star-universal","params":{}}\n'
                    '{"stage":1,"requirement":"R0","kind":"R",'
                    '"action":"case-2"}\n')
    rc = main(["verify", str(path), "level-census"])
    assert rc == 2
    assert "malformed log" in capsys.readouterr().err


def test_verify_empty_log_passes_vacuously(tmp_path, capsys):
    header = {
        "construction": "star-universal",
        "params": {"base": 6, "levels": 1, "stages": 5,
                   "universal": [], "universal_bound": 2},
    }
    path = tmp_path / "empty.jsonl"
    path.write_text(json.dumps(header) + "\n")
    rc = main(["verify", str(path), "level-census"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "vacuously" in out


def test_verify_flags_nontriangular_relator(tmp_path, capsys):
    header = {"construction": "star-universal",
              "params": {"base": 6, "levels": 1, "stages": 2,
                         "universal": [], "universal_bound": 2}}
    record = {"stage": 1, "requirement": "R0", "kind": "R",
              "action": "case-3a", "witnesses": [0, 1],
              "relators": [{"lhs": 5, "rhs": [[7, 1]]}]}
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(header) + "\n" + json.dumps(record) + "\n")
    rc = main(["verify", str(path), "triangularity"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "FAIL" in out


def test_verify_catches_dropped_collapse(tmp_path, capsys):
    src = open(shipped("star-universal-basic.log.jsonl")).read().splitlines()
    kept = [ln for ln in src if '"collapse-level"' not in ln]
    assert len(kept) == len(src) - 1
    path = tmp_path / "tampered.jsonl"
    path.write_text("\n".join(kept) + "\n")
    rc = main(["verify", str(path), "vi-vs-U"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "suite vi-vs-U: FAIL" in out


def test_verify_catches_floor_violation(tmp_path, capsys):
    src = open(shipped("dark-ring-basic.log.jsonl")).read().splitlines()
    rows = [json.loads(ln) for ln in src]
    # pretend the first collapse promised a higher floor than it honored
    for obj in rows:
        if obj.get("action") == "collapse-pair" and obj["relator_degrees"]:
            obj["degree_floor"] = max(obj["relator_degrees"])
            break
    path = tmp_path / "floor.jsonl"
    path.write_text("\n".join(json.dumps(o) for o in rows) + "\n")
    rc = main(["verify", str(path), "membership"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "violates floor" in out


# -- probe ----------------------------------------------------------------


@pytest.fixture
def dumps(tmp_path):
    left = CeerTable(bound=4)
    left.assert_pair(0, 1, 3)
    right = CeerTable(bound=4)
    right.assert_pair(2, 3, 1)
    lp = tmp_path / "left.jsonl"
    rp = tmp_path / "right.jsonl"
    lp.write_text(left.dumps())
    rp.write_text(right.dumps())
    return str(lp), str(rp)


def test_probe_related_uses_stage(dumps, capsys):
    left, _ = dumps
    assert main(["probe", "related", left, "0", "1"]) == 0
    assert main(["probe", "related", left, "--stage", "2", "0", "1"]) == 0
    assert main(["probe", "related", left, "--stage", "3", "0", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["true", "false", "true"]


def test_probe_classes(dumps, capsys):
    left, _ = dumps
    assert main(["probe", "classes", left, "--bound", "4"]) == 0
    classes = [json.loads(ln) for ln in capsys.readouterr().out.splitlines()]
    assert [0, 1] in classes and [2] in classes and [3] in classes


def test_probe_product(dumps, capsys):
    left, right = dumps
    assert main(["probe", "product", left, right]) == 0
    table = CeerTable.load(io.StringIO(capsys.readouterr().out))
    # (0,2) ~ (1,3): left relates 0,1 and right relates 2,3
    assert table.related(pair(0, 2), pair(1, 3), 3)
    assert not table.related(pair(0, 2), pair(1, 3), 2)


def test_probe_join(dumps, capsys):
    left, right = dumps
    assert main(["probe", "join", left, right]) == 0
    table = CeerTable.load(io.StringIO(capsys.readouterr().out))
    assert table.related(pair(0, 0), pair(0, 1), 3)
    assert table.related(pair(1, 2), pair(1, 3), 1)
    assert not table.related(pair(0, 0), pair(1, 0), 99)


def test_probe_pullback(dumps, capsys):
    left, _ = dumps
    rc = main(["probe", "pullback", left, "--map", "0:0,1:1,2:1",
               "--bound", "3"])
    assert rc == 0
    table = CeerTable.load(io.StringIO(capsys.readouterr().out))
    assert table.related(0, 1, 3)
    assert table.related(1, 2, 0)


def test_probe_verify_reduction_pass_and_fail(dumps, capsys):
    left, right = dumps
    rc = main(["probe", "verify-reduction", left, right,
               "--map", "0:2,1:3,2:0,3:1"])
    assert rc == 0
    assert "no violations" in capsys.readouterr().out
    # 0 ~ 1 on the left but their images 2 and 0 stay apart on the right
    rc = main(["probe", "verify-reduction", left, right,
               "--map", "0:2,1:0,2:1,3:1"])
    assert rc == 1
    assert "violation" in capsys.readouterr().out


def test_probe_missing_dump(tmp_path, capsys):
    rc = main(["probe", "related", str(tmp_path / "no.jsonl"), "0", "1"])
    assert rc == 2
    assert "cannot read dump" in capsys.readouterr().err


def test_probe_empty_map(dumps, capsys):
    left, _ = dumps
    rc = main(["probe", "pullback", left, "--map", " "])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_console_script_help():
    proc = subprocess.run(["ceerlab", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "verify" in proc.stdout
