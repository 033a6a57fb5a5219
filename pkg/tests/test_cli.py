import json
import shutil
import subprocess
import sys

import pytest

from centmon.cli import EXIT_FAILURE, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main, parse_args
from centmon.fca import FormalContext, write_cxt


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_text_and_json(capsys):
    code, out, _ = run(capsys, "classify", "193")
    assert code == EXIT_OK and "U(193)" in out and "case SYM" in out
    code, out, _ = run(capsys, "classify", "(3,0,0,1)", "--json")
    doc = json.loads(out)
    assert doc["code"] == 193 and doc["analysis"]["orbits"][0][0] == [1, 3, 0]
    code, out, _ = run(capsys, "classify", "1230", "--json")
    assert json.loads(out)["class"] == "C1"


@pytest.mark.parametrize("argv", [["classify", "256"], ["classify", "01234"], ["enumerate", "--attribute", "A9"],
                                  ["enumerate", "--attribute", "TRIVIAL"], ["stage"], ["stage", "C1", "--all"],
                                  ["frobnicate"], ["stage", "C1", "--budget", "0"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert "error" in err


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", "--attribute", "E1", "--count-only", "--json")
    assert code == EXIT_OK and json.loads(out) == {"condition": "E1", "count": 65536}
    code, out, _ = run(capsys, "enumerate", "--attribute", "C1", "--limit", "3")
    lines = out.split()
    assert len(lines) == 3 and all(len(x) == 24 for x in lines)


def test_stage_and_reload(capsys, tmp_path):
    code, out, _ = run(capsys, "stage", "C1", "U(193)", "--workdir", str(tmp_path))
    assert code == EXIT_OK
    assert out.splitlines() == ["C1\t6", "U(193)\t12"]
    assert (tmp_path / "stages" / "stage-U193.json").exists()
    code, out, _ = run(capsys, "stage", "C1", "--workdir", str(tmp_path), "--json")
    assert json.loads(out)["C1"]["monoids"] == 6


def test_assemble_reports_missing_stages(capsys, tmp_path):
    code, _, err = run(capsys, "assemble", "--workdir", str(tmp_path))
    assert code == EXIT_FAILURE and "missing stages" in err


def test_canonicalize_needs_k1(capsys, tmp_path):
    code, _, err = run(capsys, "canonicalize", "--workdir", str(tmp_path))
    assert code == EXIT_FAILURE and "assemble" in err


def test_context_commands(capsys, tmp_path):
    ops = ["000000000000000000000123", "000000000000000000000000", "111111111111111111111111"]
    ctx = FormalContext.from_matrix([[1, 0, 0], [1, 1, 0], [1, 0, 1]], ops, ["a", "b", "c"])
    path = tmp_path / "k.cxt"
    write_cxt(ctx, path)
    code, out, _ = run(capsys, "intents", str(path), "--count")
    assert code == EXIT_OK and out.strip() == "4"
    code, out, _ = run(capsys, "intents", str(path), "--json")
    assert json.loads(out)["intents"][-1] == ["a", "b", "c"]
    code, out, _ = run(capsys, "maximal", str(path), "--json")
    assert [d["witness"] for d in json.loads(out)["maximal"]] == [ops[2], ops[1]]
    code, out, _ = run(capsys, "conjugacy", str(path), "--count")
    assert out.strip() == "2"  # the two constant-valued ops are conjugate
    code, out, _ = run(capsys, "conjugacy", str(path), "--maximal", "--count")
    assert out.strip() == "1"


def test_conjugacy_rejects_bad_labels(capsys, tmp_path):
    path = tmp_path / "bad.cxt"
    write_cxt(FormalContext.from_matrix([[1]], ["nope"], ["a"]), path)
    code, _, err = run(capsys, "conjugacy", str(path))
    assert code == EXIT_USAGE


def test_intents_bad_file(capsys, tmp_path):
    path = tmp_path / "x.cxt"
    path.write_text("B\n\n1\n1\n\ng\nm\nQ\n")
    code, _, err = run(capsys, "intents", str(path))
    assert code == EXIT_FAILURE and "line 8" in err
    code, _, err = run(capsys, "intents", str(tmp_path / "missing.cxt"))
    assert code == EXIT_FAILURE


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--json")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc == {"operations": 729, "pairs": 19683, "mismatches": 0, "clarified_objects": 15,
                   "reduced_objects": 8, "intents": 16, "brute_force_intents": 16, "maximal": 7}


def test_verify_missing(capsys, tmp_path):
    code, _, err = run(capsys, "verify", "--workdir", str(tmp_path))
    assert code == EXIT_FAILURE and "missing" in err


def test_verify_full_run(capsys, full_run):
    code, out, _ = run(capsys, "verify", "--workdir", str(full_run["workdir"]), "--json")
    doc = json.loads(out)
    expect = EXIT_OK if all(v["pass"] for v in doc["figures"].values()) else EXIT_MISMATCH
    assert code == expect
    assert doc["figures"]["intents"] == {"observed": 1715, "expected": 1715, "pass": True}


def test_pipeline_commands_rebuild_contexts(capsys, full_run, tmp_path):
    dst = tmp_path / "run"
    shutil.copytree(full_run["workdir"] / "stages", dst / "stages")
    code, out, _ = run(capsys, "assemble", "--workdir", str(dst), "--json")
    assert code == EXIT_OK and json.loads(out)["objects"] == full_run["report"].figures["objects_K1"]
    code, out, _ = run(capsys, "canonicalize", "--workdir", str(dst), "--json")
    assert json.loads(out) == {"K2": [392, 167], "K3": [392, 155]}
    for name in ("K1", "K2", "K3"):
        assert (dst / "contexts" / f"{name}.cxt").read_bytes() == (full_run["workdir"] / "contexts" / f"{name}.cxt").read_bytes()


def test_parse_args_plan():
    plan = parse_args(["stage", "C1", "--workers", "2", "--json"])
    assert plan.command == "stage" and plan.json and plan.params["workers"] == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "centmon", "classify", "26"], capture_output=True, text=True)
    assert out.returncode == 0 and "U(26)" in out.stdout
