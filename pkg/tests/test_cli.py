import io
import json
import subprocess
import sys

import jsonschema
import pytest

from tflkit.cli import (BISIM_SCHEMA, CHECK_DENOT_SCHEMA, CHECK_GAME_SCHEMA, CLASSIFY_SCHEMA, VALIDATE_SCHEMA,
                        main)
from tflkit.corpus import fixture_path


def fx(name):
    return str(fixture_path(name))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


@pytest.mark.parametrize("name", ["diamond.tsi", "ce2_a.net", "choice_then_c.es", "loop.ccs"])
def test_validate(capsys, name):
    code, data = run_json(capsys, "validate", fx(name))
    jsonschema.validate(data, VALIDATE_SCHEMA)
    assert code == 0 and data["ok"]


def test_validate_reports_failures(capsys, tmp_path):
    bad = tmp_path / "bad.tsi"
    bad.write_text("state s init\nstate x\nstate y\nstate q\ntrans t1 s a x\ntrans t2 s b y\n"
                   "trans t3 x b q\nindep t1 t2\nindep t1 t3\n")
    code, out, _ = run(capsys, "validate", str(bad))
    assert code == 1 and "FAIL" in out


def test_check_game_engine(capsys):
    code, out, _ = run(capsys, "check", "--model", fx("diamond.tsi"), "--formula", "<a> <b> tt", "--engine", "game")
    assert code == 0 and out.startswith("satisfied")


def test_check_json_schemas(capsys):
    code, data = run_json(capsys, "check", "--model", fx("ce1_top_left.tsi"), "--formula",
                          "<co>(<a> <c> tt & <b> <d> tt)")
    jsonschema.validate(data, CHECK_DENOT_SCHEMA)
    assert code == 0 and data["satisfied"]
    code, data = run_json(capsys, "check", "--model", fx("ce1_top_right.tsi"), "--formula",
                          "<co>(<a> <c> tt & <b> <d> tt)", "--engine", "game")
    jsonschema.validate(data, CHECK_GAME_SCHEMA)
    assert code == 1 and data["winner"] == "adam"


def test_check_both_engines_over_a_file(capsys, tmp_path):
    f = tmp_path / "suite.tfl"
    f.write_text("# a few properties\n<a> tt\n[a] ff\nnu X. <-> X\nmu X. [a] X & [b] X\n")
    for jobs in ("1", "2"):
        code, data = run_json(capsys, "check", "--model", fx("diamond.tsi"), "--formula-file", str(f),
                              "--engine", "both", "--jobs", jobs)
        assert code == 1  # [a] ff and nu X. <-> X fail
        assert [r["denot"]["satisfied"] for r in data] == [True, False, False, True]
        for r in data:
            jsonschema.validate(r["denot"], CHECK_DENOT_SCHEMA)
            jsonschema.validate(r["game"], CHECK_GAME_SCHEMA)
            assert r["denot"]["satisfied"] == (r["game"]["winner"] == "eve")


def test_check_on_ccs_model(capsys):
    code, _, _ = run(capsys, "check", "--model", fx("two_loops.ccs"), "--formula", "nu X. <a> X")
    assert code == 0


def test_check_needs_exactly_one_formula_source(capsys):
    code, _, err = run(capsys, "check", "--model", fx("diamond.tsi"))
    assert code == 64 and "formula" in err


@pytest.mark.parametrize("rel,left,right,mode,code", [
    ("thpb", "ce2_a.net", "ce2_b.net", "exact", 0),
    ("hhpb", "ce2_a.net", "ce2_b.net", "exact", 1),
    ("hpb", "ce1_top_left.tsi", "ce1_top_right.tsi", "exact", 0),
    ("sb", "diamond.tsi", "interleaving.tsi", "exact", 0),
    ("hpb", "diamond.tsi", "a_par_b.net", "local", 0),
    ("hpb", "loop.ccs", "two_loops.ccs", "bounded=3", 1),
])
def test_bisim(capsys, rel, left, right, mode, code):
    got, data = run_json(capsys, "bisim", "--rel", rel, "--left", fx(left), "--right", fx(right), "--mode", mode)
    jsonschema.validate(data, BISIM_SCHEMA)
    assert got == code


def test_bisim_unknown_exit_code(capsys, tmp_path):
    one = tmp_path / "one.tsi"
    one.write_text("state s init\ntrans x s a s\n")
    two = tmp_path / "two.tsi"
    two.write_text("state s init\nstate q\ntrans x s a q\ntrans y q a s\n")
    code, data = run_json(capsys, "bisim", "--rel", "hpb", "--left", str(one), "--right", str(two),
                          "--mode", "bounded=4")
    assert code == 2 and data["verdict"] == "unknown"


def test_bisim_errors(capsys):
    code, _, _ = run(capsys, "bisim", "--left", fx("loop.ccs"), "--right", fx("loop.ccs"))
    assert code == 65  # exact mode on a cyclic system
    code, _, _ = run(capsys, "bisim", "--left", fx("diamond.tsi"), "--right", fx("diamond.tsi"), "--mode", "deep")
    assert code == 64


def test_classify(capsys):
    code, data = run_json(capsys, "classify", fx("ce1_top_left.tsi"))
    jsonschema.validate(data, CLASSIFY_SCHEMA)
    assert code == 0 and data["confusion"] and not data["xi"]
    code, out, _ = run(capsys, "classify", fx("confusion_symmetric.net"))
    assert "symmetric, deterministic" in out


def test_translate(capsys, tmp_path):
    code, out, _ = run(capsys, "translate", fx("choice_then_c.es"))
    assert code == 0 and out.count("trans ") == 4
    dest = tmp_path / "n.net"
    code, _, _ = run(capsys, "translate", fx("loop_and_choice.ccs"), "--to", "net", "-o", str(dest))
    assert code == 0 and dest.read_text().count("action ") == 4
    code, _, _ = run(capsys, "validate", str(dest))
    assert code == 0


def test_fold(capsys, tmp_path):
    dest = tmp_path / "f.tsi"
    code, _, _ = run(capsys, "fold", "--ccs", fx("loop_and_choice.ccs"), "-o", str(dest))
    assert code == 0
    code, _, _ = run(capsys, "validate", str(dest))
    assert code == 0
    code, out, _ = run(capsys, "fold", "--ccs", fx("loop.ccs"))
    assert out.count("trans ") == 1 and out.count("state ") == 1


def test_fold_verify(capsys, tmp_path):
    suite = tmp_path / "s.tfl"
    suite.write_text("nu Z. <a>c Z\n<a> <b> tt\n")
    code, data = run_json(capsys, "fold", "--verify", fx("loop_and_choice.ccs"), "--formulas", str(suite),
                          "--depth", "8")
    assert code == 0 and data["disagreements"] == 0 and len(data["results"]) == 2


def test_fold_needs_a_program(capsys):
    assert run(capsys, "fold")[0] == 64


def test_play(capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("9\n0\n"))
    code, out, _ = run(capsys, "play", "--model", fx("diamond.tsi"), "--formula", "<a> tt | <b> ff")
    assert code == 0
    assert "eve has a winning strategy; you play adam" in out
    assert out.rstrip().endswith("eve wins")


def test_play_as_eve(capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("0\n1\n"))
    code, out, _ = run(capsys, "play", "--model", fx("diamond.tsi"), "--formula", "<a> ff | <b> ff")
    assert "you play eve" in out and out.rstrip().endswith("adam wins")


def test_data_errors_name_the_file(capsys, tmp_path):
    bad = tmp_path / "bad.net"
    bad.write_text("place p marked\naction x a\narc p => x\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 65 and f"{bad}:3:" in err
    code, _, err = run(capsys, "check", "--model", fx("diamond.tsi"), "--formula", "<a> X")
    assert code == 65


def test_cap_exit_code(capsys):
    code, _, err = run(capsys, "check", "--model", fx("ce2_b.net"), "--formula", "tt", "--cap", "3")
    assert code == 70 and "cap" in err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 64
    with pytest.raises(SystemExit) as e:
        main(["check", "--model", fx("diamond.tsi"), "--formula", "tt", "--engine", "both", "--engine", "x"])
    assert e.value.code == 64


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "tflkit.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("tflkit ")
