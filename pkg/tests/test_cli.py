import io
import json
import subprocess
import sys

import pytest

from shiftcoerce.cli import main


@pytest.fixture
def run(tmp_path):
    def go(args, source=None, files=None):
        for name, text in (files or {}).items():
            (tmp_path / name).write_text(text)
        argv = list(args)
        if source is not None:
            (tmp_path / "input").write_text(source)
            argv.append(str(tmp_path / "input"))
        argv = [str(tmp_path / a[1:]) if a.startswith("@") else a for a in argv]
        out, err = io.StringIO(), io.StringIO()
        code = main(argv, out, err)
        return code, out.getvalue(), err.getvalue()
    return go


def test_run(run):
    code, out, _ = run(["run", "--fuel", "1000"], "1 + <10 + (S0 k. 100 + k (k 0))>")
    assert (code, out) == (0, "121\n")
    code, out, _ = run(["run"], "<1 + <10 * (S0 k1. S0 k2. k1 (k2 0))>>")
    assert (code, out) == (0, "10\n")


def test_run_fuel_and_stuck(run):
    assert run(["run", "--fuel", "10"], "(fix f x. f x) 1")[0] == 3
    assert run(["run"], "S0 k. 1")[0] == 1


def test_eval(run):
    code, out, _ = run(["eval", "--fuel", "100"], r"(\f. f 1) ([top -> id](\x. x))")
    assert (code, out) == (0, "() (beta=2, iota=3)\n")


def test_eval_trace(run):
    code, out, _ = run(["eval", "--trace"], r"(\f. f 1) ([top -> id](\x. x))")
    lines = out.splitlines()
    assert lines[0] == r"beta lam [top -> id](\x. x) 1"
    assert lines[-1] == "() (beta=2, iota=3)"


def test_eval_exhausted(run):
    code, out, _ = run(["eval", "--fuel", "5"], "(fix f x. f x) 1")
    assert code == 3 and out.startswith("fuel exhausted")


def test_check(run):
    code, out, _ = run(["check", "--type", "top"], r"(\f. f 1) (\x. x)")
    assert code == 0
    assert out.startswith("(T-App (T-Abs") and "S-Arrow (S-Top) (S-Refl)" in out


def test_check_type_error(run):
    code, out, err = run(["check", "--calculus", "eff", "--type", "nat"], "S0 k. 1")
    assert code == 1 and out == "" and "type error" in err


def test_check_unbound(run):
    assert run(["check", "--type", "nat"], "x")[0] == 1


def test_check_with_env(run):
    files = {"gamma": "x : nat -> nat\ny : nat -> [nat, nat, nat]\nz : nat -> nat\n"}
    code, out, _ = run(["check", "--calculus", "eff", "--type", "nat", "--env", "@gamma"],
                       r"x <y (S0 k. z (k 42))>", files)
    assert code == 0 and "T-Rst" in out


def test_translate_with_derivation(run):
    files = {"d.drv": ("(T-App (T-Sub (T-Fix (T-PApp (T-Var) (T-Var))) (S-Lift (S-Refl))) "
                       "(T-Sub (T-Const) (S-Lift (S-Refl))))")}
    code, out, _ = run(["translate", "--calculus", "eff", "--type", "[nat, nat, nat]",
                        "--derivation", "@d.drv"], "(fix f x. f x) 1", files)
    assert code == 0
    assert out == "\\k. [lift id](fix f x. f x) (\\f. [lift id]1 (\\x. f x k))\n"


def test_translate_bad_derivation(run):
    files = {"d.drv": "(T-Const)"}
    code, _, err = run(["translate", "--type", "top", "--derivation", "@d.drv"], "1", files)
    assert code == 1 and "T-Const" in err


def test_derive(run):
    code, out, _ = run(["derive", "--calculus", "eff", "--type", "[nat, nat, nat]",
                        "--budget", "2", "--limit", "3"], "1")
    assert code == 0 and len(out.splitlines()) == 3


def test_erase(run):
    code, out, _ = run(["erase"], "[id]1")
    assert (code, out) == (0, "(\\a. a) 1\n")


def test_parse_error(run):
    code, _, err = run(["erase"], "(1")
    assert code == 4 and "parse error" in err


def test_usage_error(run):
    assert run(["run", "--bogus"], "1")[0] == 4
    assert run(["check"], "1")[0] == 4  # --type is required
    assert run(["eval", "--fuel", "-1"], "1")[0] == 4


def test_missing_file(run):
    assert run(["erase", "/nonexistent/file"])[0] == 4


def test_cohere(run):
    args = ["cohere", "--calculus", "eff", "--type", "[nat, nat, nat]", "--fuel", "1000",
            "--contexts", "2", "--seed", "3"]
    code, out, _ = run(args, "(fix f x. f x) 1")
    assert code == 0 and "summary: Coherent" in out and "seed: 3" in out
    code, out2, _ = run(args, "(fix f x. f x) 1")
    assert out2 == out
    code, out, _ = run(args + ["--json"], "(fix f x. f x) 1")
    assert json.loads(out)["summary"] == "Coherent"


def test_module_entry_point(tmp_path):
    src = tmp_path / "p.src"
    src.write_text("<5>")
    proc = subprocess.run([sys.executable, "-m", "shiftcoerce", "run", str(src)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "5\n"
