import io
import json
import subprocess
import sys

import pytest

from permprod.cli import main
from permprod.optimize import SEED_ENV


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    return code, out.getvalue()


def test_table_tsv():
    code, out = run("table", "--starts", "8")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split("\t") == ["row", "s", "r", "LS", "RS", "converged"]
    assert lines[1].split("\t") == ["s=.4, r=5", "0.4", "5", "2.4771", "2.4466", "yes"]
    assert lines[4].split("\t") == ["s=.8, r=50", "0.8", "50", "6.3166", "6.3038", "yes"]


def test_table_json_round_trip():
    code, out = run("--format", "json", "table", "--starts", "4")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) >= {"command", "params", "rows", "diagnostics"}
    assert doc["command"] == "table"
    assert len(doc["rows"]) == len(doc["diagnostics"]) == 4
    assert doc["rows"][0]["LS"] == pytest.approx(2.4771, abs=5e-4)
    argmax = doc["diagnostics"][0]["argmax"]
    assert set(argmax) >= {"a", "b", "c", "d", "abar", "bbar", "q", "z", "w", "x", "e"}
    # full precision survives a dump/load cycle
    assert json.loads(json.dumps(doc)) == doc
    assert doc["rows"][3]["LS"] != round(doc["rows"][3]["LS"], 4)


def test_precision_flag():
    code, out = run("single", "--s", "0.4", "--r", "50", "--precision", "6")
    assert code == 0
    assert out.splitlines()[1].split("\t") == ["0.4", "50", "2.144316", "4.288632"]


def test_product_command():
    code, out = run("--format", "json", "product", "--s", "0.3", "--t", "0.6", "--r", "5",
                    "--starts", "6")
    assert code == 0
    doc = json.loads(out)
    assert doc["diagnostics"][0]["converged"]
    assert doc["diagnostics"][0]["stationarity_residual"] <= 1e-8


def test_product_nonconvergence_exit_code():
    code, _ = run("product", "--s", "0.4", "--t", "0.4", "--r", "5", "--starts", "2",
                  "--tol", "1e-300")
    assert code == 2


def test_verify_small():
    code, out = run("verify", "--max-n", "2")
    assert code == 0
    assert "2\t1\t1\t1\t5\t5\tPASS" in out
    assert "FAIL" not in out


def test_verify_trivial():
    code, out = run("verify", "--max-n", "0")
    assert code == 0
    assert out.splitlines()[1:] == ["0\t0\t0\t0\t1\t1\tPASS", "# 1/1 cells exact-equal"]


def test_verify_detects_approximate_t6():
    code, out = run("verify", "--max-n", "2", "--approx-t6")
    assert code == 1
    assert "FAIL" in out
    assert "mismatch at (n, m, m', r) = (2, 1, 1, 1)" in out


def test_sweep():
    code, out = run("sweep", "--s", "0.4", "--r-list", "5,50", "--starts", "8")
    assert code == 0
    lines = out.splitlines()
    assert [ln.split("\t")[3] for ln in lines[1:3]] == ["0.0305", "0.0032"]
    assert lines[-1] == "# gap strictly decreasing in r: yes"


@pytest.mark.parametrize("argv", [
    ["single", "--s", "1.5", "--r", "2"],
    ["single", "--s", "0.5"],
    ["product", "--s", "0.5", "--t", "0.5", "--r", "-1"],
    ["sweep", "--s", "0.4", "--r-list", "50,5"],
    ["sweep", "--s", "0.4", "--r-list", "5,abc"],
    ["verify", "--max-n", "-1"],
    ["table", "--starts", "0"],
    ["bogus"],
    [],
])
def test_invalid_arguments(argv):
    assert run(*argv)[0] == 3


def test_seed_flag_position():
    _, a = run("--seed", "7", "--format", "json", "product", "--s", "0.4", "--t", "0.4",
               "--r", "5", "--starts", "2")
    _, b = run("--format", "json", "product", "--s", "0.4", "--t", "0.4", "--r", "5",
               "--starts", "2", "--seed", "7")
    assert json.loads(a)["params"]["seed"] == 7
    assert a == b


def test_seed_env_precedence(monkeypatch):
    monkeypatch.setenv(SEED_ENV, "123")
    _, out = run("--format", "json", "product", "--s", "0.4", "--t", "0.4", "--r", "5",
                 "--starts", "2")
    assert json.loads(out)["params"]["seed"] == 123
    _, out = run("--format", "json", "--seed", "9", "product", "--s", "0.4", "--t", "0.4",
                 "--r", "5", "--starts", "2")
    assert json.loads(out)["params"]["seed"] == 9


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "permprod", "single", "--s", "0.8", "--r", "5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].split("\t")[3] == "2.6197"


def test_output_identical_across_workers():
    _, a = run("--seed", "7", "table", "--starts", "6")
    _, b = run("--seed", "7", "--workers", "3", "table", "--starts", "6")
    assert a == b
