import csv
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from inspection_timing.cli import main

from conftest import INNOVATION, MAINTENANCE, MAINTENANCE_NOISY

SCHEMAS = Path(__file__).resolve().parent.parent / "docs" / "schemas"


def _validator(name):
    store = {}
    for path in SCHEMAS.glob("*.json"):
        schema = json.loads(path.read_text())
        store[schema["$id"]] = schema
    from referencing import Registry, Resource
    registry = Registry().with_resources(
        (k, Resource.from_contents(v)) for k, v in store.items())
    return jsonschema.Draft202012Validator(store[f"{name}.schema.json"], registry=registry)


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def params_arg(p):
    return json.dumps(p.to_dict())


def test_schemas_are_valid():
    for path in SCHEMAS.glob("*.json"):
        jsonschema.Draft202012Validator.check_schema(json.loads(path.read_text()))


def test_solve_exponential(capsys):
    code, out, _ = run(capsys, "solve", "--params", params_arg(MAINTENANCE))
    assert code == 0
    doc = json.loads(out)
    assert doc["policy"] == {"exponential": {"gamma": 1.2}}
    assert doc["cost"] == pytest.approx(1.2)
    _validator("solution").validate(doc)
    _validator("params").validate(doc["params"])


def test_solve_delayed_from_file(capsys, tmp_path):
    path = tmp_path / "params.json"
    path.write_text(params_arg(MAINTENANCE_NOISY))
    code, out, _ = run(capsys, "solve", "--params", str(path))
    doc = json.loads(out)
    assert code == 0
    pol = doc["policy"]["delayed_exponential"]
    assert pol["tau_hat"] == pytest.approx(0.358352, abs=1e-6)
    assert pol["gamma"] == pytest.approx(2.210526, abs=1e-6)
    _validator("solution").validate(doc)
    _validator("policy").validate(doc["policy"])


def test_solve_infeasible_exit_2(capsys):
    code, out, err = run(capsys, "solve", "--params", params_arg(MAINTENANCE_NOISY.with_(delta=1.0)))
    assert code == 2 and out == ""
    doc = json.loads(err)
    _validator("error").validate(doc)
    assert doc["assumptions"]["a2a_holds"] is False


@pytest.mark.parametrize("args", [
    ["solve"],
    ["solve", "--params", "{broken"],
    ["solve", "--params", "/no/such/file.json"],
    ["solve", "--params", '{"lambda_g": 1}'],
    ["verify", "--params", params_arg(INNOVATION), "--policy", '{"weekly": {}}'],
    ["sweep", "--params", params_arg(MAINTENANCE_NOISY), "--axis", "t", "--min", "1", "--max", "0", "--n", "5"],
    ["sweep", "--params", params_arg(MAINTENANCE_NOISY), "--axis", "t", "--min", "0", "--max", "1", "--n", "1"],
    ["solve", "--params", params_arg(MAINTENANCE.with_(rho=0.5))],
])
def test_bad_config_exit_4(capsys, args):
    code, _, err = run(capsys, *args)
    assert code == 4
    _validator("error").validate(json.loads(err))


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": INNOVATION.to_dict(), "axis": "t", "min": 0.0, "max": 1.0, "n": 3}))
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--n", "5")
    assert code == 0
    assert len(out.strip().splitlines()) == 6
    cfg.write_text(json.dumps({"params": INNOVATION.to_dict(), "bogus": 1}))
    code, _, _ = run(capsys, "solve", "--config", str(cfg))
    assert code == 4


def test_verify_solved_policy_passes(capsys):
    code, out, _ = run(capsys, "verify", "--params", params_arg(MAINTENANCE_NOISY))
    doc = json.loads(out)
    assert code == 0 and doc["pass"] is True
    _validator("verify").validate(doc)


def test_verify_loose_periodic_fails(capsys):
    tau = 1.05 * -math.log(0.5 * math.sqrt(0.6))
    code, out, _ = run(capsys, "verify", "--params", params_arg(INNOVATION), "--policy",
                       json.dumps({"periodic": {"tau": tau}}))
    doc = json.loads(out)
    assert code == 0 and doc["pass"] is False
    dp = next(c for c in doc["checks"] if c["check"] == "agent_dp")
    assert dp["W_minus_U1"] > 1e-3
    _validator("verify").validate(doc)


def test_verify_no_policy(capsys):
    code, out, _ = run(capsys, "verify", "--params", params_arg(INNOVATION), "--policy", "none")
    doc = json.loads(out)
    assert [c["check"] for c in doc["checks"]] == ["no_inspection_value"]
    assert doc["checks"][0]["W"] == pytest.approx(2.0, rel=1e-3)
    _validator("verify").validate(doc)


def test_simulate_output_and_trace(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "simulate", "--params", params_arg(MAINTENANCE), "--runs", "2000",
                       "--seed", "4", "--trace", str(trace),
                       "--strategy", '{"shirk_then_work": {"t_switch": 0.2}}')
    doc = json.loads(out)
    assert code == 0
    _validator("simulate").validate(doc)
    assert "cost" not in doc["closed_form"]
    assert len(trace.read_text().splitlines()) == 2001


def test_sweep_t_axis(capsys):
    code, out, _ = run(capsys, "sweep", "--params", params_arg(MAINTENANCE_NOISY), "--axis", "t", "--min", "0",
                       "--max", "1", "--n", "11")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["t", "loss_shirk", "discount_cost", "status"]
    assert float(rows[0]["loss_shirk"]) == pytest.approx(0.75)
    assert float(rows[5]["discount_cost"]) == pytest.approx(math.exp(-0.5))


def test_sweep_lambda_ratio(capsys):
    code, out, _ = run(capsys, "sweep", "--params", params_arg(INNOVATION), "--axis", "lambda_ratio",
                       "--min", "1", "--max", "3", "--n", "5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[0]["cost_ratio"]) == pytest.approx(1.0, abs=1e-12)
    assert float(rows[2]["cost_ratio"]) == pytest.approx(11 / 6, abs=1e-12)


def test_sweep_lambda_b_switches_once_and_flags_infeasible(capsys):
    code, out, _ = run(capsys, "sweep", "--params", params_arg(MAINTENANCE_NOISY), "--axis", "lambda_b",
                       "--min", "0.6", "--max", "3.0", "--n", "13")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 2
    kinds = [r["policy_kind"] for r in rows if r["status"] == "ok"]
    assert kinds[0] == "periodic" and kinds[-1] == "delayed_exponential"
    assert sum(a != b for a, b in zip(kinds, kinds[1:])) == 1
    bad = [r for r in rows if r["status"] == "infeasible"]
    assert bad and all(r["cost"] == "" for r in bad)


def test_sweep_rho_and_delta(capsys):
    code, out, _ = run(capsys, "sweep", "--params", params_arg(MAINTENANCE_NOISY), "--axis", "rho", "--min", "0",
                       "--max", "3", "--n", "4")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert rows[0]["status"] == "ok"
    assert {r["status"] for r in rows} <= {"ok", "wrong_regime"}
    code, out, _ = run(capsys, "sweep", "--params", params_arg(MAINTENANCE_NOISY), "--axis", "delta", "--min", "1",
                       "--max", "9", "--n", "3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 2 and rows[0]["status"] == "infeasible" and rows[-1]["status"] == "ok"


def test_console_script_and_log_level(tmp_path):
    env = dict(os.environ, INSPECT_LOG="INFO")
    proc = subprocess.run([sys.executable, "-m", "inspection_timing.cli", "sweep", "--params",
                           params_arg(MAINTENANCE_NOISY), "--axis", "lambda_b", "--min", "1", "--max", "2",
                           "--n", "2"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "lambda_bar_b=" in proc.stderr


def test_output_file(capsys, tmp_path):
    out = tmp_path / "solution.json"
    code, stdout, _ = run(capsys, "solve", "--params", params_arg(INNOVATION), "--out", str(out))
    assert code == 0 and stdout == ""
    _validator("solution").validate(json.loads(out.read_text()))
