import csv
import json

import pytest

from faasorch.cli import main

CONFIG = """
variants: [moevq, baseline]
seeds: 1
workload:
  duration: 60
  streams:
    - {function: linpack, rate: 0.5, payload_mu: 8.5, payload_sigma: 0.5}
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "exp.yaml"
    p.write_text(CONFIG)
    return p


def test_run_cartesian_product_and_replay(tmp_path, cfg_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--seed", "1..2", "--out", str(out)]) == 0
    cells = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert cells == ["baseline-seed1", "baseline-seed2", "moevq-seed1", "moevq-seed2"]
    rows = list(csv.DictReader((out / "comparison.csv").open()))
    assert len(rows) == 8 and all(r["overall_score"] for r in rows if r["function"] == "*")
    capsys.readouterr()
    cell = out / "moevq-seed2"
    assert main(["replay", str(cell / "events.ndjson")]) == 0
    assert capsys.readouterr().out == (cell / "report.csv").read_text()
    summary = json.loads((cell / "summary.json").read_text())
    assert summary["streaming_cost_micro"] == summary["aggregate"]["total_cost_micro"]


def test_replay_with_alternate_pricing_changes_only_cost(tmp_path, cfg_path, capsys):
    out = tmp_path / "out"
    main(["run", "--config", str(cfg_path), "--variant", "moevq", "--out", str(out)])
    log = out / "moevq-seed1" / "events.ndjson"
    capsys.readouterr()
    main(["replay", str(log)])
    a = list(csv.DictReader(capsys.readouterr().out.splitlines()))[-1]
    main(["replay", str(log), "--price-per-gb-s", "0.00005"])
    b = list(csv.DictReader(capsys.readouterr().out.splitlines()))[-1]
    assert a["total_cost"] != b["total_cost"]
    for key in ("total_requests", "succeeded", "sla_rate", "drop_rate"):
        assert a[key] == b[key]


def test_truncated_log_is_an_integrity_error(tmp_path, cfg_path, capsys):
    out = tmp_path / "out"
    main(["run", "--config", str(cfg_path), "--variant", "baseline", "--out", str(out)])
    log = out / "baseline-seed1" / "events.ndjson"
    lines = log.read_text().splitlines()
    log.write_text("\n".join(lines[: len(lines) // 2]) + "\n")
    assert main(["replay", str(log)]) == 3
    assert "last valid seq" in capsys.readouterr().err


def test_dry_run_writes_nothing(tmp_path, cfg_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--dry-run", "--out", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["queue"]["capacity"] == 10
    assert not out.exists()


def test_unknown_variant_no_partial_output(tmp_path, cfg_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--variant", "mvq,zzz", "--out", str(out)]) == 2
    assert "unknown variant 'zzz'" in capsys.readouterr().err
    assert not out.exists()


def test_missing_traced_function_named(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    trace.write_text("timestamp_ms,function,payload\n0,linpack,100\n5,pyaes,10\n")
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"workload: {{kind: trace, trace_path: {trace}}}\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "pyaes" in capsys.readouterr().err


def test_dump_plans(tmp_path, cfg_path):
    out = tmp_path / "out"
    main(["run", "--config", str(cfg_path), "--variant", "moevq", "--dump-plans", "--out", str(out)])
    plans = json.loads((out / "moevq-seed1" / "plans.json").read_text())
    assert plans and {"model", "plan"} <= set(plans[0])


def test_explain_config(cfg_path, capsys):
    assert main(["run", "--config", str(cfg_path), "--explain-config"]) == 0
    assert "68 vCPUs" in capsys.readouterr().out
