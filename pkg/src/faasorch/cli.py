"""Command-line experiment runner: ``faasorch run`` and ``faasorch replay``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as C
from .metrics import IntegrityError, PricingConfig, compute_report, report_to_dict, reports_to_csv, score
from .simengine import read_log, run
from .workload import TraceError


def _parse_set(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise C.ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val
    return out


def resolve(args) -> C.ExperimentConfig:
    overrides = _parse_set(args.set)
    if args.variant:
        overrides["variants"] = args.variant
    if args.seed:
        overrides["seeds"] = args.seed
    if args.out:
        overrides["out"] = args.out
    if args.dump_plans:
        overrides["dump_plans"] = True
    return C.load_config(args.config, overrides)


def _cell(job):
    cfg, variant, seed = job
    profiles = C.load_profiles(cfg)
    requests = C.build_requests(cfg, profiles, seed)
    return run(cfg, requests, variant, seed, profiles)


def cmd_run(args) -> int:
    cfg = resolve(args)
    profiles = C.load_profiles(cfg)
    C.validate(cfg, profiles)
    if cfg.workload.kind == "trace":
        C.load_trace(cfg.workload.trace_path, cfg.workload.clock_scale, profiles)
    if args.explain_config:
        print("\n".join(C.explain(cfg)))
        return 0
    if args.dry_run:
        print(json.dumps(C.config_to_dict(cfg), indent=2, sort_keys=True))
        return 0

    jobs = [(cfg, v, s) for v in cfg.variants for s in cfg.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_cell, jobs))
    else:
        results = [_cell(j) for j in jobs]

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        cell = out / f"{res.variant.value}-seed{res.seed}"
        cell.mkdir(exist_ok=True)
        res.log.write(cell / "events.ndjson")
        (cell / "report.csv").write_text(reports_to_csv([res.report]), encoding="utf-8")
        summary = report_to_dict(res.report)
        summary["streaming_cost_micro"] = round(res.streaming_cost * 1_000_000)
        (cell / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        if cfg.dump_plans and res.plans:
            (cell / "plans.json").write_text(json.dumps(res.plans, indent=2) + "\n", encoding="utf-8")

    reports = [r.report for r in results]
    if len(reports) >= 2:
        for rep, s in zip(reports, score(reports, cfg.score_weights)):
            rep.aggregate.overall_score = s
    (out / "comparison.csv").write_text(reports_to_csv(reports), encoding="utf-8")
    for rep in reports:
        a = rep.aggregate
        print(f"{rep.variant:9s} seed={rep.seed:<4d} requests={a.total_requests:<6d} success={a.success_rate:.3f} "
              f"sla={a.sla_rate:.3f} cost={float(a.total_cost):.6f}"
              + ("" if a.overall_score is None else f" score={a.overall_score:.3f}"))
    print(f"wrote {len(results)} cells to {out}")
    return 0


def cmd_replay(args) -> int:
    records = read_log(args.log)
    pricing = PricingConfig(
        args.price_per_gb_s or PricingConfig.price_per_gb_s,
        args.price_per_request or PricingConfig.price_per_request,
    )
    end = records[-1]["detail"]
    report = compute_report(records, end.get("variant", ""), end.get("seed", 0), pricing)
    print(reports_to_csv([report]), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faasorch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every (variant, seed) cell of an experiment")
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--variant", help="comma-separated: baseline,mvq,mevq,moevq")
    p.add_argument("--seed", help="seeds, e.g. 1..5 or 1,4,9")
    p.add_argument("--out", help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. queue.capacity=5")
    p.add_argument("--dump-plans", action="store_true", help="write optimiser models and plans per cell")
    p.add_argument("--dry-run", action="store_true", help="validate and print the resolved config")
    p.add_argument("--explain-config", action="store_true", help="print every setting with its provenance")
    p.add_argument("--jobs", type=int, default=1, help="cells to run in parallel")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="recompute a report from an event log")
    p.add_argument("log")
    p.add_argument("--price-per-gb-s")
    p.add_argument("--price-per-request")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return 3
    except (C.ConfigError, TraceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
