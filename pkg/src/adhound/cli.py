"""Command-line entry point.

Subcommands:
  forge   - generate a labeled scenario (events + ground truth)
  ingest  - load event files into the store and report accept/reject counts
  detect  - run the two-stage detection pipeline and write a run directory
  eval    - compare a run directory against ground truth
  export  - convert a structured graph file to DOT

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .baselines import connection_edge_count, logon_edge_count
from .forge import (
    PRESETS,
    ConfigError,
    GroundTruth,
    ScenarioConfig,
    forge as run_forge,
    forge_access_type_cases,
    forge_rdp_reconnect_case,
)
from .metrics import edge_metrics, percentile, stage1_metrics, stage2_metrics
from .pipeline import run_detection
from .sentinel import SentinelConfig
from .store import EventStore
from .tracer import TracerConfig
from .tracer.graph import AttackGraph
from .triage import ScoreConfig, load_rules

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

CASES = {
    "rdp-reconnect": forge_rdp_reconnect_case,
    "access-types": forge_access_type_cases,
}


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_forge(args) -> int:
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        return _fail(f"output directory {out} is not empty (use --force)", EXIT_USAGE)
    try:
        if args.case:
            CASES[args.case](seed=args.seed, out_dir=out)
        else:
            if args.config:
                cfg = ScenarioConfig.from_file(args.config)
                if args.seed is not None:
                    cfg.seed = args.seed
            elif args.preset:
                cfg = PRESETS[args.preset](seed=args.seed if args.seed is not None else 1)
            else:
                return _fail("one of --config, --preset, or --case is required", EXIT_USAGE)
            run_forge(cfg, out)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_DATA)
    print(json.dumps({"out": str(out)}))
    return EXIT_OK


def cmd_ingest(args) -> int:
    store = EventStore()
    totals = {"accepted": 0, "rejected": 0, "duplicates": 0, "violations": []}
    for path in args.events:
        try:
            report = store.ingest(path)
        except OSError as exc:
            return _fail(str(exc), EXIT_DATA)
        totals["accepted"] += report.accepted
        totals["rejected"] += report.rejected
        totals["duplicates"] += report.duplicates
        totals["violations"].extend(
            {"file": str(path), "line": ln, "reason": reason}
            for ln, reason in report.violations
        )
    print(json.dumps(totals, indent=2))
    return EXIT_OK


def _load_store(paths) -> EventStore:
    store = EventStore()
    for path in paths:
        report = store.ingest(path)
        if report.rejected:
            first = report.violations[0]
            raise ValueError(f"{path}: {report.rejected} malformed records "
                             f"(first at line {first[0]}: {first[1]})")
    return store


def cmd_detect(args) -> int:
    out = Path(args.out)
    try:
        store = _load_store(args.events)
    except (OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_DATA)

    sentinel_cfg = SentinelConfig(window_ms=args.window_ms)
    tracer_cfg = TracerConfig(reassign_enabled=not args.no_reassign,
                              collapse_meta=not args.no_collapse)
    score_cfg = ScoreConfig(threshold=args.threshold)
    rules = load_rules(args.rules) if args.rules else None

    result = run_detection(store, sentinel_cfg=sentinel_cfg,
                           tracer_cfg=tracer_cfg, score_cfg=score_cfg,
                           rules=rules)

    out.mkdir(parents=True, exist_ok=True)
    graphs_dir = out / "graphs"
    graphs_dir.mkdir(exist_ok=True)
    with open(out / "alerts.jsonl", "w", encoding="utf-8") as fh:
        for alert in result.alerts:
            fh.write(json.dumps(alert.to_dict(), sort_keys=True) + "\n")
    graph_paths = []
    for alert, graph in zip(result.alerts, result.graphs):
        stem = graphs_dir / alert.alert_id
        with open(f"{stem}.json", "w", encoding="utf-8") as fh:
            json.dump(graph.to_dict(), fh, indent=2, sort_keys=True)
        with open(f"{stem}.dot", "w", encoding="utf-8") as fh:
            fh.write(graph.to_dot())
        graph_paths.append(f"{stem}.json")
    with open(out / "reports.json", "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in result.reports], fh, indent=2, sort_keys=True)
    manifest = result.manifest.to_dict()
    manifest["tool_version"] = __version__
    manifest["input_paths"] = [str(p) for p in args.events]
    manifest["output_paths"] = {
        "alerts": str(out / "alerts.jsonl"),
        "graphs": graph_paths,
        "reports": str(out / "reports.json"),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    positives = sum(1 for r in result.reports if r.verdict)
    print(json.dumps({"alerts": len(result.alerts),
                      "graphs": len(result.graphs),
                      "positive_verdicts": positives,
                      "out": str(out)}))
    return EXIT_OK


def cmd_eval(args) -> int:
    run_dir = Path(args.run)
    try:
        truth = GroundTruth.load(args.truth)
        store = _load_store(args.events)
        with open(run_dir / "alerts.jsonl", "r", encoding="utf-8") as fh:
            alert_dicts = [json.loads(line) for line in fh if line.strip()]
        with open(run_dir / "reports.json", "r", encoding="utf-8") as fh:
            report_dicts = json.load(fh)
        with open(run_dir / "manifest.json", "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        graph_dicts = []
        for path in sorted((run_dir / "graphs").glob("*.json")):
            with open(path, "r", encoding="utf-8") as fh:
                graph_dicts.append(json.load(fh))
    except (OSError, ValueError, KeyError) as exc:
        return _fail(str(exc), EXIT_DATA)

    # Re-run detection to obtain live alert/report objects consistent with the
    # stored run, then evaluate both stages against the ground truth.
    result = run_detection(store)
    if len(result.alerts) != len(alert_dicts):
        return _fail("run directory does not match event files "
                     f"({len(alert_dicts)} stored vs {len(result.alerts)} recomputed alerts)",
                     EXIT_DATA)
    s1 = stage1_metrics(result.alerts, truth)
    s2 = stage2_metrics(result.reports, result.alerts, truth)
    em = edge_metrics(result.graphs, truth)
    s1_lat = manifest.get("stage1_per_alert_ms", [])
    s2_lat = manifest.get("stage2_per_alert_ms", [])
    metrics = {
        "stage1": {"tp": s1.true_positives, "fp": s1.false_positives,
                   "fn": s1.false_negatives, "recall": s1.recall},
        "stage2": {"tp": s2.verdict_tp, "fp": s2.verdict_fp,
                   "fn": s2.verdict_fn,
                   "top_rank_is_attack": s2.top_rank_is_attack},
        "edges": {
            "expected": len(em.expected),
            "recovered": len(em.recovered),
            "missing": sorted(em.missing),
            "extra": sorted(em.extra),
            "precision": em.precision,
            "recall": em.recall,
            "exact": em.exact,
        },
        "baselines": {
            "connection_edges": connection_edge_count(store),
            "logon_edges": logon_edge_count(store),
            "causal_edges": len(em.recovered),
        },
        "timing_ms": {
            "stage1_p50": percentile(s1_lat, 50),
            "stage1_p99": percentile(s1_lat, 99),
            "stage2_p50": percentile(s2_lat, 50),
            "stage2_p99": percentile(s2_lat, 99),
        },
        "stored_reports": len(report_dicts),
        "stored_graphs": len(graph_dicts),
    }
    text = json.dumps(metrics, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        with open(args.graph, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        graph = AttackGraph.from_dict(data)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(str(exc), EXIT_DATA)
    dot = graph.to_dot()
    if args.out:
        Path(args.out).write_text(dot, encoding="utf-8")
    else:
        print(dot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adhound",
        description="Two-stage Active Directory attack detection pipeline.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forge", help="generate a labeled scenario")
    p.add_argument("--config", help="scenario config file (JSON)")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="built-in scenario preset")
    p.add_argument("--case", choices=sorted(CASES),
                   help="built-in focused test case")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true",
                   help="write into a non-empty directory")
    p.set_defaults(func=cmd_forge)

    p = sub.add_parser("ingest", help="validate and count event records")
    p.add_argument("events", nargs="+", help="event record files")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("detect", help="run both detection stages")
    p.add_argument("events", nargs="+", help="event record files")
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--rules", help="TTP rule file (JSON)")
    p.add_argument("--threshold", type=float, default=ScoreConfig().threshold)
    p.add_argument("--window-ms", type=int, default=SentinelConfig().window_ms)
    p.add_argument("--no-reassign", action="store_true",
                   help="disable session reassignment fixups")
    p.add_argument("--no-collapse", action="store_true",
                   help="disable meta-node collapsing")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score a run against ground truth")
    p.add_argument("--run", required=True, help="detect output directory")
    p.add_argument("--truth", required=True, help="ground truth file")
    p.add_argument("--events", nargs="+", required=True,
                   help="event record files the run was produced from")
    p.add_argument("--out", help="write metrics file here as well")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="convert a graph file to DOT")
    p.add_argument("graph", help="structured graph file (JSON)")
    p.add_argument("--out", help="DOT output path (default: stdout)")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to our usage code.
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
