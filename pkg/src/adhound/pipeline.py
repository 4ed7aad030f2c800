"""End-to-end detection pipeline: stage-1 anomaly scan, then on-demand
stage-2 tracing and scoring for each alert."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .sentinel import SentinelConfig, get_authentication_anomalies
from .store import EventStore
from .tracer import Tracer, TracerConfig
from .triage import (
    DEFAULT_RULES,
    ScoreConfig,
    domain_admin_principals,
    rank_reports,
    score_graph,
)


@dataclass
class RunManifest:
    event_count: int
    alert_count: int
    verdict_count: int
    stage1_wall_ms: float
    stage1_per_alert_ms: list
    stage2_per_alert_ms: list
    stage1_queries: int
    stage2_queries: int
    labels: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "event_count": self.event_count,
            "alert_count": self.alert_count,
            "verdict_count": self.verdict_count,
            "stage1_wall_ms": round(self.stage1_wall_ms, 3),
            "stage1_per_alert_ms": [round(x, 3) for x in self.stage1_per_alert_ms],
            "stage2_per_alert_ms": [round(x, 3) for x in self.stage2_per_alert_ms],
            "stage1_queries": self.stage1_queries,
            "stage2_queries": self.stage2_queries,
            "labels": self.labels,
        }


@dataclass
class DetectionResult:
    alerts: list
    graphs: list       # one per alert, alert order
    reports: list      # scored, ranked
    manifest: RunManifest


def run_detection(store: EventStore, *, sentinel_cfg: SentinelConfig = None,
                  tracer_cfg: TracerConfig = None,
                  score_cfg: ScoreConfig = None,
                  rules=None) -> DetectionResult:
    if rules is None:
        rules = DEFAULT_RULES
    q0 = store.query_count
    t0 = time.perf_counter()
    alerts = get_authentication_anomalies(store, sentinel_cfg)
    stage1_wall = (time.perf_counter() - t0) * 1_000.0
    q1 = store.query_count

    tracer_cfg = tracer_cfg or TracerConfig()
    tracer = Tracer(store, tracer_cfg)
    score_cfg = score_cfg or ScoreConfig()
    graphs = []
    reports = []
    stage2_times = []
    da = None
    for alert in alerts:
        t = time.perf_counter()
        if da is None:
            da = domain_admin_principals(store)
        graph = tracer.trace_alert(alert)
        report = score_graph(graph, store, alert.label, score_cfg, rules,
                             da_principals=da)
        # collapse only after scoring so rule hits pin their nodes open
        if tracer_cfg.collapse_meta:
            graph.collapse_meta_nodes(tracer_cfg.meta_patterns)
        stage2_times.append((time.perf_counter() - t) * 1_000.0)
        graphs.append(graph)
        reports.append(report)
    q2 = store.query_count

    reports = rank_reports(reports)
    labels = {}
    for a in alerts:
        labels[a.label] = labels.get(a.label, 0) + 1
    manifest = RunManifest(
        event_count=len(store),
        alert_count=len(alerts),
        verdict_count=sum(1 for r in reports if r.verdict),
        stage1_wall_ms=stage1_wall,
        stage1_per_alert_ms=[a.elapsed_ms for a in alerts],
        stage2_per_alert_ms=stage2_times,
        stage1_queries=q1 - q0,
        stage2_queries=q2 - q1,
        labels=labels,
    )
    return DetectionResult(alerts=alerts, graphs=graphs, reports=reports,
                           manifest=manifest)
