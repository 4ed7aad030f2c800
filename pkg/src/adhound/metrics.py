"""Detection metrics against forged ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .forge.truth import GroundTruth, dict_to_triple


def percentile(values: list, p: float) -> float:
    if not values:
        return 0.0
    xs = sorted(values)
    k = (len(xs) - 1) * p / 100.0
    lo = math.floor(k)
    hi = math.ceil(k)
    if lo == hi:
        return float(xs[int(k)])
    return xs[lo] + (xs[hi] - xs[lo]) * (k - lo)


@dataclass
class Stage1Metrics:
    true_positives: int
    false_negatives: int
    false_positives: int
    matched: dict = field(default_factory=dict)  # attack kind -> [alert ids]

    @property
    def recall(self) -> float:
        denom = self.true_positives + self.false_negatives
        return self.true_positives / denom if denom else 1.0


def stage1_metrics(alerts: list, truth: GroundTruth) -> Stage1Metrics:
    """An alert covers an attack iff it carries the right label and its chain
    contains the scripted anomalous exchange; an alert disjoint from all
    attack events is a false positive."""
    matched = {}
    tp = fn = 0
    for attack in truth.attacks:
        want = set(attack["chain_event_ids"])
        hits = [a.alert_id for a in alerts
                if a.label == attack["kind"]
                and want <= set(a.chain.event_ids)]
        matched[attack["kind"]] = hits
        if hits:
            tp += 1
        else:
            fn += 1
    fp = sum(1 for a in alerts
             if not (set(a.chain.event_ids) & truth.attack_event_ids))
    return Stage1Metrics(true_positives=tp, false_negatives=fn,
                         false_positives=fp, matched=matched)


@dataclass
class EdgeMetrics:
    expected: set
    recovered: set

    @property
    def missing(self) -> set:
        return self.expected - self.recovered

    @property
    def extra(self) -> set:
        return self.recovered - self.expected

    @property
    def exact(self) -> bool:
        return self.expected == self.recovered

    @property
    def precision(self) -> float:
        return (len(self.expected & self.recovered) / len(self.recovered)
                if self.recovered else 1.0)

    @property
    def recall(self) -> float:
        return (len(self.expected & self.recovered) / len(self.expected)
                if self.expected else 1.0)


def edge_triple(edge: dict) -> tuple:
    return (dict_to_triple(edge["src_session"]),
            dict_to_triple(edge["dst_session"]),
            edge["access_type"])


def edge_metrics(graphs: list, truth: GroundTruth) -> EdgeMetrics:
    recovered = set()
    for g in graphs:
        recovered.update(edge_triple(e) for e in g.cross_edges)
    expected = {edge_triple(e) for e in truth.causal_cross_machine_edges}
    return EdgeMetrics(expected=expected, recovered=recovered)


@dataclass
class Stage2Metrics:
    attack_alert_ids: set
    verdict_tp: int
    verdict_fp: int
    verdict_fn: int
    top_rank_is_attack: bool


def stage2_metrics(reports: list, alerts: list, truth: GroundTruth) -> Stage2Metrics:
    attack_ids = set()
    for a in alerts:
        if set(a.chain.event_ids) & truth.attack_event_ids:
            attack_ids.add(a.alert_id)
    tp = fp = fn = 0
    for r in reports:
        if r.alert_id in attack_ids:
            if r.verdict:
                tp += 1
            else:
                fn += 1
        elif r.verdict:
            fp += 1
    ranked = sorted(reports, key=lambda r: r.rank)
    top_ok = bool(ranked) and ranked[0].alert_id in attack_ids
    return Stage2Metrics(attack_alert_ids=attack_ids, verdict_tp=tp,
                         verdict_fp=fp, verdict_fn=fn,
                         top_rank_is_attack=top_ok)
