"""End-to-end pipeline wiring: manifest bookkeeping and laziness."""

from adhound import run_detection
from adhound.baselines import connection_edge_count, domain_hosts, logon_edge_count
from adhound.forge import benign_scenario, forge
from conftest import build_store


def test_manifest_counts_are_consistent(fourhop_bundle):
    _, store, result = fourhop_bundle
    m = result.manifest
    assert m.event_count == len(store.events)
    assert m.alert_count == len(result.alerts) == len(result.graphs)
    assert m.verdict_count == sum(1 for r in result.reports if r.verdict)
    assert len(m.stage1_per_alert_ms) == m.alert_count
    assert len(m.stage2_per_alert_ms) == m.alert_count
    assert all(t >= 0 for t in m.stage1_per_alert_ms + m.stage2_per_alert_ms)
    assert sum(m.labels.values()) == m.alert_count


def test_zero_alerts_means_zero_stage2_queries():
    res = forge(benign_scenario(seed=3, truncation_fraction=0.0))
    store = build_store(res.events)
    result = run_detection(store)
    assert result.alerts == []
    assert result.graphs == []
    assert result.manifest.stage2_queries == 0


def test_reports_are_ranked_descending(mixed_bundle):
    _, _, result = mixed_bundle
    ranked = sorted(result.reports, key=lambda r: r.rank)
    scores = [r.ts_g for r in ranked]
    assert scores == sorted(scores, reverse=True)
    assert [r.rank for r in ranked] == list(range(1, len(ranked) + 1))


def test_baselines_count_more_edges_than_causal(fourhop_bundle):
    _, store, result = fourhop_bundle
    causal = sum(len(g.cross_edges) for g in result.graphs)
    hosts = domain_hosts(store)
    assert len(hosts) > 2
    assert connection_edge_count(store) > causal
    assert logon_edge_count(store) > causal
