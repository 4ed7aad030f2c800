"""Stage-1 authentication anomaly detection."""

import pytest

from adhound import EventStore, SentinelConfig, get_authentication_anomalies
from adhound.forge import (
    ATTACK_KINDS,
    benign_scenario,
    forge,
    playbook_scenario,
)
from adhound.sentinel import create_high_level_graph
from conftest import build_store


def run_stage1(cfg_kind, seed, **kw):
    res = forge(playbook_scenario(cfg_kind, seed, duration_hours=1.0, **kw))
    return res, get_authentication_anomalies(build_store(res.events))


@pytest.mark.parametrize("kind", sorted(ATTACK_KINDS))
def test_each_playbook_is_labeled_and_covered(kind):
    res, alerts = run_stage1(kind, 2)
    want = set(res.truth.attacks[0]["chain_event_ids"])
    hits = [a for a in alerts if a.label == kind
            and want <= set(a.chain.event_ids)]
    assert hits, f"{kind} not detected: {[(a.label, a.chain.event_ids) for a in alerts]}"


def test_clean_benign_data_raises_no_alerts():
    res = forge(benign_scenario(seed=4, truncation_fraction=0.0))
    alerts = get_authentication_anomalies(build_store(res.events))
    assert alerts == []


def test_truncated_benign_data_raises_false_alerts():
    cfg = playbook_scenario("PassTheHash", 6, duration_hours=2.0,
                            truncation_fraction=0.05)
    cfg.attacks = []
    res = forge(cfg)
    alerts = get_authentication_anomalies(build_store(res.events))
    assert alerts  # incomplete chains look anomalous without stage 2


def test_ntlm_only_legacy_principal_is_not_flagged():
    """A principal that never used Kerberos may legitimately speak NTLM."""
    cfg = playbook_scenario("PassTheHash", 8, duration_hours=1.0)
    cfg.attacks = []
    res = forge(cfg)
    store = build_store(res.events)
    ntlm_users = {e.client.name for e in store.all_auth_events()
                  if e.kind == "NtlmAuth"}
    assert ntlm_users  # the benign mix includes legacy NTLM traffic
    assert get_authentication_anomalies(store) == []


def test_alerts_are_time_ordered_and_deduplicated():
    res, alerts = run_stage1("PassTheHash", 3)
    times = [a.time for a in alerts]
    assert times == sorted(times)
    seen = set()
    for a in alerts:
        ids = frozenset(a.chain.event_ids)
        assert not (ids & seen), "one exchange alerted twice"
        seen |= ids


def test_asrep_roasting_digest_graph_is_two_nodes():
    res, alerts = run_stage1("AsRepRoasting", 2)
    attack_alerts = [a for a in alerts if a.label == "AsRepRoasting"]
    digest = create_high_level_graph(attack_alerts)
    assert len(digest["nodes"]) == 2  # client host and DC only
    assert {n["kind"] for n in digest["nodes"]} == {"host"}


def test_window_config_limits_linking():
    """With a tiny window nothing links, so no multi-event chain can form and
    the scripted anomaly degrades or disappears; with the default it alerts."""
    res = forge(playbook_scenario("PassTheTicket", 2, duration_hours=1.0))
    store = build_store(res.events)
    default = get_authentication_anomalies(store, SentinelConfig())
    assert any(a.label == "PassTheTicket" for a in default)
