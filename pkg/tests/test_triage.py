"""TTP rules and threat scoring arithmetic."""

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adhound.events import HostId, LogonSessionKey, ObjectRef, ProcessRef, SystemEvent
from adhound.triage import (
    DEFAULT_CRITICALITY,
    DEFAULT_RULES,
    ScoreConfig,
    TacticTally,
    edge_score,
    load_rules,
    rank_reports,
)


def reference_edge_score(tallies, cfg):
    """Independent evaluation of the per-edge score, written against the
    formula rather than sharing code with the implementation."""
    total = 0.0
    for tactic, weight in cfg.weights.items():
        t = tallies.get(tactic)
        if t is None:
            continue
        base = t.freq * len(t.rule_ids)
        if tactic == "CredentialAccess" and t.lsass:
            base = base * cfg.lsass_bonus
        if base > 0:
            total += math.exp(weight * math.log(base))
    return total


def tally(freq, var, lsass=False):
    return TacticTally(freq=freq, rule_ids={f"r{i}" for i in range(var)},
                       lsass=lsass)


def test_zero_tally_scores_zero():
    cfg = ScoreConfig()
    assert edge_score({}, cfg) == 0.0
    assert edge_score({"Discovery": tally(0, 0)}, cfg) == 0.0


def test_unit_vector_freq4_var2_weight1():
    cfg = ScoreConfig(weights={"Discovery": 1.0})
    assert edge_score({"Discovery": tally(4, 2)}, cfg) == pytest.approx(8.0)


def test_unit_vector_graph_score():
    # an edge scoring 8, one domain-admin principal, criticality 1:
    # 8 * (1 + 1) * 1 == 16
    ts_e, da, crit = 8.0, 1, 1.0
    assert ts_e * (da + 1) * crit == pytest.approx(16.0)


def test_lsass_bonus_multiplies_before_exponent():
    cfg = ScoreConfig(weights={"CredentialAccess": 1.5}, lsass_bonus=2.0)
    plain = edge_score({"CredentialAccess": tally(1, 1)}, cfg)
    boosted = edge_score({"CredentialAccess": tally(1, 1, lsass=True)}, cfg)
    assert plain == pytest.approx(1.0)
    assert boosted == pytest.approx(2.0 ** 1.5)


weights = st.dictionaries(
    st.sampled_from(["Discovery", "CredentialAccess", "PrivilegeEscalation"]),
    st.floats(min_value=0.1, max_value=3.0, allow_nan=False), min_size=1)
tallies_st = st.dictionaries(
    st.sampled_from(["Discovery", "CredentialAccess", "PrivilegeEscalation"]),
    st.builds(tally, st.integers(0, 50), st.integers(0, 10), st.booleans()))


@settings(max_examples=200, deadline=None)
@given(weights=weights, tallies=tallies_st,
       bonus=st.floats(min_value=1.0, max_value=5.0))
def test_randomized_tallies_match_reference(weights, tallies, bonus):
    cfg = ScoreConfig(weights=weights, lsass_bonus=bonus)
    got = edge_score(tallies, cfg)
    want = reference_edge_score(tallies, cfg)
    assert got == pytest.approx(want, rel=1e-9)


def test_default_criticality_ordering():
    c = DEFAULT_CRITICALITY
    assert c["GoldenTicket"] > c["PassTheTicket"] == c["Kerberoasting"] \
        > c["AsRepRoasting"] > c["PassTheHash"]


def test_rank_reports_orders_by_score_then_stability():
    class R:
        def __init__(self, ts_g):
            self.ts_g = ts_g
            self.rank = None
    a, b, c = R(5.0), R(9.0), R(5.0)
    ranked = rank_reports([a, b, c])
    assert ranked[0] is b
    assert ranked[1] is a and ranked[2] is c  # tie keeps original order
    assert [r.rank for r in ranked] == [1, 2, 3]


def sys_event(image, cmdline, kind="ProcessCreate", target_image=None):
    host = HostId(fqdn="ws01.corp.example")
    sess = LogonSessionKey(host=host, boot_epoch=1, local_id="0x5555")
    subj = ProcessRef(host=host, pid=100, start_time=1,
                      image_path=f"c:\\windows\\system32\\{image}")
    if kind == "ProcessAccess":
        obj = ObjectRef(kind="process", process=ProcessRef(
            host=host, pid=200, start_time=1,
            image_path=f"c:\\windows\\system32\\{target_image}"))
    else:
        obj = ObjectRef(kind="process", process=ProcessRef(
            host=host, pid=300, start_time=2,
            image_path=f"c:\\windows\\system32\\{image}"))
    return SystemEvent(event_id="x", time=10, host=host, session=sess,
                       kind=kind, subject_process=subj, object=obj,
                       command_line=cmdline)


def matching_rules(event):
    return [r.rule_id for r in DEFAULT_RULES if r.matches(event)]


def test_rules_hit_attack_tradecraft():
    assert matching_rules(sys_event("net.exe", "net group \"domain admins\" /domain"))
    assert matching_rules(sys_event("netstat.exe", "netstat -ano"))
    assert matching_rules(sys_event("setspn.exe", "setspn -q */*"))
    hits = [r for r in DEFAULT_RULES
            if r.matches(sys_event("wsmprovhost.exe", None,
                                   kind="ProcessAccess", target_image="lsass.exe"))]
    assert hits and all(h.lsass_flag for h in hits)


def test_rules_ignore_benign_lolbin_use():
    assert not matching_rules(sys_event("net.exe", "net view \\\\file01"))
    assert not matching_rules(sys_event("netstat.exe", "netstat -an"))
    assert not matching_rules(sys_event("runas.exe", "runas /user:alice cmd.exe"))


def test_rules_load_from_file(tmp_path):
    path = tmp_path / "rules.json"
    path.write_text(json.dumps([{
        "rule_id": "T-CUSTOM", "tactic": "Discovery",
        "technique": "Custom Sweep", "event_kind": "ProcessCreate",
        "image_pattern": "sweep.exe",
    }]), encoding="utf-8")
    rules = load_rules(path)
    assert len(rules) == 1
    assert rules[0].matches(sys_event("sweep.exe", "sweep"))


def test_unknown_label_warns_and_uses_default_criticality(fourhop_bundle):
    from adhound.triage import score_graph
    res, store, result = fourhop_bundle
    graph = result.graphs[0]
    report = score_graph(graph, store, "SilverTicket",
                         ScoreConfig(default_criticality=1.0))
    assert report.warnings
    assert report.criticality == 1.0
