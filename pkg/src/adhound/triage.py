"""TTP rule matching and threat scoring for traced attack graphs.

Every cross-machine edge is scored from the tactics observed upstream of it:
for each tactic the term is (frequency x variety) raised to the tactic
weight, with an empty tally contributing zero and credential access against
the credential-managing process boosting its base. The graph score sums the
edge scores, each amplified by domain-admin involvement and by the
criticality of the triggering anomaly label.
"""

from __future__ import annotations

import json
import time as _time
from dataclasses import dataclass, field
from fnmatch import fnmatch
from typing import Optional

from .events import HostId, LogonSessionKey, SystemEvent
from .forge.truth import dict_to_triple
from .store import EventStore
from .tracer.graph import AttackGraph, proc_node_id

TACTICS = ("Discovery", "CredentialAccess", "PrivilegeEscalation")

LSASS_IMAGE = "lsass.exe"


@dataclass(frozen=True)
class TtpRule:
    rule_id: str
    tactic: str
    technique: str
    event_kind: str
    image_pattern: str = "*"            # matched on created/target image name
    cmdline_substrings: tuple = ()      # all must appear, case-insensitive
    target_image_pattern: Optional[str] = None
    lsass_flag: bool = False

    def matches(self, event: SystemEvent) -> bool:
        if event.kind != self.event_kind:
            return False
        if event.kind == "ProcessCreate":
            proc = event.object.process
        elif event.kind == "ProcessAccess":
            proc = event.object.process
        else:
            proc = event.subject_process
        if proc is None or not fnmatch(proc.image_name, self.image_pattern):
            return False
        if self.target_image_pattern is not None:
            if proc is None or not fnmatch(proc.image_name,
                                           self.target_image_pattern):
                return False
        if self.cmdline_substrings:
            cmd = (event.command_line or "").lower()
            if not all(s.lower() in cmd for s in self.cmdline_substrings):
                return False
        return True


DEFAULT_RULES = (
    TtpRule("D-net-group", "Discovery", "T1069.002", "ProcessCreate",
            "net.exe", ("net group", "/domain")),
    TtpRule("D-net-user", "Discovery", "T1087.002", "ProcessCreate",
            "net.exe", ("net user", "/domain")),
    TtpRule("D-net-view", "Discovery", "T1135", "ProcessCreate",
            "net.exe", ("net view", "/domain")),
    TtpRule("D-netstat", "Discovery", "T1049", "ProcessCreate",
            "netstat.exe", ("-ano",)),
    TtpRule("D-setspn", "Discovery", "T1558.003", "ProcessCreate",
            "setspn.exe", ("-q",)),
    TtpRule("D-nltest", "Discovery", "T1482", "ProcessCreate",
            "nltest.exe", ("/dclist",)),
    TtpRule("D-dsquery", "Discovery", "T1087.002", "ProcessCreate",
            "dsquery.exe"),
    TtpRule("D-whoami-priv", "Discovery", "T1033", "ProcessCreate",
            "whoami.exe", ("/priv",)),
    TtpRule("C-lsass-access", "CredentialAccess", "T1003.001",
            "ProcessAccess", LSASS_IMAGE, lsass_flag=True),
    TtpRule("C-reg-sam", "CredentialAccess", "T1003.002", "ProcessCreate",
            "reg.exe", ("save", "sam")),
    TtpRule("C-ntdsutil", "CredentialAccess", "T1003.003", "ProcessCreate",
            "ntdsutil.exe"),
    TtpRule("C-comsvcs", "CredentialAccess", "T1003.001", "ProcessCreate",
            "rundll32.exe", ("comsvcs", "minidump")),
    TtpRule("C-sekurlsa", "CredentialAccess", "T1003.001", "ProcessCreate",
            "*", ("sekurlsa",)),
    TtpRule("C-vaultcmd", "CredentialAccess", "T1555.004", "ProcessCreate",
            "vaultcmd.exe"),
)


def load_rules(path) -> tuple:
    """Rules from a JSON file: a list of objects with TtpRule field names."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    rules = []
    for rec in data:
        rec = dict(rec)
        rec["cmdline_substrings"] = tuple(rec.get("cmdline_substrings", ()))
        rules.append(TtpRule(**rec))
    return tuple(rules)


DEFAULT_CRITICALITY = {
    "GoldenTicket": 4.0,
    "PassTheTicket": 2.0,
    "Kerberoasting": 2.0,
    "AsRepRoasting": 1.5,
    "PassTheHash": 1.0,
}


@dataclass
class ScoreConfig:
    weights: dict = field(default_factory=lambda: {
        "CredentialAccess": 1.5,
        "Discovery": 1.0,
        "PrivilegeEscalation": 1.0,
    })
    lsass_bonus: float = 2.0
    criticality: dict = field(default_factory=lambda: dict(DEFAULT_CRITICALITY))
    default_criticality: float = 1.0
    threshold: float = 10.0


@dataclass
class TacticTally:
    freq: int = 0
    rule_ids: set = field(default_factory=set)
    lsass: bool = False

    @property
    def var(self) -> int:
        return len(self.rule_ids)

    def add(self, rule: TtpRule) -> None:
        self.freq += 1
        self.rule_ids.add(rule.rule_id)
        if rule.lsass_flag:
            self.lsass = True

    def to_dict(self) -> dict:
        return {"freq": self.freq, "var": self.var,
                "rule_ids": sorted(self.rule_ids), "lsass": self.lsass}


def edge_score(tallies: dict, cfg: ScoreConfig) -> float:
    """Sum over tactics of (freq x var [x bonus])^weight, with 0^w == 0."""
    total = 0.0
    for tactic, weight in cfg.weights.items():
        tally = tallies.get(tactic)
        if tally is None or tally.freq == 0 or tally.var == 0:
            continue
        base = float(tally.freq * tally.var)
        if tactic == "CredentialAccess" and tally.lsass:
            base *= cfg.lsass_bonus
        total += base ** weight
    return total


@dataclass
class ScoredEdge:
    edge: dict
    tallies: dict
    ts_e: float
    domain_admin: bool

    def to_dict(self) -> dict:
        return {
            "edge": self.edge,
            "tallies": {k: v.to_dict() for k, v in self.tallies.items()},
            "ts_e": self.ts_e,
            "domain_admin": self.domain_admin,
        }


@dataclass
class ScoredReport:
    alert_id: str
    label: str
    ts_g: float
    criticality: float
    verdict: bool
    scored_edges: list
    rank: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "label": self.label,
            "ts_g": self.ts_g,
            "criticality": self.criticality,
            "verdict": self.verdict,
            "rank": self.rank,
            "warnings": self.warnings,
            "edges": [e.to_dict() for e in self.scored_edges],
        }


def domain_admin_principals(store: EventStore) -> set:
    """Principals that ever logged on with special privileges."""
    out = set()
    for fqdn in list(store.by_host_logon):
        for l in store.host_logon_events(fqdn):
            if l.kind == "special_privileges":
                out.add((l.principal.realm, l.principal.name))
    return out


def _session_key_from_dict(d: dict) -> LogonSessionKey:
    return LogonSessionKey(host=HostId(fqdn=d["host_fqdn"]),
                           boot_epoch=d["boot_epoch"],
                           local_id=d["local_id"])


def _ancestors(graph: AttackGraph, src_triple: tuple) -> set:
    """Session triples upstream of the edge source: the source itself plus
    everything reachable backward over cross edges and escalations."""
    preds = {}
    for e in graph.cross_edges:
        preds.setdefault(dict_to_triple(e["dst_session"]), set()).add(
            dict_to_triple(e["src_session"]))
    for m in graph.escalations:
        preds.setdefault(dict_to_triple(m["dst_session"]), set()).add(
            dict_to_triple(m["src_session"]))
    out = set()
    frontier = [src_triple]
    while frontier:
        t = frontier.pop()
        if t in out:
            continue
        out.add(t)
        frontier.extend(preds.get(t, ()))
    return out


def score_graph(graph: AttackGraph, store: EventStore, label: str,
                cfg: ScoreConfig = None, rules=DEFAULT_RULES,
                da_principals: set = None) -> ScoredReport:
    cfg = cfg or ScoreConfig()
    if da_principals is None:
        da_principals = domain_admin_principals(store)
    warnings = []
    crit = cfg.criticality.get(label)
    if crit is None:
        crit = cfg.default_criticality
        warnings.append(f"no criticality configured for label {label!r}; "
                        f"using default {crit}")

    session_hits: dict[tuple, list] = {}

    def hits_for(triple: tuple) -> list:
        if triple not in session_hits:
            key = _session_key_from_dict({
                "host_fqdn": triple[0], "boot_epoch": triple[1],
                "local_id": triple[2]})
            found = []
            for ev in store.session_events(key):
                if not isinstance(ev, SystemEvent):
                    continue
                for rule in rules:
                    if rule.matches(ev):
                        found.append((ev, rule))
            session_hits[triple] = found
        return session_hits[triple]

    scored_edges = []
    ts_g = 0.0
    alert_id = graph.alert_ids[0] if graph.alert_ids else ""
    for edge in graph.cross_edges:
        src_triple = dict_to_triple(edge["src_session"])
        tallies = {t: TacticTally() for t in TACTICS}
        for triple in _ancestors(graph, src_triple):
            for ev, rule in hits_for(triple):
                if ev.time <= edge["time"]:
                    tallies[rule.tactic].add(rule)
                    _mark_hit(graph, ev)
            for mark in graph.escalations:
                if (dict_to_triple(mark["dst_session"]) == triple
                        and mark["time"] <= edge["time"]):
                    tallies["PrivilegeEscalation"].freq += 1
                    tallies["PrivilegeEscalation"].rule_ids.add(mark["reason"])
        ts_e = edge_score(tallies, cfg)
        pr = edge["principal"]
        da = (pr["realm"], pr["name"]) in da_principals
        scored_edges.append(ScoredEdge(edge=edge, tallies=tallies, ts_e=ts_e,
                                       domain_admin=da))
        ts_g += ts_e * ((1 if da else 0) + 1) * crit
    return ScoredReport(alert_id=alert_id, label=label, ts_g=ts_g,
                        criticality=crit, verdict=ts_g >= cfg.threshold,
                        scored_edges=scored_edges, warnings=warnings)


def _mark_hit(graph: AttackGraph, ev: SystemEvent) -> None:
    """Flag nodes that matched a rule so meta collapse never folds them."""
    for proc in (ev.subject_process, ev.object.process):
        if proc is not None:
            node = graph.nodes.get(proc_node_id(proc))
            if node is not None:
                node["ttp_hit"] = True


def rank_reports(reports: list) -> list:
    """Descending score; ties broken by earliest alert id order."""
    ordered = sorted(enumerate(reports),
                     key=lambda ir: (-ir[1].ts_g, ir[0]))
    out = []
    for rank, (_, report) in enumerate(ordered, 1):
        report.rank = rank
        out.append(report)
    return out
