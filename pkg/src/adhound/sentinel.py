"""Stage 1: lightweight authentication anomaly detection.

Kerberos and NTLM events from the domain controller are linked into per-logon
chains. A complete chain runs ticket-granting-ticket request, ticket issue,
service-ticket request, service-ticket issue, service-ticket use; anything
that deviates from that shape, or falls back to NTLM for a principal with
Kerberos history, is one of the credential-abuse patterns this stage flags.
"""

from __future__ import annotations

import time as _time
from bisect import bisect_left, bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .events import AuthEvent, HostId, PrincipalId
from .store import EventStore

DEFAULT_WINDOW_MS = 600_000  # 10 simulated minutes
DEFAULT_NTLM_LINK_MS = 60_000

ANOMALY_LABELS = (
    "PassTheHash",
    "PassTheTicket",
    "GoldenTicket",
    "AsRepRoasting",
    "Kerberoasting",
)


@dataclass
class SentinelConfig:
    window_ms: int = DEFAULT_WINDOW_MS
    ntlm_link_ms: int = DEFAULT_NTLM_LINK_MS
    # flag service-ticket use whose issuing TGS exchange is absent; off by
    # default because benign log loss produces the same shape
    enable_silver_ticket: bool = False


@dataclass
class AuthChain:
    """One linked authentication exchange."""

    events: list = field(default_factory=list)  # AuthEvent, time ordered

    @property
    def time(self) -> int:
        return min(e.time for e in self.events)

    @property
    def event_ids(self) -> list:
        return [e.event_id for e in self.events]

    def kinds(self) -> set:
        return {e.kind for e in self.events}

    @property
    def used_ntlm(self) -> bool:
        return "NtlmAuth" in self.kinds()

    @property
    def has_as(self) -> bool:
        return bool(self.kinds() & {"AsRequest", "AsReply"})

    @property
    def has_tgs(self) -> bool:
        return bool(self.kinds() & {"TgsRequest", "TgsReply"})

    @property
    def has_service_use(self) -> bool:
        return "ServiceTicketUse" in self.kinds()

    @property
    def client(self) -> PrincipalId:
        return self.events[0].client

    @property
    def client_host(self) -> HostId:
        return self.events[0].client_host

    @property
    def presented_tgts(self) -> list:
        """TGT ids presented to the ticket-granting service by this chain
        without the issuing exchange being part of the chain."""
        issued = {e.tgt_id for e in self.events
                  if e.kind == "AsReply" and e.tgt_id}
        return [e.tgt_id for e in self.events
                if e.kind == "TgsRequest" and e.tgt_id
                and e.tgt_id not in issued]

    @property
    def logon_guids(self) -> list:
        seen = []
        for e in self.events:
            if e.logon_guid and e.logon_guid not in seen:
                seen.append(e.logon_guid)
        return seen


@dataclass
class Alert:
    alert_id: str
    time: int
    label: str
    chain: AuthChain
    elapsed_ms: float = 0.0

    @property
    def client(self) -> PrincipalId:
        return self.chain.client

    @property
    def client_host(self) -> HostId:
        return self.chain.client_host

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "time": self.time,
            "label": self.label,
            "client": self.client.to_record(),
            "client_host": self.client_host.to_record(),
            "chain_event_ids": self.chain.event_ids,
            "logon_guids": self.chain.logon_guids,
            # elapsed_ms is deliberately not serialized: alert records must be
            # byte-identical across runs; timings live in the run manifest
        }


class _AuthIndex:
    """One-pass lookup structures over the DC auth stream."""

    def __init__(self, events: list):
        self.by_guid = defaultdict(list)
        self.as_pair = defaultdict(list)     # (client, host) -> As* events
        self.tgt_issue = defaultdict(list)   # tgt_id -> AsReply
        self.tgt_use = defaultdict(list)     # tgt_id -> TgsRequest
        self.tgs_pair = defaultdict(list)    # (client, host, spn) -> Tgs* events
        self.svc_use = defaultdict(list)     # (client, spn) -> ServiceTicketUse
        self.ntlm = defaultdict(list)        # (client, host) -> NtlmAuth
        self.kerb_times = defaultdict(list)  # client -> times of kerberos auth
        for e in events:  # events arrive time ordered
            if e.logon_guid:
                self.by_guid[e.logon_guid].append(e)
            c = (e.client, e.client_host)
            if e.kind in ("AsRequest", "AsReply"):
                self.as_pair[c].append(e)
                if e.kind == "AsReply" and e.tgt_id:
                    self.tgt_issue[e.tgt_id].append(e)
            elif e.kind in ("TgsRequest", "TgsReply"):
                self.tgs_pair[(e.client, e.client_host, e.target_service)].append(e)
                if e.kind == "TgsRequest" and e.tgt_id:
                    self.tgt_use[e.tgt_id].append(e)
            elif e.kind == "ServiceTicketUse":
                self.svc_use[(e.client, e.target_service)].append(e)
            elif e.kind == "NtlmAuth":
                self.ntlm[c].append(e)
            if e.kind != "NtlmAuth":
                self.kerb_times[e.client].append(e.time)

        # freeze time arrays for windowed bisect lookups
        self._times = {}
        for table in (self.as_pair, self.tgs_pair, self.svc_use, self.ntlm):
            for key, evs in table.items():
                self._times[id(evs)] = [e.time for e in evs]

    def kerberos_history_before(self, client: PrincipalId, t: int) -> bool:
        times = self.kerb_times.get(client)
        return bool(times) and times[0] < t

    def _window(self, events: list, t: int, window: int) -> list:
        times = self._times.get(id(events))
        if times is None:
            return [e for e in events if abs(e.time - t) <= window]
        lo = bisect_left(times, t - window)
        hi = bisect_right(times, t + window)
        return events[lo:hi]

    def _nearest(self, events: list, t: int, want: str, window: int) -> list:
        best, dist = None, None
        for e in self._window(events, t, window):
            if e.kind != want:
                continue
            d = abs(e.time - t)
            if dist is None or d < dist:
                best, dist = e, d
        return [best] if best is not None else []

    def neighbors(self, e: AuthEvent, window: int, ntlm_window: int) -> list:
        out = []
        if e.logon_guid:
            out.extend(self.by_guid.get(e.logon_guid, ()))
        c = (e.client, e.client_host)
        if e.kind == "AsRequest":
            out.extend(self._nearest(self.as_pair[c], e.time, "AsReply", window))
        elif e.kind == "AsReply":
            out.extend(self._nearest(self.as_pair[c], e.time, "AsRequest", window))
            if e.tgt_id:
                out.extend(u for u in self.tgt_use.get(e.tgt_id, ())
                           if 0 <= u.time - e.time <= window)
        elif e.kind == "TgsRequest":
            if e.tgt_id:
                out.extend(i for i in self.tgt_issue.get(e.tgt_id, ())
                           if 0 <= e.time - i.time <= window)
            pair = self.tgs_pair[(e.client, e.client_host, e.target_service)]
            out.extend(self._nearest(pair, e.time, "TgsReply", window))
        elif e.kind == "TgsReply":
            pair = self.tgs_pair[(e.client, e.client_host, e.target_service)]
            out.extend(self._nearest(pair, e.time, "TgsRequest", window))
            use = self.svc_use.get((e.client, e.target_service), ())
            out.extend(self._nearest(use, e.time, "ServiceTicketUse", window))
        elif e.kind == "ServiceTicketUse":
            pair = self.tgs_pair[(e.client, e.client_host, e.target_service)]
            out.extend(self._nearest(pair, e.time, "TgsReply", window))
        elif e.kind == "NtlmAuth":
            out.extend(n for n in self._window(self.ntlm[c], e.time, ntlm_window)
                       if n is not e)
        return out


def build_chain(anchor: AuthEvent, index: _AuthIndex, cfg: SentinelConfig) -> AuthChain:
    """Link the anchor's full exchange by fixed-point expansion over the
    pairwise linking rules."""
    seen = {id(anchor)}
    frontier = [anchor]
    events = [anchor]
    while frontier:
        e = frontier.pop()
        for n in index.neighbors(e, cfg.window_ms, cfg.ntlm_link_ms):
            if id(n) not in seen:
                seen.add(id(n))
                events.append(n)
                frontier.append(n)
    events.sort(key=lambda e: (e.time, e.event_id))
    return AuthChain(events=events)


def classify_chain(chain: AuthChain, index: _AuthIndex, store: EventStore,
                   cfg: SentinelConfig) -> Optional[str]:
    """Map a linked chain to its anomaly label, or None when benign."""
    if chain.used_ntlm:
        if index.kerberos_history_before(chain.client, chain.time):
            return "PassTheHash"
        return None  # NTLM-only principals are legacy, not anomalous
    if chain.has_tgs and not chain.has_as:
        # service-ticket request with no visible TGT issue
        presented = chain.presented_tgts
        if presented and all(store.tgt_was_issued(t) for t in presented):
            return "PassTheTicket"
        return "GoldenTicket"
    if chain.has_as and not chain.has_tgs:
        return "AsRepRoasting"
    if chain.has_tgs and not chain.has_service_use:
        return "Kerberoasting"
    if cfg.enable_silver_ticket and chain.has_service_use and not chain.has_tgs:
        return "SilverTicket"
    return None


def get_authentication_anomalies(store: EventStore,
                                 cfg: SentinelConfig = None) -> list:
    """Run stage 1 over the whole store; returns time-ordered alerts."""
    cfg = cfg or SentinelConfig()
    auth_events = store.all_auth_events()
    index = _AuthIndex(auth_events)
    alerts = []
    consumed = set()
    for anchor in auth_events:
        if anchor.event_id in consumed:
            continue
        t_start = _time.perf_counter()
        chain = build_chain(anchor, index, cfg)
        consumed.update(chain.event_ids)
        label = classify_chain(chain, index, store, cfg)
        elapsed = (_time.perf_counter() - t_start) * 1_000.0
        if label is not None:
            alerts.append(Alert(alert_id="", time=chain.time, label=label,
                                chain=chain, elapsed_ms=elapsed))
    alerts.sort(key=lambda a: a.time)
    for i, alert in enumerate(alerts, 1):
        alert.alert_id = f"A{i:03d}"
    return alerts


def create_high_level_graph(alerts: list) -> dict:
    """Host-level digest of the flagged chains: which host the flagged
    principal authenticated from, against which DC and services. A minimal
    AS-only chain digests to exactly {client host, DC}."""
    nodes = {}
    edges = []

    def add_node(key, kind, label):
        if key not in nodes:
            nodes[key] = {"id": key, "kind": kind, "label": label}
        return key

    for alert in alerts:
        h = add_node(f"host:{alert.client_host.fqdn}", "host",
                     alert.client_host.fqdn)
        dc = add_node(f"host:{alert.chain.events[0].dc_host.fqdn}", "host",
                      alert.chain.events[0].dc_host.fqdn)
        edges.append({"src": h, "dst": dc, "label": alert.label,
                      "principal": alert.client.to_record(),
                      "alert_id": alert.alert_id, "time": alert.time,
                      "event_ids": alert.chain.event_ids})
        for e in alert.chain.events:
            if e.target_service:
                s = add_node(f"service:{e.target_service}", "service",
                             e.target_service)
                edges.append({"src": h, "dst": s, "label": e.kind,
                              "principal": alert.client.to_record(),
                              "alert_id": alert.alert_id, "time": e.time,
                              "event_ids": [e.event_id]})
    return {"nodes": list(nodes.values()), "edges": edges}
