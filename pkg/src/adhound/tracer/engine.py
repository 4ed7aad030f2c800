"""Stage 2: on-demand cross-machine provenance tracing.

Execution is partitioned by logon session instead of by process. Starting
from the sessions implicated by a stage-1 alert, the tracer expands each
session into its linked cluster (elevation twins, virtual byproduct sessions,
backward slices of the predefined service sessions), fixes up session
attribution (desktop reconnect windows, web-shell slices of the service
session), and hops across machines only where a network connection, a logon
event and a shared authentication exchange all agree.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_left, bisect_right
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

from ..events import (
    AuthEvent,
    LogonEvent,
    LogonSessionKey,
    SystemEvent,
    integrity_rank,
)
from ..store import EventStore, QueryFilter
from .fingerprints import (
    DEFAULT_FINGERPRINTS,
    SessionObservables,
    classify,
    spn_prefix,
)
from .graph import DEFAULT_META_PATTERNS, AttackGraph

DEFAULT_HOP_WINDOW_MS = 10_000
WEB_BROKER_IMAGES = frozenset({"w3wp.exe"})


def triple_of(sess: LogonSessionKey) -> tuple:
    return (sess.host.fqdn, sess.boot_epoch, sess.local_id)


@dataclass
class TracerConfig:
    hop_window_ms: int = DEFAULT_HOP_WINDOW_MS
    reassign_enabled: bool = True   # desktop reconnect window reattribution
    carve_enabled: bool = True      # web-shell slices of the service session
    link_enabled: bool = True       # twins / byproducts / backward slices
    collapse_meta: bool = True
    fingerprints: tuple = DEFAULT_FINGERPRINTS
    meta_patterns: tuple = DEFAULT_META_PATTERNS


@dataclass
class SessionInfo:
    key: LogonSessionKey
    host: str
    events: list = field(default_factory=list)   # system events, post-fixup
    logons: list = field(default_factory=list)
    first_logon: Optional[LogonEvent] = None
    predefined: bool = False
    carved: bool = False
    virtual: bool = False
    root_proc: object = None
    creator_proc: object = None
    creator_session: Optional[tuple] = None
    twins: list = field(default_factory=list)       # triples
    byproducts: list = field(default_factory=list)  # triples
    access_type: Optional[str] = None


class SessionModel:
    """Session-level view of the whole store, built once per trace run."""

    def __init__(self, store: EventStore, cfg: TracerConfig):
        self.store = store
        self.cfg = cfg
        self.sessions: dict[tuple, SessionInfo] = {}
        self.known_hosts: set = set()
        self.creation: dict = {}          # proc node_key -> ProcessCreate event
        self.guid_auth: dict = defaultdict(list)  # guid -> [AuthEvent]
        self.windows: list = []           # reconnect reattribution windows
        self.carves: list = []            # web-shell slices
        self.children: dict = defaultdict(list)   # creator triple -> [triples]
        self.claims: dict = defaultdict(list)     # connect event_id -> [logons]
        self.claimed_by: dict = {}        # logon event_id -> connect event
        self.connect_session: dict = {}   # connect event_id -> owner triple
        self.connects_of: dict = defaultdict(list)  # triple -> [connects]
        self._build()

    # -- construction ---------------------------------------------------------

    def _info(self, key: LogonSessionKey) -> SessionInfo:
        t = triple_of(key)
        info = self.sessions.get(t)
        if info is None:
            info = SessionInfo(key=key, host=key.host.fqdn,
                               predefined=key.is_predefined())
            self.sessions[t] = info
        return info

    def _build(self) -> None:
        events = self.store.query(QueryFilter())
        connects = []
        for e in events:
            if isinstance(e, AuthEvent):
                self.known_hosts.add(e.dc_host.fqdn)
                if e.logon_guid:
                    self.guid_auth[e.logon_guid].append(e)
                continue
            self.known_hosts.add(e.host.fqdn)
            info = self._info(e.session)
            if isinstance(e, LogonEvent):
                info.logons.append(e)
            else:
                info.events.append(e)
                if e.kind == "ProcessCreate" and e.object.process is not None:
                    self.creation[e.object.process.node_key()] = e
                elif e.kind == "NetworkConnect":
                    connects.append(e)
        for t, info in self.sessions.items():
            for l in info.logons:
                if l.kind in ("logon", "reconnect"):
                    info.first_logon = l
                    info.virtual = l.principal.kind == "virtual"
                    break
        if self.cfg.carve_enabled:
            self._carve_web_slices()
        if self.cfg.reassign_enabled:
            self._reassign_reconnect_windows()
        self._resolve_roots()
        if self.cfg.link_enabled:
            self._link_twins()
            self._link_byproducts()
        self._build_hops(connects)
        for t, info in self.sessions.items():
            info.access_type = self._classify(info)

    def _carve_web_slices(self) -> None:
        for t, info in list(self.sessions.items()):
            if not info.predefined:
                continue
            roots = [e for e in info.events
                     if e.kind == "ProcessCreate" and e.object.process is not None
                     and e.subject_process.image_name in WEB_BROKER_IMAGES]
            for root_ev in roots:
                subtree = {root_ev.object.process.node_key()}
                moved = []
                rest = []
                for e in info.events:
                    if e is root_ev:
                        rest.append(e)
                        continue
                    if e.subject_process.node_key() in subtree:
                        moved.append(e)
                        if (e.kind == "ProcessCreate"
                                and e.object.process is not None):
                            subtree.add(e.object.process.node_key())
                    else:
                        rest.append(e)
                if not moved:
                    continue
                digest = hashlib.sha256(
                    root_ev.event_id.encode()).hexdigest()[:8]
                key = LogonSessionKey(host=root_ev.host, boot_epoch=t[1],
                                      local_id=f"0xweb{digest}")
                carved = self._info(key)
                carved.carved = True
                carved.events = moved
                carved.root_proc = root_ev.object.process
                carved.creator_proc = root_ev.subject_process
                carved.creator_session = t
                info.events = rest
                self.carves.append({
                    "session": triple_of(key),
                    "source_session": t,
                    "root_event_id": root_ev.event_id,
                    "event_ids": [e.event_id for e in moved],
                })

    def _reassign_reconnect_windows(self) -> None:
        reconnects = []
        for t, info in self.sessions.items():
            for l in info.logons:
                if l.kind == "reconnect" and l.desktop_id:
                    reconnects.append((t, l))
        for t_new, r in reconnects:
            victim = None
            for t_old, info in self.sessions.items():
                if t_old == t_new or info.host != r.host.fqdn:
                    continue
                if not any(l.desktop_id == r.desktop_id for l in info.logons):
                    continue
                if any(l.kind == "disconnect" and l.time <= r.time
                       for l in info.logons):
                    victim = (t_old, info)
                    break
            if victim is None:
                continue
            t_old, old_info = victim
            cutoffs = [l.time for l in old_info.logons
                       if l.kind in ("disconnect", "reconnect")
                       and l.time > r.time]
            end = min(cutoffs) if cutoffs else float("inf")
            moved = [e for e in old_info.events if r.time <= e.time < end]
            old_info.events = [e for e in old_info.events
                               if not (r.time <= e.time < end)]
            new_info = self.sessions[t_new]
            new_info.events = sorted(new_info.events + moved,
                                     key=lambda e: e.time)
            self.windows.append({
                "session": t_old,
                "owner_session": t_new,
                "start": r.time,
                "end": end,
                "event_ids": [e.event_id for e in moved],
            })

    def _resolve_roots(self) -> None:
        for t, info in self.sessions.items():
            if info.predefined or info.carved:
                continue
            for e in info.events:
                p = e.subject_process
                created = self.creation.get(p.node_key())
                if created is None:
                    info.root_proc = p
                    break
                if triple_of(created.session) != t:
                    info.root_proc = p
                    info.creator_proc = created.subject_process
                    info.creator_session = triple_of(created.session)
                    break
        for t, info in self.sessions.items():
            cs = info.creator_session
            if cs is not None and not self.sessions[cs].predefined:
                self.children[cs].append(t)

    def _link_twins(self) -> None:
        groups = defaultdict(list)
        for t, info in self.sessions.items():
            l = info.first_logon
            if l is None or l.desktop_id is None or info.predefined:
                continue
            groups[(info.host, l.desktop_id,
                    (l.principal.realm, l.principal.name))].append((t, l))
        for members in groups.values():
            elevations = {l.token_elevation for _, l in members}
            if len(members) < 2 or len(elevations) < 2:
                continue
            triples = [t for t, _ in members]
            for t in triples:
                self.sessions[t].twins = [x for x in triples if x != t]

    def _link_byproducts(self) -> None:
        win = self.cfg.hop_window_ms
        for t, info in self.sessions.items():
            if not info.virtual or info.first_logon is None:
                continue
            best, dist = None, None
            for t2, other in self.sessions.items():
                if (t2 == t or other.host != info.host or other.virtual
                        or other.predefined or other.first_logon is None):
                    continue
                d = abs(other.first_logon.time - info.first_logon.time)
                if d <= win and (dist is None or d < dist):
                    best, dist = t2, d
            if best is not None:
                self.sessions[best].byproducts.append(t)

    def _build_hops(self, connects: list) -> None:
        pair = defaultdict(list)  # (src_fqdn, dst) -> [(time, event)]
        for c in connects:
            owner = self._owner_triple(c)
            self.connect_session[c.event_id] = owner
            self.connects_of[owner].append(c)
            pair[(c.host.fqdn, c.object.remote_host)].append((c.time, c))
        for lst in pair.values():
            lst.sort(key=lambda x: x[0])
        self.conn_pair = pair
        win = self.cfg.hop_window_ms
        for t, info in self.sessions.items():
            l = info.first_logon
            if l is None or l.source_host is None:
                continue
            if l.kind not in ("logon", "reconnect"):
                continue
            lst = pair.get((l.source_host.fqdn, l.host.fqdn))
            if not lst:
                continue
            times = [x[0] for x in lst]
            i = bisect_right(times, l.time) - 1
            if i >= 0 and l.time - times[i] <= win:
                c = lst[i][1]
                self.claims[c.event_id].append(l)
                self.claimed_by[l.event_id] = c

    def _owner_triple(self, event: SystemEvent) -> tuple:
        """Post-fixup session of one system event."""
        raw = triple_of(event.session)
        for w in self.windows:
            if (w["session"] == raw
                    and w["start"] <= event.time < w["end"]):
                return w["owner_session"]
        for c in self.carves:
            if c["source_session"] == raw and event.event_id in c["event_ids"]:
                return c["session"]
        return raw

    # -- per-session observables ----------------------------------------------

    def _classify(self, info: SessionInfo) -> str:
        obs = SessionObservables(carved_web=info.carved)
        l = info.first_logon
        if l is not None:
            obs.logon_type = l.logon_type
            obs.logon_kind = l.kind
            if l.logon_guid:
                for a in self.guid_auth.get(l.logon_guid, ()):
                    if a.target_service:
                        obs.spn_prefix = spn_prefix(a.target_service)
                        break
        if info.root_proc is not None:
            obs.root_image = info.root_proc.image_name
        if info.creator_proc is not None:
            obs.creator_image = info.creator_proc.image_name
        obs.has_virtual_byproduct = bool(info.byproducts)
        return classify(obs, self.cfg.fingerprints)

    def auth_evidence(self, logon: LogonEvent) -> list:
        """Auth events sharing the logon's GUID; empty means no evidence."""
        if not logon.logon_guid:
            return []
        return self.guid_auth.get(logon.logon_guid, [])

    def backward_slice(self, info: SessionInfo) -> list:
        """Creation-event chain of the session root back through the
        predefined service sessions. Forward activity of those sessions is
        deliberately not included."""
        out = []
        proc = info.root_proc
        seen = set()
        while proc is not None and proc.node_key() not in seen:
            seen.add(proc.node_key())
            ev = self.creation.get(proc.node_key())
            if ev is None:
                break
            t = triple_of(ev.session)
            if t in self.sessions and not self.sessions[t].predefined:
                break  # real session; reached via local links instead
            out.append(ev)
            proc = ev.subject_process
        return out


class Tracer:
    def __init__(self, store: EventStore, cfg: TracerConfig = None):
        self.store = store
        self.cfg = cfg or TracerConfig()
        self._model: Optional[SessionModel] = None

    @property
    def model(self) -> SessionModel:
        # built on first use so an alert-free run never touches the store
        if self._model is None:
            self._model = SessionModel(self.store, self.cfg)
        return self._model

    # -- seed resolution --------------------------------------------------------

    def resolve_seeds(self, alert) -> list:
        m = self.model
        seeds = []

        def add(t):
            if t in m.sessions and t not in seeds:
                seeds.append(t)

        for guid in alert.chain.logon_guids:
            for l in self.store.auth_chain_for_guid(guid)["logon_events"]:
                if l.kind in ("logon", "reconnect"):
                    add(triple_of(l.session))
        if seeds:
            return seeds
        # sessions that talked to the DC right around the anomalous exchange
        t0 = alert.chain.time
        win = self.cfg.hop_window_ms
        dc_hosts = {e.dc_host.fqdn for e in alert.chain.events}
        src = alert.client_host.fqdn
        for dc in dc_hosts:
            for ct, c in m.conn_pair.get((src, dc), ()):
                if abs(ct - t0) <= win:
                    add(m.connect_session[c.event_id])
        if seeds:
            return seeds
        # latest live session of the client principal on the client host
        best = None
        pkey = (alert.client.realm, alert.client.name)
        for t, info in m.sessions.items():
            l = info.first_logon
            if (l is None or info.host != src or info.predefined
                    or (l.principal.realm, l.principal.name) != pkey
                    or l.time > t0):
                continue
            if any(x.kind == "logoff" and x.time <= t0 for x in info.logons):
                continue
            if best is None or l.time > best[0]:
                best = (l.time, t)
        if best is not None:
            add(best[1])
        return seeds

    # -- traversal ---------------------------------------------------------------

    def trace_alert(self, alert) -> AttackGraph:
        m = self.model
        graph = AttackGraph()
        graph.alert_ids = [alert.alert_id]
        visited = set()
        queue = deque(self.resolve_seeds(alert))
        while queue:
            t = queue.popleft()
            if t in visited:
                continue
            info = m.sessions.get(t)
            if info is None or info.predefined:
                continue
            cluster = [t]
            if self.cfg.link_enabled:
                cluster += [x for x in info.twins if x not in visited]
                cluster += [x for x in info.byproducts if x not in visited]
            visited.update(cluster)
            for ct in cluster:
                self._ingest_session(graph, m.sessions[ct])
            for ct in cluster:
                self._expand(graph, m.sessions[ct], ct, alert, queue, visited)
        return graph

    def _ingest_session(self, graph: AttackGraph, info: SessionInfo) -> None:
        label = info.key.short()
        if info.first_logon is not None:
            graph.add_event(info.first_logon)
        for e in info.events:
            graph.add_event(e, label)
        if self.cfg.link_enabled:
            for ev in self.model.backward_slice(info):
                graph.add_event(ev, ev.session.short())

    def _expand(self, graph, info: SessionInfo, t: tuple, alert, queue,
                visited) -> None:
        m = self.model
        # local transitions, both directions
        for child in m.children.get(t, ()):
            if child not in visited:
                self._mark_transition(graph, t, child)
                queue.append(child)
        cs = info.creator_session
        if cs is not None and cs in m.sessions and not m.sessions[cs].predefined:
            if cs not in visited:
                self._mark_transition(graph, cs, t)
                queue.append(cs)
        # cross-machine forward: connects claimed by remote logons
        for c in m.connects_of.get(t, ()):
            for l in m.claims.get(c.event_id, ()):
                self._cross(graph, src_triple=t, logon=l, alert=alert,
                            queue=queue)
        # cross-machine backward: who created this session remotely
        l = info.first_logon
        if l is not None and l.source_host is not None:
            c = m.claimed_by.get(l.event_id)
            if c is not None:
                src = m.connect_session[c.event_id]
                self._cross(graph, src_triple=src, logon=l, alert=alert,
                            queue=queue, also_seed=src)

    def _cross(self, graph, *, src_triple, logon, alert, queue,
               also_seed=None) -> None:
        m = self.model
        evidence = m.auth_evidence(logon)
        if not evidence:
            return
        dst_triple = triple_of(logon.session)
        src_info = m.sessions.get(src_triple)
        dst_info = m.sessions.get(dst_triple)
        if src_info is None or dst_info is None or src_info.predefined:
            return
        graph.add_cross_edge(
            src_session=src_info.key,
            dst_session=dst_info.key,
            access_type=dst_info.access_type,
            principal=logon.principal,
            time=logon.time,
            logon_event_id=logon.event_id,
            auth_event_ids=[a.event_id for a in evidence],
            src_host=src_info.host,
            dst_host=dst_info.host,
            alert_id=alert.alert_id,
        )
        queue.append(dst_triple if also_seed is None else also_seed)

    def _mark_transition(self, graph, src_triple, dst_triple) -> None:
        m = self.model
        a = m.sessions[src_triple].first_logon
        b = m.sessions[dst_triple].first_logon
        if a is None or b is None:
            return
        reasons = []
        if integrity_rank(b.integrity_level) > integrity_rank(a.integrity_level):
            reasons.append(f"integrity {a.integrity_level}->{b.integrity_level}")
        if a.token_elevation == "limited" and b.token_elevation == "full":
            reasons.append("token limited->full")
        if not reasons:
            return
        graph.add_escalation(
            host=b.host.fqdn,
            src_session=m.sessions[src_triple].key,
            dst_session=m.sessions[dst_triple].key,
            time=b.time,
            reason="; ".join(reasons),
            event_ids=[a.event_id, b.event_id],
        )


def get_ad_attack_graph(store: EventStore, alerts: list,
                        cfg: TracerConfig = None) -> list:
    """Trace every alert; returns one graph per alert, in alert order."""
    tracer = Tracer(store, cfg)
    graphs = [tracer.trace_alert(a) for a in alerts]
    if tracer.cfg.collapse_meta:
        for g in graphs:
            g.collapse_meta_nodes(tracer.cfg.meta_patterns)
    return graphs
