"""Indexed in-memory event store.

Ingestion is line-oriented and idempotent (full-record content hash dedup).
After ingestion the store is treated as immutable; all detection code reads
through :meth:`EventStore.query` and the specialised lookups, every one of
which bumps ``query_count`` so on-demand behaviour can be asserted.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .events import (
    AuthEvent,
    Event,
    HostId,
    LogonEvent,
    LogonSessionKey,
    ProcessRef,
    PrincipalId,
    RecordError,
    SystemEvent,
    is_header,
    parse_record,
    validate_event,
)

SNAPSHOT_VERSION = 1


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0
    violations: list = field(default_factory=list)  # (line_no, reason)


@dataclass
class QueryFilter:
    time_range: Optional[tuple] = None  # [t0, t1)
    host: Optional[str] = None          # fqdn
    session: Optional[LogonSessionKey] = None
    principal: Optional[PrincipalId] = None
    kinds: Optional[frozenset] = None

    def __post_init__(self):
        if self.time_range is not None:
            t0, t1 = self.time_range
            if not t0 < t1:
                raise ValueError("time_range requires t0 < t1")
        if self.kinds is not None:
            self.kinds = frozenset(self.kinds)

    def matches(self, event: Event) -> bool:
        if self.time_range is not None:
            t0, t1 = self.time_range
            if not (t0 <= event.time < t1):
                return False
        if self.kinds is not None and event.kind not in self.kinds:
            return False
        if self.host is not None:
            host = event.client_host if isinstance(event, AuthEvent) else event.host
            if host.fqdn != self.host:
                return False
        if self.session is not None:
            sess = getattr(event, "session", None)
            if sess != self.session:
                return False
        if self.principal is not None:
            if isinstance(event, AuthEvent):
                p = event.client
            elif isinstance(event, LogonEvent):
                p = event.principal
            else:
                return False
            if (p.realm, p.name) != (self.principal.realm, self.principal.name):
                return False
        return True


def _session_key(sess: LogonSessionKey) -> tuple:
    return (sess.host.fqdn, sess.boot_epoch, sess.local_id)


def _principal_key(p: PrincipalId) -> tuple:
    return (p.realm, p.name)


class EventStore:
    def __init__(self) -> None:
        self.events: list[Event] = []  # offset == ingestion sequence number
        self._hashes: set[str] = set()
        # offsets per key, in ingestion order
        self.by_session: dict[tuple, list[int]] = {}
        self.by_guid: dict[str, list[int]] = {}
        self.by_principal_auth: dict[tuple, list[int]] = {}
        self.by_host_logon: dict[str, list[int]] = {}
        self.by_host: dict[str, list[int]] = {}
        self.by_child_process: dict[tuple, int] = {}  # process node -> creating offset
        self.issued_tgts: dict[str, int] = {}         # tgt_id -> AsReply offset
        self.auth_offsets: list[int] = []
        self._time_index: list[tuple] = []  # (time, offset), sorted lazily
        self._time_dirty = False
        self.query_count = 0

    # -- ingestion -----------------------------------------------------------

    def ingest(self, path) -> IngestReport:
        """Ingest one line-delimited record file. Malformed lines are
        rejections; an unreadable file raises."""
        report = IngestReport()
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    if not isinstance(rec, dict):
                        raise RecordError("record is not an object")
                    if is_header(rec):
                        continue
                    event = parse_record(rec)
                except (RecordError, ValueError) as exc:
                    report.rejected += 1
                    report.violations.append((line_no, str(exc)))
                    continue
                result = validate_event(event)
                if not result.ok:
                    report.rejected += 1
                    report.violations.append((line_no, "; ".join(result.violations)))
                    continue
                digest = hashlib.sha256(
                    json.dumps(rec, sort_keys=True, separators=(",", ":")).encode()
                ).hexdigest()
                if digest in self._hashes:
                    report.duplicates += 1
                    continue
                self._hashes.add(digest)
                self._append(event)
                report.accepted += 1
        return report

    def add_events(self, events: Iterable[Event]) -> None:
        """Direct (test/pipeline) insertion path, bypassing dedup."""
        for event in events:
            self._append(event)

    def _append(self, event: Event) -> None:
        offset = len(self.events)
        self.events.append(event)
        self._time_index.append((event.time, offset))
        self._time_dirty = True
        if isinstance(event, AuthEvent):
            self.auth_offsets.append(offset)
            self.by_principal_auth.setdefault(_principal_key(event.client), []).append(offset)
            self.by_host.setdefault(event.client_host.fqdn, []).append(offset)
            if event.logon_guid:
                self.by_guid.setdefault(event.logon_guid, []).append(offset)
            if event.kind == "AsReply" and event.tgt_id:
                self.issued_tgts.setdefault(event.tgt_id, offset)
        elif isinstance(event, LogonEvent):
            self.by_session.setdefault(_session_key(event.session), []).append(offset)
            self.by_host_logon.setdefault(event.host.fqdn, []).append(offset)
            self.by_host.setdefault(event.host.fqdn, []).append(offset)
            if event.logon_guid:
                self.by_guid.setdefault(event.logon_guid, []).append(offset)
        elif isinstance(event, SystemEvent):
            self.by_session.setdefault(_session_key(event.session), []).append(offset)
            self.by_host.setdefault(event.host.fqdn, []).append(offset)
            if event.kind == "ProcessCreate" and event.object.process is not None:
                self.by_child_process.setdefault(
                    event.object.process.node_key(), offset
                )

    def __len__(self) -> int:
        return len(self.events)

    # -- queries -------------------------------------------------------------

    def _ordered(self, offsets: Iterable[int]) -> list[Event]:
        return [
            self.events[o]
            for o in sorted(set(offsets), key=lambda o: (self.events[o].time, o))
        ]

    def query(self, f: QueryFilter) -> list[Event]:
        """All and only events matching every present filter field, in
        (time, sequence) order."""
        self.query_count += 1
        candidates = self._candidates(f)
        return self._ordered(o for o in candidates if f.matches(self.events[o]))

    def _candidates(self, f: QueryFilter) -> Iterable[int]:
        if f.session is not None:
            return self.by_session.get(_session_key(f.session), [])
        if f.principal is not None:
            # principals show up both in auth and logon records
            key = _principal_key(f.principal)
            offs = list(self.by_principal_auth.get(key, []))
            if f.host is not None:
                offs += self.by_host.get(f.host, [])
            else:
                offs += [
                    o
                    for offsets in self.by_host_logon.values()
                    for o in offsets
                ]
            return offs
        if f.host is not None:
            return self.by_host.get(f.host, [])
        if f.time_range is not None:
            if self._time_dirty:
                self._time_index.sort()
                self._time_dirty = False
            t0, t1 = f.time_range
            lo = bisect.bisect_left(self._time_index, (t0, -1))
            hi = bisect.bisect_left(self._time_index, (t1, -1))
            return [o for _, o in self._time_index[lo:hi]]
        return range(len(self.events))

    def auth_chain_for_guid(self, guid: str) -> dict:
        """Every auth and logon event carrying this logon GUID, time ordered.
        This is the DC-to-host join."""
        self.query_count += 1
        events = self._ordered(self.by_guid.get(guid, []))
        return {
            "auth_events": [e for e in events if isinstance(e, AuthEvent)],
            "logon_events": [e for e in events if isinstance(e, LogonEvent)],
        }

    def session_events(self, session: LogonSessionKey) -> list[Event]:
        self.query_count += 1
        return self._ordered(self.by_session.get(_session_key(session), []))

    def host_logon_events(self, fqdn: str) -> list[LogonEvent]:
        self.query_count += 1
        return [
            e
            for e in self._ordered(self.by_host_logon.get(fqdn, []))
            if isinstance(e, LogonEvent)
        ]

    def principal_auth_events(self, principal: PrincipalId) -> list[AuthEvent]:
        self.query_count += 1
        return [
            e
            for e in self._ordered(self.by_principal_auth.get(_principal_key(principal), []))
            if isinstance(e, AuthEvent)
        ]

    def creation_event(self, process: ProcessRef) -> Optional[SystemEvent]:
        self.query_count += 1
        offset = self.by_child_process.get(process.node_key())
        return self.events[offset] if offset is not None else None

    def tgt_was_issued(self, tgt_id: str) -> bool:
        self.query_count += 1
        return tgt_id in self.issued_tgts

    def all_auth_events(self) -> list[AuthEvent]:
        self.query_count += 1
        return [self.events[o] for o in self.auth_offsets]

    # -- audits & snapshots ---------------------------------------------------

    def audit_indexes(self) -> bool:
        """Rebuild indexes from the event sequence and compare."""
        rebuilt = EventStore()
        rebuilt.add_events(self.events)
        return (
            rebuilt.by_session == self.by_session
            and rebuilt.by_guid == self.by_guid
            and rebuilt.by_principal_auth == self.by_principal_auth
            and rebuilt.by_host_logon == self.by_host_logon
            and rebuilt.by_host == self.by_host
            and rebuilt.by_child_process == self.by_child_process
            and rebuilt.issued_tgts == self.issued_tgts
        )

    def save_snapshot(self, path) -> None:
        payload = {
            "version": SNAPSHOT_VERSION,
            "events": self.events,
            "hashes": self._hashes,
        }
        with open(path, "wb") as fh:
            pickle.dump(payload, fh)

    @classmethod
    def load_snapshot(cls, path) -> "EventStore":
        with open(Path(path), "rb") as fh:
            payload = pickle.load(fh)
        if payload.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version: {payload.get('version')}")
        store = cls()
        store.add_events(payload["events"])
        store._hashes = payload["hashes"]
        return store


def load_store(paths) -> tuple[EventStore, list[IngestReport]]:
    store = EventStore()
    reports = [store.ingest(p) for p in paths]
    return store, reports
