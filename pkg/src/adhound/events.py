"""Canonical event schema: authentication, logon and system-activity records.

All records share one line-delimited JSON wire format (one object per line,
first line is a ``{"schema": 1}`` header). Field names on the wire match the
dataclass field names; unknown fields are preserved in ``extra`` and written
back on serialization so round-trips are lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

SCHEMA_VERSION = 1

# Built-in logon session ids: Network Service, Local Service, System.
PREDEFINED_LOCAL_IDS = frozenset({"0x3e4", "0x3e5", "0x3e7"})

PRINCIPAL_KINDS = frozenset({"user", "machine", "service", "virtual"})
AUTH_KINDS = frozenset(
    {"AsRequest", "AsReply", "TgsRequest", "TgsReply", "ServiceTicketUse", "NtlmAuth"}
)
LOGON_TYPES = frozenset(
    {"interactive", "network", "remote_interactive", "service", "batch"}
)
LOGON_KINDS = frozenset(
    {"logon", "logoff", "reconnect", "disconnect", "special_privileges"}
)
TOKEN_ELEVATIONS = frozenset({"default", "full", "limited"})
INTEGRITY_LEVELS = ("low", "medium", "high", "system")
SYSTEM_KINDS = frozenset(
    {
        "ProcessCreate",
        "ProcessTerminate",
        "FileRead",
        "FileWrite",
        "NetworkConnect",
        "ProcessAccess",
        "RegistryAccess",
    }
)
TICKET_ENCRYPTIONS = frozenset({"aes", "rc4"})
OUTCOMES = frozenset({"success", "failure"})
OBJECT_KINDS = frozenset({"process", "file", "socket", "registry"})


def integrity_rank(level: str) -> int:
    return INTEGRITY_LEVELS.index(level)


@dataclass(frozen=True)
class PrincipalId:
    realm: str
    name: str
    kind: str = "user"
    parent_service: Optional[str] = None  # required for kind == "virtual"

    def to_record(self) -> dict:
        rec: dict[str, Any] = {"realm": self.realm, "name": self.name, "kind": self.kind}
        if self.parent_service is not None:
            rec["parent_service"] = self.parent_service
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "PrincipalId":
        return cls(
            realm=rec.get("realm", ""),
            name=rec.get("name", ""),
            kind=rec.get("kind", "user"),
            parent_service=rec.get("parent_service"),
        )


@dataclass(frozen=True)
class HostId:
    fqdn: str
    is_domain_controller: bool = False
    is_domain_joined: bool = True

    def to_record(self) -> dict:
        return {
            "fqdn": self.fqdn,
            "is_domain_controller": self.is_domain_controller,
            "is_domain_joined": self.is_domain_joined,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "HostId":
        return cls(
            fqdn=rec.get("fqdn", ""),
            is_domain_controller=bool(rec.get("is_domain_controller", False)),
            is_domain_joined=bool(rec.get("is_domain_joined", True)),
        )


@dataclass(frozen=True)
class LogonSessionKey:
    """Globally unique logon session identity.

    ``local_id`` is only unique within one ``boot_epoch`` of ``host``, so all
    three parts are required for a global key.
    """

    host: HostId
    boot_epoch: int
    local_id: str  # lowercase hex with 0x prefix

    def is_predefined(self) -> bool:
        return self.local_id in PREDEFINED_LOCAL_IDS

    def to_record(self) -> dict:
        return {
            "host": self.host.to_record(),
            "boot_epoch": self.boot_epoch,
            "local_id": self.local_id,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "LogonSessionKey":
        return cls(
            host=HostId.from_record(rec.get("host", {})),
            boot_epoch=int(rec.get("boot_epoch", 0)),
            local_id=str(rec.get("local_id", "")),
        )

    def short(self) -> str:
        return f"{self.host.fqdn}/{self.boot_epoch}/{self.local_id}"


def is_predefined_session(key: LogonSessionKey) -> bool:
    """True iff the session is one of the OS-built-in service sessions."""
    return key.is_predefined()


@dataclass(frozen=True)
class ProcessRef:
    host: HostId
    pid: int
    start_time: int
    image_path: str

    def node_key(self) -> tuple:
        return (self.host.fqdn, self.pid, self.start_time)

    @property
    def image_name(self) -> str:
        return self.image_path.replace("\\", "/").rsplit("/", 1)[-1].lower()

    def to_record(self) -> dict:
        return {
            "host": self.host.to_record(),
            "pid": self.pid,
            "start_time": self.start_time,
            "image_path": self.image_path,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ProcessRef":
        return cls(
            host=HostId.from_record(rec.get("host", {})),
            pid=int(rec.get("pid", 0)),
            start_time=int(rec.get("start_time", 0)),
            image_path=rec.get("image_path", ""),
        )


@dataclass(frozen=True)
class ObjectRef:
    """Target of a system event: process, file, socket or registry key."""

    kind: str
    process: Optional[ProcessRef] = None
    path: Optional[str] = None          # file path or registry key
    remote_host: Optional[str] = None   # fqdn or raw IP for sockets
    port: Optional[int] = None

    def to_record(self) -> dict:
        rec: dict[str, Any] = {"kind": self.kind}
        if self.process is not None:
            rec["process"] = self.process.to_record()
        if self.path is not None:
            rec["path"] = self.path
        if self.remote_host is not None:
            rec["remote_host"] = self.remote_host
        if self.port is not None:
            rec["port"] = self.port
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "ObjectRef":
        proc = rec.get("process")
        return cls(
            kind=rec.get("kind", ""),
            process=ProcessRef.from_record(proc) if proc else None,
            path=rec.get("path"),
            remote_host=rec.get("remote_host"),
            port=rec.get("port"),
        )


@dataclass
class AuthEvent:
    """Kerberos/NTLM authentication step, recorded on the domain controller
    (ServiceTicketUse is recorded by the accessed application server)."""

    event_id: str
    time: int
    kind: str
    client: PrincipalId
    client_host: HostId
    dc_host: HostId
    target_service: Optional[str] = None
    logon_guid: Optional[str] = None
    ticket_encryption: str = "aes"
    outcome: str = "success"
    tgt_id: Optional[str] = None  # issued by AsReply, presented by TgsRequest
    extra: dict = field(default_factory=dict)

    record_type = "auth"

    def to_record(self) -> dict:
        rec: dict[str, Any] = {
            "type": self.record_type,
            "event_id": self.event_id,
            "time": self.time,
            "kind": self.kind,
            "client": self.client.to_record(),
            "client_host": self.client_host.to_record(),
            "dc_host": self.dc_host.to_record(),
            "ticket_encryption": self.ticket_encryption,
            "outcome": self.outcome,
        }
        if self.target_service is not None:
            rec["target_service"] = self.target_service
        if self.logon_guid is not None:
            rec["logon_guid"] = self.logon_guid
        if self.tgt_id is not None:
            rec["tgt_id"] = self.tgt_id
        rec.update(self.extra)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "AuthEvent":
        known = {
            "type", "event_id", "time", "kind", "client", "client_host",
            "dc_host", "target_service", "logon_guid", "ticket_encryption",
            "outcome", "tgt_id",
        }
        return cls(
            event_id=rec.get("event_id", ""),
            time=int(rec.get("time", 0)),
            kind=rec.get("kind", ""),
            client=PrincipalId.from_record(rec.get("client", {})),
            client_host=HostId.from_record(rec.get("client_host", {})),
            dc_host=HostId.from_record(rec.get("dc_host", {})),
            target_service=rec.get("target_service"),
            logon_guid=rec.get("logon_guid"),
            ticket_encryption=rec.get("ticket_encryption", "aes"),
            outcome=rec.get("outcome", "success"),
            tgt_id=rec.get("tgt_id"),
            extra={k: v for k, v in rec.items() if k not in known},
        )


@dataclass
class LogonEvent:
    """Logon lifecycle event recorded on the accessed host."""

    event_id: str
    time: int
    host: HostId
    principal: PrincipalId
    session: LogonSessionKey
    logon_type: str = "interactive"
    kind: str = "logon"
    logon_guid: Optional[str] = None
    source_host: Optional[HostId] = None
    token_elevation: str = "default"
    integrity_level: str = "medium"
    desktop_id: Optional[str] = None  # remote-desktop/console container id
    extra: dict = field(default_factory=dict)

    record_type = "logon"

    def to_record(self) -> dict:
        rec: dict[str, Any] = {
            "type": self.record_type,
            "event_id": self.event_id,
            "time": self.time,
            "host": self.host.to_record(),
            "principal": self.principal.to_record(),
            "session": self.session.to_record(),
            "logon_type": self.logon_type,
            "kind": self.kind,
            "token_elevation": self.token_elevation,
            "integrity_level": self.integrity_level,
        }
        if self.logon_guid is not None:
            rec["logon_guid"] = self.logon_guid
        if self.source_host is not None:
            rec["source_host"] = self.source_host.to_record()
        if self.desktop_id is not None:
            rec["desktop_id"] = self.desktop_id
        rec.update(self.extra)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "LogonEvent":
        known = {
            "type", "event_id", "time", "host", "principal", "session",
            "logon_type", "kind", "logon_guid", "source_host",
            "token_elevation", "integrity_level", "desktop_id",
        }
        src = rec.get("source_host")
        return cls(
            event_id=rec.get("event_id", ""),
            time=int(rec.get("time", 0)),
            host=HostId.from_record(rec.get("host", {})),
            principal=PrincipalId.from_record(rec.get("principal", {})),
            session=LogonSessionKey.from_record(rec.get("session", {})),
            logon_type=rec.get("logon_type", "interactive"),
            kind=rec.get("kind", "logon"),
            logon_guid=rec.get("logon_guid"),
            source_host=HostId.from_record(src) if src else None,
            token_elevation=rec.get("token_elevation", "default"),
            integrity_level=rec.get("integrity_level", "medium"),
            desktop_id=rec.get("desktop_id"),
            extra={k: v for k, v in rec.items() if k not in known},
        )


@dataclass
class SystemEvent:
    """System-activity event (process/file/socket/registry), recorded on the
    host under the logon session of the acting process."""

    event_id: str
    time: int
    host: HostId
    session: LogonSessionKey
    kind: str
    subject_process: ProcessRef
    object: ObjectRef
    command_line: Optional[str] = None
    extra: dict = field(default_factory=dict)

    record_type = "system"

    def to_record(self) -> dict:
        rec: dict[str, Any] = {
            "type": self.record_type,
            "event_id": self.event_id,
            "time": self.time,
            "host": self.host.to_record(),
            "session": self.session.to_record(),
            "kind": self.kind,
            "subject_process": self.subject_process.to_record(),
            "object": self.object.to_record(),
        }
        if self.command_line is not None:
            rec["command_line"] = self.command_line
        rec.update(self.extra)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "SystemEvent":
        known = {
            "type", "event_id", "time", "host", "session", "kind",
            "subject_process", "object", "command_line",
        }
        return cls(
            event_id=rec.get("event_id", ""),
            time=int(rec.get("time", 0)),
            host=HostId.from_record(rec.get("host", {})),
            session=LogonSessionKey.from_record(rec.get("session", {})),
            kind=rec.get("kind", ""),
            subject_process=ProcessRef.from_record(rec.get("subject_process", {})),
            object=ObjectRef.from_record(rec.get("object", {})),
            command_line=rec.get("command_line"),
            extra={k: v for k, v in rec.items() if k not in known},
        )


Event = Union[AuthEvent, LogonEvent, SystemEvent]

_RECORD_CLASSES = {"auth": AuthEvent, "logon": LogonEvent, "system": SystemEvent}


class RecordError(ValueError):
    """A line could not be parsed into an event record."""


def parse_record(rec: dict) -> Event:
    rtype = rec.get("type")
    cls = _RECORD_CLASSES.get(rtype)
    if cls is None:
        raise RecordError(f"unknown record type: {rtype!r}")
    return cls.from_record(rec)


def parse_line(line: str) -> Event:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc}") from exc
    if not isinstance(rec, dict):
        raise RecordError("record is not an object")
    return parse_record(rec)


def serialize_event(event: Event) -> str:
    """Canonical single-line serialization (sorted keys, compact)."""
    return json.dumps(event.to_record(), sort_keys=True, separators=(",", ":"))


def header_line() -> str:
    return json.dumps({"schema": SCHEMA_VERSION}, separators=(",", ":"))


def is_header(rec: dict) -> bool:
    return set(rec.keys()) == {"schema"}


@dataclass
class ValidationResult:
    ok: bool
    violations: list

    def __bool__(self) -> bool:
        return self.ok


def _check_principal(p: PrincipalId, out: list, ctx: str) -> None:
    if not p.name:
        out.append(f"{ctx}: empty principal name")
    if p.kind not in PRINCIPAL_KINDS:
        out.append(f"{ctx}: bad principal kind {p.kind!r}")
    if p.kind in ("user", "machine", "service") and not p.realm:
        out.append(f"{ctx}: empty realm for {p.kind} principal")
    if p.kind == "virtual" and not p.parent_service:
        out.append(f"{ctx}: virtual principal without parent service tag")


def validate_event(event: Event) -> ValidationResult:
    """Check the per-type invariants; violations are data, not faults."""
    v: list[str] = []
    if not getattr(event, "event_id", ""):
        v.append("missing event_id")
    if isinstance(event, AuthEvent):
        if event.kind not in AUTH_KINDS:
            v.append(f"bad auth kind {event.kind!r}")
        _check_principal(event.client, v, "client")
        if not event.client_host.fqdn:
            v.append("empty client_host fqdn")
        if not event.dc_host.fqdn:
            v.append("empty dc_host fqdn")
        if event.ticket_encryption not in TICKET_ENCRYPTIONS:
            v.append(f"bad ticket_encryption {event.ticket_encryption!r}")
        if event.outcome not in OUTCOMES:
            v.append(f"bad outcome {event.outcome!r}")
    elif isinstance(event, LogonEvent):
        if event.kind not in LOGON_KINDS:
            v.append(f"bad logon kind {event.kind!r}")
        if event.logon_type not in LOGON_TYPES:
            v.append(f"bad logon_type {event.logon_type!r}")
        _check_principal(event.principal, v, "principal")
        if event.session.host != event.host:
            v.append("session/host mismatch")
        if event.kind in ("reconnect", "disconnect") and event.logon_type not in (
            "remote_interactive",
            "interactive",
        ):
            v.append(f"{event.kind} with logon_type {event.logon_type!r}")
        if event.token_elevation not in TOKEN_ELEVATIONS:
            v.append(f"bad token_elevation {event.token_elevation!r}")
        if event.integrity_level not in INTEGRITY_LEVELS:
            v.append(f"bad integrity_level {event.integrity_level!r}")
    elif isinstance(event, SystemEvent):
        if event.kind not in SYSTEM_KINDS:
            v.append(f"bad system kind {event.kind!r}")
        if event.subject_process.host != event.host:
            v.append("subject_process/host mismatch")
        if event.session.host != event.host:
            v.append("session/host mismatch")
        if not event.subject_process.image_path:
            v.append("empty image_path")
        if event.object.kind not in OBJECT_KINDS:
            v.append(f"bad object kind {event.object.kind!r}")
        if event.kind == "ProcessAccess" and (
            event.object.kind != "process" or event.object.process is None
        ):
            v.append("ProcessAccess without target process")
    else:
        v.append(f"unknown event class {type(event).__name__}")
    return ValidationResult(ok=not v, violations=v)
