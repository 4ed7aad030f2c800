"""Deterministic synthesis of labeled enterprise event streams.

One :class:`Forge` instance builds one scenario: hosts boot, benign
Poisson-scheduled activity runs for the configured duration, and any attack
playbooks are spliced in at their offsets. Everything is driven by one seeded
RNG, so identical (config, seed) pairs produce byte-identical output files.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..events import (
    AuthEvent,
    Event,
    HostId,
    LogonEvent,
    LogonSessionKey,
    ObjectRef,
    PrincipalId,
    ProcessRef,
    SystemEvent,
    header_line,
    serialize_event,
)
from .config import ConfigError, ScenarioConfig
from .truth import GroundTruth

BASE_TIME = 1_750_000_000_000  # fixed epoch ms origin for every scenario

ACCESS_SPN = {
    "RDP": "TERMSRV",
    "SSH": "host",
    "WinRM": "HTTP",
    "WMI": "WMI",
    "RPC": "RPC",
    "PsExec": "cifs",
    "SMB": "cifs",
    "WebRequest": "HTTP",
}
ACCESS_PORT = {
    "RDP": 3389,
    "SSH": 22,
    "WinRM": 5985,
    "WMI": 135,
    "RPC": 135,
    "PsExec": 445,
    "SMB": 445,
    "WebRequest": 80,
}

C2_ADDRESS = "203.0.113.50"

BENIGN_APPS = ["OUTLOOK.EXE", "EXCEL.EXE", "chrome.exe", "WINWORD.EXE", "code.exe"]
BENIGN_LOLBINS = [
    ("net.exe", "net view \\\\fileshare"),
    ("netstat.exe", "netstat -an"),
    ("runas.exe", "runas /user:helpdesk cmd.exe"),
]


@dataclass
class HostState:
    host: HostId
    spec: object
    system: ProcessRef = None
    brokers: dict = field(default_factory=dict)
    predefined: dict = field(default_factory=dict)  # local_id -> LogonSessionKey


@dataclass
class AccessResult:
    guid: Optional[str]
    dst_session: Optional[LogonSessionKey]
    twin_session: Optional[LogonSessionKey]
    root_proc: Optional[ProcessRef]
    chain_events: list
    logon_events: list
    all_events: list


@dataclass
class ForgeResult:
    events: list
    truth: GroundTruth
    events_path: Optional[Path] = None
    truth_path: Optional[Path] = None


class Forge:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.truth = GroundTruth()
        self.events: list[Event] = []
        self._eid = 0
        self._guid = 0
        self._tgt = 0
        self._desktop = 0
        self._session_n: dict[str, int] = {}
        self._pid_n: dict[str, int] = {}
        self.t0 = BASE_TIME
        self.t_end = BASE_TIME + int(cfg.duration_hours * 3_600_000)

        self.dc_state: HostState = None
        self.hosts: dict[str, HostState] = {}
        for spec in cfg.hosts:
            host = HostId(
                fqdn=spec.fqdn,
                is_domain_controller=(spec.role == "dc"),
                is_domain_joined=True,
            )
            state = HostState(host=host, spec=spec)
            self.hosts[spec.fqdn] = state
            if spec.role == "dc" and self.dc_state is None:
                self.dc_state = state
        if self.dc_state is None:
            raise ConfigError("scenario requires at least one domain controller")
        self.dc = self.dc_state.host
        self.workstations = [h for h in cfg.hosts if h.role == "workstation"]
        self.servers = [h for h in cfg.hosts if h.role == "server"]
        self.users = {u.name: u for u in cfg.users}
        # user -> list of live interactive sessions
        self._active: list[dict] = []

    # ------------------------------------------------------------------ ids

    def new_eid(self) -> str:
        self._eid += 1
        return f"e{self._eid:07d}"

    def new_guid(self) -> str:
        self._guid += 1
        return f"G-{self._guid:06d}"

    def new_tgt(self) -> str:
        self._tgt += 1
        return f"T-{self._tgt:06d}"

    def new_session(self, state: HostState) -> LogonSessionKey:
        n = self._session_n.get(state.host.fqdn, 0) + 1
        self._session_n[state.host.fqdn] = n
        return LogonSessionKey(
            host=state.host, boot_epoch=1, local_id=f"0x{0x10000 + n * 0x95:x}"
        )

    def new_desktop(self, state: HostState) -> str:
        self._desktop += 1
        return f"desk-{state.host.fqdn}-{self._desktop}"

    def new_pid(self, state: HostState) -> int:
        n = self._pid_n.get(state.host.fqdn, 400) + self.rng.randrange(2, 9) * 4
        self._pid_n[state.host.fqdn] = n
        return n

    def principal(self, name: str) -> PrincipalId:
        return PrincipalId(realm=self.cfg.realm, name=name, kind="user")

    def machine_principal(self, state: HostState) -> PrincipalId:
        short = state.host.fqdn.split(".")[0].upper()
        return PrincipalId(realm=self.cfg.realm, name=f"{short}$", kind="machine")

    def predefined(self, state: HostState, local_id: str = "0x3e7") -> LogonSessionKey:
        if local_id not in state.predefined:
            state.predefined[local_id] = LogonSessionKey(
                host=state.host, boot_epoch=1, local_id=local_id
            )
        return state.predefined[local_id]

    # ----------------------------------------------------------- raw emitters

    def _emit(self, event: Event) -> Event:
        self.events.append(event)
        return event

    def auth(self, t, kind, client, client_host, *, spn=None, guid=None, tgt=None,
             enc="aes", outcome="success") -> AuthEvent:
        return self._emit(
            AuthEvent(
                event_id=self.new_eid(),
                time=int(t),
                kind=kind,
                client=client,
                client_host=client_host,
                dc_host=self.dc,
                target_service=spn,
                logon_guid=guid,
                ticket_encryption=enc,
                outcome=outcome,
                tgt_id=tgt,
            )
        )

    def logon(self, t, state: HostState, principal, session, *, logon_type="interactive",
              kind="logon", guid=None, source_host=None, token="default",
              integrity="medium", desktop=None) -> LogonEvent:
        return self._emit(
            LogonEvent(
                event_id=self.new_eid(),
                time=int(t),
                host=state.host,
                principal=principal,
                session=session,
                logon_type=logon_type,
                kind=kind,
                logon_guid=guid,
                source_host=source_host,
                token_elevation=token,
                integrity_level=integrity,
                desktop_id=desktop,
            )
        )

    def sysevent(self, t, state: HostState, session, kind, subject, obj,
                 cmd=None) -> SystemEvent:
        return self._emit(
            SystemEvent(
                event_id=self.new_eid(),
                time=int(t),
                host=state.host,
                session=session,
                kind=kind,
                subject_process=subject,
                object=obj,
                command_line=cmd,
            )
        )

    def proc_create(self, t, state: HostState, session, parent: ProcessRef, image,
                    cmd=None) -> tuple:
        child = ProcessRef(
            host=state.host, pid=self.new_pid(state), start_time=int(t), image_path=image
        )
        ev = self.sysevent(
            t, state, session, "ProcessCreate", parent,
            ObjectRef(kind="process", process=child), cmd=cmd,
        )
        return child, ev

    def connect(self, t, state: HostState, session, proc, remote, port) -> SystemEvent:
        return self.sysevent(
            t, state, session, "NetworkConnect", proc,
            ObjectRef(kind="socket", remote_host=remote, port=port),
        )

    def file_op(self, t, state, session, proc, path, write=False) -> SystemEvent:
        return self.sysevent(
            t, state, session, "FileWrite" if write else "FileRead", proc,
            ObjectRef(kind="file", path=path),
        )

    def proc_access(self, t, state, session, proc, target: ProcessRef) -> SystemEvent:
        return self.sysevent(
            t, state, session, "ProcessAccess", proc,
            ObjectRef(kind="process", process=target),
        )

    # --------------------------------------------------------------- booting

    def boot_host(self, state: HostState) -> None:
        t = self.t0
        sess = self.predefined(state, "0x3e7")
        state.system = ProcessRef(
            host=state.host, pid=4, start_time=t,
            image_path="C:\\Windows\\System32\\ntoskrnl.exe",
        )
        images = {
            "services": "C:\\Windows\\System32\\services.exe",
            "winlogon": "C:\\Windows\\System32\\winlogon.exe",
            "lsass": "C:\\Windows\\System32\\lsass.exe",
            "svchost": "C:\\Windows\\System32\\svchost.exe",
            "svchost_rpc": "C:\\Windows\\System32\\svchost.exe",
            "sshd": "C:\\Program Files\\OpenSSH\\sshd.exe",
            "wmiprvse": "C:\\Windows\\System32\\wbem\\WmiPrvSE.exe",
        }
        if state.spec.web_server:
            images["w3wp"] = "C:\\Windows\\System32\\inetsrv\\w3wp.exe"
        for i, (name, image) in enumerate(images.items()):
            proc, _ = self.proc_create(t + 10 + i * 5, state, sess, state.system, image)
            state.brokers[name] = proc

    # ------------------------------------------------------- auth sequences

    def kerberos_chain(self, t, client, client_host, spn, *, guid=None, use_tgt=None,
                       truncate_at=None, enc="aes") -> tuple:
        """Full AS -> TGS -> service-use sequence. ``use_tgt`` skips
        the AS exchange (ticket presented from elsewhere); ``truncate_at``
        keeps only the first N steps (network disruption)."""
        steps = []
        tgt = use_tgt
        if use_tgt is None:
            tgt = self.new_tgt()
            steps.append(("AsRequest", t, {}))
            steps.append(("AsReply", t + 60, {"tgt": tgt}))
        steps.append(("TgsRequest", t + 140, {"spn": spn, "tgt": tgt, "enc": enc}))
        steps.append(("TgsReply", t + 190, {"spn": spn, "enc": enc}))
        steps.append(("ServiceTicketUse", t + 420, {"spn": spn}))
        if truncate_at is not None:
            steps = steps[:truncate_at]
        ev = [self.auth(ts, kind, client, client_host, guid=guid, **kw)
              for kind, ts, kw in steps]
        return ev, tgt

    def ntlm_pair(self, t, client, client_host, spn, guid) -> list:
        return [
            self.auth(t, "NtlmAuth", client, client_host, spn=spn, guid=guid, enc="rc4"),
            self.auth(t + 80, "NtlmAuth", client, client_host, spn=spn, guid=guid,
                      enc="rc4"),
        ]

    # ------------------------------------------------------- remote access

    def remote_access(self, t, atype, user: PrincipalId, src_state: HostState,
                      dst_state: HostState, src_session, *, src_proc=None, ntlm=False,
                      privileged=False, reconnect_to=None, truncate=False,
                      special_privileges=False, use_tgt=None) -> AccessResult:
        """Emit one remote access of the given type: a connect in the source
        session, the auth exchange, and the characteristic dst-side logon and
        broker process fingerprint."""
        dst = dst_state.host.fqdn
        spn = f"{ACCESS_SPN[atype]}/{dst}"
        guid = self.new_guid()
        if src_session is None:
            src_session = self.predefined(src_state)
        if src_proc is None:
            src_proc = src_state.system
        self.connect(t, src_state, src_session, src_proc, dst, ACCESS_PORT[atype])
        if ntlm:
            chain = self.ntlm_pair(t + 120, user, src_state.host, spn, guid)
        else:
            trunc = self.rng.choice([1, 2, 3, 4]) if truncate else None
            chain, _ = self.kerberos_chain(t + 120, user, src_state.host, spn,
                                           guid=guid, truncate_at=trunc,
                                           use_tgt=use_tgt)
            if trunc is not None:
                return AccessResult(guid, None, None, None, chain, [], chain)

        t_logon = t + 600
        logons: list[LogonEvent] = []
        twin = None
        root = None
        pre = self.predefined(dst_state, "0x3e7")

        if atype == "WebRequest":
            w3wp = dst_state.brokers.get("w3wp")
            ev = []
            if w3wp is not None:
                ev.append(self.file_op(t_logon, dst_state, pre, w3wp,
                                       "C:\\inetpub\\wwwroot\\index.aspx"))
            return AccessResult(guid, None, None, w3wp, chain, [], chain + ev)

        session = self.new_session(dst_state)
        if reconnect_to is not None:
            old_session, desktop = reconnect_to
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="remote_interactive", kind="reconnect",
                                     guid=guid, source_host=src_state.host,
                                     desktop=desktop))
            return AccessResult(guid, session, None, None, chain, logons,
                                chain + logons)

        if atype == "RDP":
            desktop = self.new_desktop(dst_state)
            token = "limited" if privileged else "default"
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="remote_interactive", guid=guid,
                                     source_host=src_state.host, token=token,
                                     integrity="medium", desktop=desktop))
            root, _ = self.proc_create(t_logon + 150, dst_state, pre,
                                       dst_state.brokers["winlogon"],
                                       "C:\\Windows\\explorer.exe")
            if privileged:
                twin = self.new_session(dst_state)
                logons.append(self.logon(t_logon + 40, dst_state, user, twin,
                                         logon_type="remote_interactive", guid=guid,
                                         source_host=src_state.host, token="full",
                                         integrity="high", desktop=desktop))
        elif atype == "SSH":
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="network", guid=guid,
                                     source_host=src_state.host))
            root, _ = self.proc_create(t_logon + 150, dst_state, pre,
                                       dst_state.brokers["sshd"],
                                       "C:\\Program Files\\OpenSSH\\sshd-session.exe")
            virt = PrincipalId(realm=self.cfg.realm, name=f"sshd_{self._guid}",
                               kind="virtual", parent_service="sshd")
            byproduct = self.new_session(dst_state)
            logons.append(self.logon(t_logon + 60, dst_state, virt, byproduct,
                                     logon_type="network", kind="logon"))
        elif atype == "WinRM":
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="network", guid=guid,
                                     source_host=src_state.host))
            root, _ = self.proc_create(t_logon + 150, dst_state, pre,
                                       dst_state.brokers["svchost"],
                                       "C:\\Windows\\System32\\wsmprovhost.exe")
        elif atype == "WMI":
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="network", guid=guid,
                                     source_host=src_state.host))
            root, _ = self.proc_create(t_logon + 150, dst_state, pre,
                                       dst_state.brokers["wmiprvse"],
                                       "C:\\Windows\\System32\\cmd.exe")
        elif atype == "RPC":
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="network", guid=guid,
                                     source_host=src_state.host))
            root, _ = self.proc_create(t_logon + 150, dst_state, pre,
                                       dst_state.brokers["svchost_rpc"],
                                       "C:\\Windows\\System32\\dllhost.exe")
        elif atype == "PsExec":
            if "psexesvc" not in dst_state.brokers:
                psexesvc, _ = self.proc_create(t_logon - 100, dst_state, pre,
                                               dst_state.brokers["services"],
                                               "C:\\Windows\\PSEXESVC.exe")
                dst_state.brokers["psexesvc"] = psexesvc
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="network", guid=guid,
                                     source_host=src_state.host))
            root, _ = self.proc_create(t_logon + 150, dst_state, pre,
                                       dst_state.brokers["psexesvc"],
                                       "C:\\Windows\\System32\\cmd.exe")
        else:  # SMB and the NTLM share path
            logons.append(self.logon(t_logon, dst_state, user, session,
                                     logon_type="network", guid=guid,
                                     source_host=src_state.host))
        if special_privileges:
            self.logon(t_logon + 20, dst_state, user, session,
                       logon_type=logons[0].logon_type if logons else "network",
                       kind="special_privileges", guid=guid,
                       source_host=src_state.host)
        return AccessResult(guid, session, twin, root, chain, logons,
                            chain + logons)

    # --------------------------------------------------------- benign layer

    def benign_interactive(self, t, user_name, *, host_state=None, truncate=False,
                           duration_ms=None, with_cascade=False) -> Optional[dict]:
        spec = self.users[user_name]
        user = self.principal(user_name)
        if host_state is None:
            fqdn = spec.workstation or (
                self.rng.choice(self.workstations).fqdn if self.workstations
                else self.cfg.hosts[0].fqdn
            )
            host_state = self.hosts[fqdn]
        guid = self.new_guid()
        trunc = self.rng.choice([1, 2, 3, 4]) if truncate else None
        self.kerberos_chain(t, user, host_state.host, f"host/{host_state.host.fqdn}",
                            guid=guid, truncate_at=trunc)
        if trunc is not None:
            return None
        session = self.new_session(host_state)
        desktop = self.new_desktop(host_state)
        self.logon(t + 600, host_state, user, session, logon_type="interactive",
                   guid=guid, desktop=desktop,
                   integrity="medium")
        if spec.tier == "admin":
            self.logon(t + 620, host_state, user, session, logon_type="interactive",
                       kind="special_privileges", guid=guid)
        pre = self.predefined(host_state)
        userinit, _ = self.proc_create(t + 700, host_state, pre,
                                       host_state.brokers["winlogon"],
                                       "C:\\Windows\\System32\\userinit.exe")
        explorer, _ = self.proc_create(t + 800, host_state, session, userinit,
                                       "C:\\Windows\\explorer.exe")
        if with_cascade:
            self.benign_cascade(t + 900, host_state, session, explorer)
        self.session_activity(t + 1_500, host_state, session, explorer,
                              n=self.rng.randrange(2, 6))
        dur = duration_ms or self.rng.randrange(30, 180) * 60_000
        end = min(t + dur, self.t_end - 1)
        self.logon(end, host_state, user, session, logon_type="interactive",
                   kind="logoff", guid=guid)
        entry = {
            "user": user_name,
            "session": session,
            "root": explorer,
            "host_state": host_state,
            "start": t,
            "end": end,
        }
        self._active.append(entry)
        return entry

    def benign_cascade(self, t, host_state, session, parent) -> list:
        """Known benign logon-script routine: one gpscript root fanning out
        into cscript children. Collapsible to a meta node."""
        ids = []
        gp, ev = self.proc_create(t, host_state, session, parent,
                                  "C:\\Windows\\System32\\gpscript.exe")
        ids.append(ev.event_id)
        for i in range(self.cfg.cascade_size):
            child, cev = self.proc_create(t + 20 + i * 15, host_state, session, gp,
                                          "C:\\Windows\\System32\\cscript.exe",
                                          cmd=f"cscript.exe logon{i}.vbs")
            ids.append(cev.event_id)
        if not self.truth.cascade:
            self.truth.cascade = {"root_event_id": ids[0], "event_ids": ids,
                                  "size": len(ids)}
        return ids

    def session_activity(self, t, host_state, session, parent, n=3) -> list:
        out = []
        for i in range(n):
            app = self.rng.choice(BENIGN_APPS)
            proc, ev = self.proc_create(t + i * 1_000, host_state, session, parent,
                                        f"C:\\Program Files\\{app}")
            out.append(ev)
            out.append(self.file_op(t + i * 1_000 + 300, host_state, session, proc,
                                    f"C:\\Users\\docs\\file{i}.docx",
                                    write=bool(self.rng.getrandbits(1))))
            if self.rng.random() < self.cfg.benign_lolbin_prob:
                image, cmd = self.rng.choice(BENIGN_LOLBINS)
                _, lev = self.proc_create(t + i * 1_000 + 500, host_state, session,
                                          proc, f"C:\\Windows\\System32\\{image}",
                                          cmd=cmd)
                out.append(lev)
        return out

    def active_session(self, user_name, t) -> Optional[dict]:
        best = None
        for entry in self._active:
            if entry["user"] == user_name and entry["start"] <= t < entry["end"]:
                if best is None or entry["start"] > best["start"]:
                    best = entry
        return best

    def _benign_source(self, user_name, t) -> tuple:
        """(src_state, src_session, src_proc) for a benign remote access."""
        entry = self.active_session(user_name, t)
        if entry is not None:
            return entry["host_state"], entry["session"], entry["root"]
        spec = self.users[user_name]
        fqdn = spec.workstation or (
            self.rng.choice(self.workstations).fqdn if self.workstations
            else self.cfg.hosts[0].fqdn
        )
        state = self.hosts[fqdn]
        return state, self.predefined(state), state.system

    def benign_smb(self, t, user_name, *, truncate=False) -> None:
        src_state, src_session, src_proc = self._benign_source(user_name, t)
        targets = [h for h in self.servers if h.fqdn != src_state.host.fqdn] or [
            h for h in self.cfg.hosts if h.fqdn != src_state.host.fqdn
        ]
        dst_state = self.hosts[self.rng.choice(targets).fqdn]
        user = self.principal(user_name)
        guid = self.new_guid()
        self.connect(t, src_state, src_session, src_proc, dst_state.host.fqdn, 445)
        trunc = self.rng.choice([1, 2, 3, 4]) if truncate else None
        self.kerberos_chain(t + 120, user, src_state.host,
                            f"cifs/{dst_state.host.fqdn}", guid=guid,
                            truncate_at=trunc)
        if trunc is not None:
            return
        session = self.new_session(dst_state)
        self.logon(t + 600, dst_state, user, session, logon_type="network", guid=guid,
                   source_host=src_state.host)
        for i in range(2):
            self.file_op(t + 900 + i * 400, dst_state, session, dst_state.system,
                         f"\\\\{dst_state.host.fqdn}\\share\\report{i}.xlsx")
        self.logon(t + 60_000, dst_state, user, session, logon_type="network",
                   kind="logoff", guid=guid)

    def benign_web(self, t, user_name, *, truncate=False) -> None:
        webs = [h for h in self.cfg.hosts if h.web_server]
        if not webs:
            return
        src_state, src_session, src_proc = self._benign_source(user_name, t)
        dst_state = self.hosts[self.rng.choice(webs).fqdn]
        if dst_state.host.fqdn == src_state.host.fqdn:
            return
        user = self.principal(user_name)
        guid = self.new_guid()
        self.connect(t, src_state, src_session, src_proc, dst_state.host.fqdn, 80)
        trunc = self.rng.choice([1, 2, 3, 4]) if truncate else None
        self.kerberos_chain(t + 120, user, src_state.host,
                            f"HTTP/{dst_state.host.fqdn}", guid=guid,
                            truncate_at=trunc)
        if trunc is not None:
            return
        w3wp = dst_state.brokers.get("w3wp")
        if w3wp is not None:
            self.file_op(t + 700, dst_state, self.predefined(dst_state), w3wp,
                         "C:\\inetpub\\wwwroot\\app\\view.aspx")

    def benign_remote_admin(self, t, user_name) -> None:
        src_state, src_session, src_proc = self._benign_source(user_name, t)
        targets = [h for h in self.servers if h.fqdn != src_state.host.fqdn] or [
            h for h in self.cfg.hosts if h.fqdn != src_state.host.fqdn
        ]
        dst_state = self.hosts[self.rng.choice(targets).fqdn]
        atype = self.rng.choice(["RDP", "WinRM"])
        res = self.remote_access(t, atype, self.principal(user_name), src_state,
                                 dst_state, src_session)
        if res.dst_session is not None and res.root_proc is not None:
            self.session_activity(t + 2_000, dst_state, res.dst_session,
                                  res.root_proc, n=2)
            self.logon(t + 120_000, dst_state, self.principal(user_name),
                       res.dst_session,
                       logon_type="remote_interactive" if atype == "RDP" else "network",
                       kind="logoff", guid=res.guid)

    def benign_ntlm_share(self, t, user_name) -> None:
        src_state, src_session, src_proc = self._benign_source(user_name, t)
        targets = [h for h in self.cfg.hosts if h.fqdn != src_state.host.fqdn]
        dst_state = self.hosts[self.rng.choice(targets).fqdn]
        user = self.principal(user_name)
        guid = self.new_guid()
        self.connect(t, src_state, src_session, src_proc, dst_state.host.fqdn, 445)
        self.ntlm_pair(t + 120, user, src_state.host, f"cifs/{dst_state.host.fqdn}",
                       guid)
        session = self.new_session(dst_state)
        self.logon(t + 600, dst_state, user, session, logon_type="network", guid=guid,
                   source_host=src_state.host)
        self.file_op(t + 900, dst_state, session, dst_state.system,
                     f"\\\\{dst_state.host.fqdn}\\share\\legacy.dat")
        self.logon(t + 45_000, dst_state, user, session, logon_type="network",
                   kind="logoff", guid=guid)

    def service_noise(self, t, host_state) -> None:
        pre = self.predefined(host_state)
        svchost = host_state.brokers["svchost"]
        task, _ = self.proc_create(t, host_state, pre, svchost,
                                   "C:\\Windows\\System32\\taskhostw.exe")
        self.file_op(t + 200, host_state, pre, task,
                     "C:\\Windows\\Temp\\etl.log", write=True)

    # ------------------------------------------------------------ scheduling

    def _arrivals(self, rate_per_hour: float) -> list:
        if rate_per_hour <= 0:
            return []
        out = []
        t = float(self.t0)
        rate_ms = rate_per_hour / 3_600_000.0
        while True:
            t += self.rng.expovariate(rate_ms)
            if t >= self.t_end:
                return out
            out.append(int(t))

    def run_benign(self) -> None:
        cfg = self.cfg
        rates = cfg.benign_rates
        schedule = []
        for kind in ("interactive_logon", "smb_access", "web_request",
                     "remote_admin", "ntlm_share", "service_noise"):
            for t in self._arrivals(rates.get(kind, 0.0)):
                schedule.append((t, kind))
        schedule.sort()
        # principals involved in attack scripts get their background activity
        # from the playbooks themselves so session attribution stays crisp
        reserved = set()
        for script in cfg.attacks:
            reserved.add(script.stolen_principal)
            if script.compromised_principal:
                reserved.add(script.compromised_principal)
        pool = [u for u in cfg.users if u.name not in reserved]
        kerberos_users = [u.name for u in pool if not u.legacy_ntlm]
        legacy_users = [u.name for u in pool if u.legacy_ntlm]
        admins = [u.name for u in pool if u.tier == "admin" and not u.legacy_ntlm]
        for t, kind in schedule:
            truncate = self.rng.random() < cfg.truncation_fraction
            if kind == "interactive_logon" and kerberos_users:
                self.benign_interactive(t, self.rng.choice(kerberos_users),
                                        truncate=truncate,
                                        with_cascade=self.rng.random() < 0.3)
            elif kind == "smb_access" and kerberos_users:
                self.benign_smb(t, self.rng.choice(kerberos_users), truncate=truncate)
            elif kind == "web_request" and kerberos_users:
                self.benign_web(t, self.rng.choice(kerberos_users), truncate=truncate)
            elif kind == "remote_admin" and admins:
                self.benign_remote_admin(t, self.rng.choice(admins))
            elif kind == "ntlm_share" and legacy_users:
                self.benign_ntlm_share(t, self.rng.choice(legacy_users))
            elif kind == "service_noise":
                self.service_noise(t, self.hosts[self.rng.choice(cfg.hosts).fqdn])

    # ------------------------------------------------------------- finishing

    def finish(self) -> list:
        self.events.sort(key=lambda e: e.time)
        return self.events


def write_scenario(events, truth: GroundTruth, out_dir) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events_path = out / "events.jsonl"
    truth_path = out / "truth.json"
    with open(events_path, "w", encoding="utf-8") as fh:
        fh.write(header_line() + "\n")
        for event in events:
            fh.write(serialize_event(event) + "\n")
    truth.save(truth_path)
    return events_path, truth_path


def forge(cfg: ScenarioConfig, out_dir=None) -> ForgeResult:
    """Synthesize a full scenario: boot, benign background, attack playbooks."""
    from . import playbooks

    f = Forge(cfg)
    for state in f.hosts.values():
        f.boot_host(state)
    f.run_benign()
    for script in cfg.attacks:
        playbooks.run_playbook(f, script)
    events = f.finish()
    result = ForgeResult(events=events, truth=f.truth)
    if out_dir is not None:
        result.events_path, result.truth_path = write_scenario(events, f.truth, out_dir)
    return result
