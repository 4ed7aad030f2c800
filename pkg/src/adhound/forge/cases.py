"""Surgical micro-scenarios for session attribution edge cases.

These build tiny worlds with no random benign background so the expected
session bookkeeping can be asserted event by event: the RDP fast-user-switch
reconnect window, the remote access type fingerprints, the web-shell slice of
the service session, and the elevated/limited session twins of a privileged
interactive logon.
"""

from __future__ import annotations

from .config import ConfigError, HostSpec, ScenarioConfig, UserSpec
from .generator import Forge, ForgeResult, write_scenario
from .truth import session_to_dict

MIN = 60_000


class ScriptError(ConfigError):
    """A case script asked for a physically impossible event sequence."""


def _quiet_config(seed: int, hosts, users) -> ScenarioConfig:
    return ScenarioConfig(
        seed=seed,
        hosts=hosts,
        users=users,
        duration_hours=2.0,
        benign_rates={k: 0.0 for k in ("interactive_logon", "smb_access",
                                       "web_request", "remote_admin",
                                       "ntlm_share", "service_noise")},
    )


def forge_rdp_reconnect_case(seed: int = 1, out_dir=None, *,
                             victim_disconnects: bool = True,
                             fresh_session: bool = False) -> ForgeResult:
    """Attacker reconnects into a disconnected RDP desktop, so the host keeps
    logging the attacker's activity under the victim's session id.

    With ``fresh_session`` the attacker opens a new desktop instead and no
    reattribution is needed. Reconnecting while the victim is still attached
    is impossible and raises :class:`ScriptError`.
    """
    if not victim_disconnects and not fresh_session:
        raise ScriptError("cannot reconnect to a desktop that is still attached")

    cfg = _quiet_config(seed, hosts=[
        HostSpec("dc01.corp.example", role="dc"),
        HostSpec("srv01.corp.example", role="server"),
        HostSpec("wsv.corp.example", role="workstation"),
        HostSpec("wsa.corp.example", role="workstation"),
    ], users=[
        UserSpec("victim", tier="admin", workstation="wsv.corp.example"),
        UserSpec("attacker", workstation="wsa.corp.example"),
    ])
    f = Forge(cfg)
    for state in f.hosts.values():
        f.boot_host(state)
    srv = f.hosts["srv01.corp.example"]
    wsv = f.hosts["wsv.corp.example"]
    wsa = f.hosts["wsa.corp.example"]
    victim = f.principal("victim")

    # victim works over RDP, then walks away
    t0 = f.t0 + 10 * MIN
    v_entry = f.benign_interactive(t0 - 2 * MIN, "victim", host_state=wsv)
    r_v = f.remote_access(t0, "RDP", victim, wsv, srv, v_entry["session"],
                          src_proc=v_entry["root"])
    s_old = r_v.dst_session
    desktop = next(e.desktop_id for e in r_v.logon_events if e.desktop_id)
    f.session_activity(t0 + 2_000, srv, s_old, r_v.root_proc, n=2)
    t_disc = t0 + 20 * MIN
    f.logon(t_disc, srv, victim, s_old, logon_type="remote_interactive",
            kind="disconnect", guid=r_v.guid, desktop=desktop)

    # attacker foothold, then hash replay into the idle desktop
    t1 = t0 + 30 * MIN
    a_entry = f.benign_interactive(t1 - 2 * MIN, "attacker", host_state=wsa)
    mal, mev = f.proc_create(t1, wsa, a_entry["session"], a_entry["root"],
                             "C:\\Users\\Public\\SystemFailureReporter.exe")
    f.truth.attack_event_ids.add(mev.event_id)
    f.truth.add_session(a_entry["session"])

    t_rec = t1 + 3 * MIN
    reconnect_to = None if fresh_session else (s_old, desktop)
    r_a = f.remote_access(t_rec, "RDP", victim, wsa, srv, a_entry["session"],
                          src_proc=mal, ntlm=True, reconnect_to=reconnect_to)
    s_new = r_a.dst_session
    f.truth.attack_event_ids.update(e.event_id for e in r_a.all_events)
    f.truth.add_session(s_new)
    f.truth.add_edge(a_entry["session"], s_new, "RDP")

    # host-side logging keeps charging the old session while reattached
    log_session = s_new if fresh_session else s_old
    root = r_a.root_proc
    if root is None:  # reconnects reuse the victim's desktop shell
        root = r_v.root_proc
    window = []
    shell, sev = f.proc_create(t_rec + 1_000, srv, log_session, root,
                               "C:\\Windows\\System32\\cmd.exe",
                               cmd="cmd.exe /c whoami")
    window.append(sev)
    window.append(f.file_op(t_rec + 2_000, srv, log_session, shell,
                            "C:\\Users\\victim\\Documents\\passwords.kdbx"))
    _, wev = f.proc_create(t_rec + 3_000, srv, log_session, shell,
                           "C:\\Windows\\System32\\net.exe",
                           cmd="net user /domain")
    window.append(wev)
    t_disc2 = t_rec + 10 * MIN
    f.logon(t_disc2, srv, victim, log_session,
            logon_type="remote_interactive", kind="disconnect",
            guid=r_a.guid, desktop=desktop)

    f.truth.attacker_window_event_ids = [e.event_id for e in window]
    f.truth.attack_event_ids.update(f.truth.attacker_window_event_ids)
    if not fresh_session:
        f.truth.reassignment = {
            "windows": [{
                "session": session_to_dict(s_old),
                "start": t_rec,
                "end": t_disc2,
                "owner_session": session_to_dict(s_new),
            }]
        }

    # victim comes back afterwards; post-window activity is theirs again
    if not fresh_session:
        t2 = t_disc2 + 5 * MIN
        f.logon(t2, srv, victim, s_old, logon_type="remote_interactive",
                kind="reconnect", guid=r_v.guid, desktop=desktop)
        f.session_activity(t2 + 1_000, srv, s_old, r_v.root_proc, n=1)

    events = f.finish()
    result = ForgeResult(events=events, truth=f.truth)
    if out_dir is not None:
        result.events_path, result.truth_path = write_scenario(
            events, f.truth, out_dir)
    return result


ACCESS_CASE_TYPES = ("RDP", "SSH", "WinRM", "WMI", "RPC", "PsExec", "SMB",
                     "WebRequest")


def forge_access_type_cases(seed: int = 1, out_dir=None) -> ForgeResult:
    """One canonical remote access per type, plus the two tricky slices: a
    web shell running inside the service session and a privileged RDP logon
    that yields limited/elevated session twins."""
    cfg = _quiet_config(seed, hosts=[
        HostSpec("dc01.corp.example", role="dc"),
        HostSpec("srv01.corp.example", role="server", web_server=True),
        HostSpec("ws01.corp.example", role="workstation"),
    ], users=[UserSpec("alice", tier="admin", workstation="ws01.corp.example")])
    f = Forge(cfg)
    for state in f.hosts.values():
        f.boot_host(state)
    srv = f.hosts["srv01.corp.example"]
    ws = f.hosts["ws01.corp.example"]
    alice = f.principal("alice")

    entry = f.benign_interactive(f.t0 + 2 * MIN, "alice", host_state=ws)
    src_session, src_proc = entry["session"], entry["root"]

    for i, atype in enumerate(ACCESS_CASE_TYPES):
        t = f.t0 + (10 + i * 5) * MIN
        res = f.remote_access(t, atype, alice, ws, srv, src_session,
                              src_proc=src_proc)
        f.truth.access_type_map[res.guid] = atype
        if res.dst_session is not None and res.root_proc is not None:
            f.session_activity(t + 2_000, srv, res.dst_session, res.root_proc,
                               n=1)

    # web shell: the worker process starts a command interpreter inside the
    # service session; that slice belongs to the inbound web request
    t_shell = f.t0 + 55 * MIN
    res_web = f.remote_access(t_shell, "WebRequest", alice, ws, srv,
                              src_session, src_proc=src_proc)
    f.truth.access_type_map[res_web.guid] = "WebRequest"
    pre = f.predefined(srv, "0x3e7")
    w3wp = srv.brokers["w3wp"]
    shell, sev = f.proc_create(t_shell + 1_200, srv, pre, w3wp,
                               "C:\\Windows\\System32\\cmd.exe",
                               cmd="cmd.exe /c whoami")
    fev = f.file_op(t_shell + 1_600, srv, pre, shell,
                    "C:\\inetpub\\wwwroot\\shell.aspx")
    f.truth.reassignment["web_shell"] = {
        "root_event_id": sev.event_id,
        "event_ids": [sev.event_id, fev.event_id],
        "guid": res_web.guid,
    }

    # privileged RDP: limited and elevated twins on the same desktop
    t_priv = f.t0 + 60 * MIN
    res_priv = f.remote_access(t_priv, "RDP", alice, ws, srv, src_session,
                               src_proc=src_proc, privileged=True)
    f.truth.access_type_map[res_priv.guid] = "RDP"
    adm, aev = f.proc_create(t_priv + 2_000, srv, res_priv.twin_session,
                             res_priv.root_proc,
                             "C:\\Windows\\System32\\mmc.exe")
    f.truth.reassignment["uac_twins"] = {
        "limited": session_to_dict(res_priv.dst_session),
        "elevated": session_to_dict(res_priv.twin_session),
        "elevated_event_ids": [aev.event_id],
    }

    events = f.finish()
    result = ForgeResult(events=events, truth=f.truth)
    if out_dir is not None:
        result.events_path, result.truth_path = write_scenario(
            events, f.truth, out_dir)
    return result
