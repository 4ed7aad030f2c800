"""Attack playbooks spliced into a forged scenario.

Each playbook stages a foothold implant on the configured host, performs the
technique-specific credential abuse, and moves laterally. Every attacker
action is labeled in the ground truth: event ids, the anomalous auth chain,
compromised sessions, and the causal cross-machine edges the tracer is
expected to recover.
"""

from __future__ import annotations

from ..events import PrincipalId
from .config import AttackScript, ConfigError
from .generator import C2_ADDRESS, Forge

DISCOVERY_COMMANDS = [
    ("net.exe", 'net group "Domain Admins" /domain'),
    ("net.exe", "net user /domain"),
    ("nltest.exe", "nltest /dclist:corp"),
    ("setspn.exe", "setspn -T corp -Q */*"),
    ("netstat.exe", "netstat -ano"),
]

IMPLANT_IMAGE = "C:\\Users\\Public\\SystemFailureReporter.exe"

MIN = 60_000
HOUR = 3_600_000


def _mark(f: Forge, events) -> list:
    ids = [e.event_id for e in events]
    f.truth.attack_event_ids.update(ids)
    return ids


def _implant(f: Forge, script: AttackScript, t: int) -> dict:
    """Compromised user's real interactive session plus the implant process:
    C2 beacon, domain discovery, and credential dumping from lsass."""
    state = f.hosts[script.foothold_host]
    entry = f.benign_interactive(t - 5 * MIN, script.compromised_principal,
                                 host_state=state, duration_ms=12 * HOUR)
    session = entry["session"]
    mal, ev = f.proc_create(t, state, session, entry["root"], IMPLANT_IMAGE,
                            cmd=f"SystemFailureReporter.exe -c {C2_ADDRESS}")
    marked = [ev, f.connect(t + 500, state, session, mal, C2_ADDRESS, 443)]
    for i in range(script.discovery_count):
        image, cmd = DISCOVERY_COMMANDS[i % len(DISCOVERY_COMMANDS)]
        _, dev = f.proc_create(t + 1_000 + i * 700, state, session, mal,
                               f"C:\\Windows\\System32\\{image}", cmd=cmd)
        marked.append(dev)
    for i in range(script.cred_access_count):
        marked.append(f.proc_access(t + 6_000 + i * 400, state, session, mal,
                                    state.brokers["lsass"]))
    _mark(f, marked)
    f.truth.add_session(session)
    return {"state": state, "session": session, "mal": mal}


def _mark_access(f: Forge, res, atype, src_session) -> None:
    _mark(f, res.all_events)
    if res.dst_session is not None:
        f.truth.add_session(res.dst_session)
        f.truth.add_edge(src_session, res.dst_session, atype)
    if res.twin_session is not None:
        f.truth.add_session(res.twin_session)


def _lateral_discovery(f: Forge, state, session, parent, t, *, lsass=False) -> None:
    marked = []
    for i, (image, cmd) in enumerate(DISCOVERY_COMMANDS[:3]):
        _, ev = f.proc_create(t + i * 500, state, session, parent,
                              f"C:\\Windows\\System32\\{image}", cmd=cmd)
        marked.append(ev)
    if lsass:
        marked.append(f.proc_access(t + 2_000, state, session, parent,
                                    state.brokers["lsass"]))
    _mark(f, marked)


def run_pass_the_hash(f: Forge, script: AttackScript) -> None:
    if len(script.attacker_path) < 3:
        raise ConfigError("PassTheHash playbook needs a 3-host attacker path")
    ws = f.hosts[script.attacker_path[0]]
    mid = f.hosts[script.attacker_path[1]]
    final = f.hosts[script.attacker_path[2]]
    stolen = f.principal(script.stolen_principal)
    comp = f.principal(script.compromised_principal)
    t = f.t0 + script.start_offset_min * MIN

    # the victim whose hash gets replayed has ordinary Kerberos history
    f.benign_interactive(max(f.t0 + MIN, t - 2 * HOUR), script.stolen_principal)

    imp = _implant(f, script, t)

    # three distinct lateral channels into the middle host
    t1 = t + 5 * MIN
    r_smb = f.remote_access(t1, "SMB", comp, ws, mid, imp["session"],
                            src_proc=imp["mal"])
    _mark_access(f, r_smb, "SMB", imp["session"])
    _mark(f, [f.file_op(t1 + 1_000, mid, r_smb.dst_session, mid.system,
                        f"\\\\{mid.host.fqdn}\\c$\\Windows\\Temp\\stage.bin",
                        write=True)])

    t2 = t + 10 * MIN
    r_winrm = f.remote_access(t2, "WinRM", comp, ws, mid, imp["session"],
                              src_proc=imp["mal"])
    _mark_access(f, r_winrm, "WinRM", imp["session"])
    _lateral_discovery(f, mid, r_winrm.dst_session, r_winrm.root_proc,
                       t2 + 2_000, lsass=True)

    t3 = t + 15 * MIN
    r_rdp = f.remote_access(t3, "RDP", comp, ws, mid, imp["session"],
                            src_proc=imp["mal"])
    _mark_access(f, r_rdp, "RDP", imp["session"])
    # ordinary logon-script cascade fires inside the attacker's RDP session;
    # it is graph noise, not attack activity, so it is labeled separately
    cascade_ids = f.benign_cascade(t3 + 3_000, mid, r_rdp.dst_session,
                                   r_rdp.root_proc)
    f.truth.cascade = {"root_event_id": cascade_ids[0], "event_ids": cascade_ids,
                       "size": len(cascade_ids)}

    # local escalation 1: runas to an elevated session on the middle host
    t4 = t + 20 * MIN
    runas, rev = f.proc_create(t4, mid, r_rdp.dst_session, r_rdp.root_proc,
                               "C:\\Windows\\System32\\runas.exe",
                               cmd="runas /user:corp\\admin cmd.exe")
    guid = f.new_guid()
    chain, _ = f.kerberos_chain(t4 + 200, comp, mid.host,
                                f"host/{mid.host.fqdn}", guid=guid)
    s_adm = f.new_session(mid)
    adm_logon = f.logon(t4 + 900, mid, comp, s_adm, logon_type="interactive",
                        guid=guid, token="full", integrity="high")
    priv = f.logon(t4 + 920, mid, comp, s_adm, logon_type="interactive",
                   kind="special_privileges", guid=guid, token="full",
                   integrity="high")
    cmd_proc, cev = f.proc_create(t4 + 1_000, mid, r_rdp.dst_session, runas,
                                  "C:\\Windows\\System32\\cmd.exe")
    _mark(f, [rev, adm_logon, priv, cev] + chain)
    f.truth.add_session(s_adm)

    # local escalation 2: service token to a SYSTEM session
    t5 = t + 25 * MIN
    svc_proc, sev = f.proc_create(t5, mid, s_adm, cmd_proc,
                                  "C:\\Windows\\Temp\\updatesvc.exe",
                                  cmd="updatesvc.exe -install")
    s_sys = f.new_session(mid)
    sys_logon = f.logon(t5 + 300, mid, f.machine_principal(mid), s_sys,
                        logon_type="service", token="full", integrity="system")
    _mark(f, [sev, sys_logon])
    f.truth.add_session(s_sys)
    # make the elevated processes visible in their own sessions
    _, a1 = f.proc_create(t5 + 100, mid, s_adm, cmd_proc,
                          "C:\\Windows\\System32\\whoami.exe", cmd="whoami /priv")
    _, a2 = f.proc_create(t5 + 700, mid, s_sys, svc_proc,
                          "C:\\Windows\\System32\\cmd.exe")
    _mark(f, [a1, a2])
    sys_shell = a2.object.process

    # hash replay: NTLM as the stolen user from the SYSTEM session
    t6 = t + 30 * MIN
    r_pth = f.remote_access(t6, "SMB", stolen, mid, final, s_sys,
                            src_proc=sys_shell, ntlm=True,
                            special_privileges=True)
    _mark_access(f, r_pth, "SMB", s_sys)
    reads = [f.file_op(t6 + 1_500 + i * 300, final, r_pth.dst_session,
                       final.system,
                       f"\\\\{final.host.fqdn}\\finance\\q{i}.xlsx")
             for i in range(2)]
    _mark(f, reads)

    f.truth.attacks.append({
        "kind": "PassTheHash",
        "stolen_principal": script.stolen_principal,
        "chain_event_ids": [e.event_id for e in r_pth.chain_events],
    })


def run_golden_ticket(f: Forge, script: AttackScript) -> None:
    if len(script.attacker_path) < 3:
        raise ConfigError("GoldenTicket playbook needs a 3-host attacker path")
    ws = f.hosts[script.attacker_path[0]]
    dc = f.hosts[script.attacker_path[1]]
    final = f.hosts[script.attacker_path[2]]
    comp = f.principal(script.compromised_principal)
    forged = f.principal(script.stolen_principal)
    t = f.t0 + script.start_offset_min * MIN

    imp = _implant(f, script, t)

    t1 = t + 5 * MIN
    r_dc = f.remote_access(t1, "WinRM", comp, ws, dc, imp["session"],
                           src_proc=imp["mal"])
    _mark_access(f, r_dc, "WinRM", imp["session"])
    nt, nev = f.proc_create(t1 + 2_000, dc, r_dc.dst_session, r_dc.root_proc,
                            "C:\\Windows\\System32\\ntdsutil.exe",
                            cmd='ntdsutil "ac i ntds" ifm "create full c:\\t" q q')
    acc = f.proc_access(t1 + 3_000, dc, r_dc.dst_session, r_dc.root_proc,
                        dc.brokers["lsass"])
    _mark(f, [nev, acc])

    # ticket is forged offline: the TGT id presented was never issued by a DC
    t2 = t + 12 * MIN
    forged_tgt = f"T-FORGED-{f.cfg.seed:03d}"
    r_gt = f.remote_access(t2, "SMB", forged, dc, final, r_dc.dst_session,
                           src_proc=nt, use_tgt=forged_tgt,
                           special_privileges=True)
    _mark_access(f, r_gt, "SMB", r_dc.dst_session)
    reads = [f.file_op(t2 + 1_500 + i * 300, final, r_gt.dst_session,
                       final.system, f"\\\\{final.host.fqdn}\\it\\secrets{i}.kdbx")
             for i in range(2)]
    _mark(f, reads)

    f.truth.attacks.append({
        "kind": "GoldenTicket",
        "stolen_principal": script.stolen_principal,
        "chain_event_ids": [e.event_id for e in r_gt.chain_events],
    })


def run_pass_the_ticket(f: Forge, script: AttackScript) -> None:
    if len(script.attacker_path) < 2:
        raise ConfigError("PassTheTicket playbook needs a 2-host attacker path")
    ws = f.hosts[script.attacker_path[0]]
    final = f.hosts[script.attacker_path[1]]
    victim = f.principal(script.stolen_principal)
    t = f.t0 + script.start_offset_min * MIN

    # the victim's own AS exchange, hours before the replay, issues the TGT
    # the attacker later presents
    t_v = max(f.t0 + MIN, t - 2 * HOUR)
    _, tgt_v = f.kerberos_chain(t_v, victim, ws.host, f"host/{ws.host.fqdn}")

    imp = _implant(f, script, t)

    t1 = t + 6 * MIN
    r = f.remote_access(t1, "SMB", victim, ws, final, imp["session"],
                        src_proc=imp["mal"], use_tgt=tgt_v,
                        special_privileges=True)
    _mark_access(f, r, "SMB", imp["session"])
    _mark(f, [f.file_op(t1 + 1_500, final, r.dst_session, final.system,
                        f"\\\\{final.host.fqdn}\\hr\\payroll.xlsx")])

    f.truth.attacks.append({
        "kind": "PassTheTicket",
        "stolen_principal": script.stolen_principal,
        "chain_event_ids": [e.event_id for e in r.chain_events],
    })


def run_kerberoasting(f: Forge, script: AttackScript) -> None:
    if len(script.attacker_path) < 2:
        raise ConfigError("Kerberoasting playbook needs a 2-host attacker path")
    ws = f.hosts[script.attacker_path[0]]
    final = f.hosts[script.attacker_path[1]]
    comp = f.principal(script.compromised_principal)
    svc = PrincipalId(realm=f.cfg.realm, name=script.stolen_principal,
                      kind="service")
    t = f.t0 + script.start_offset_min * MIN

    imp = _implant(f, script, t)

    # RC4 service-ticket request with no service-ticket use following it
    t1 = t + 5 * MIN
    roast, _ = f.kerberos_chain(t1, comp, ws.host,
                                f"MSSQL/{final.host.fqdn}", enc="rc4",
                                truncate_at=4)
    _mark(f, roast)

    # hash cracked offline; lateral movement under the service account
    t2 = t + 45 * MIN
    r = f.remote_access(t2, "SMB", svc, ws, final, imp["session"],
                        src_proc=imp["mal"], special_privileges=True)
    _mark_access(f, r, "SMB", imp["session"])
    _mark(f, [f.file_op(t2 + 1_500, final, r.dst_session, final.system,
                        f"\\\\{final.host.fqdn}\\db\\backup.bak")])

    f.truth.attacks.append({
        "kind": "Kerberoasting",
        "stolen_principal": script.stolen_principal,
        "chain_event_ids": [e.event_id for e in roast],
    })


def run_asrep_roasting(f: Forge, script: AttackScript) -> None:
    if len(script.attacker_path) < 2:
        raise ConfigError("AsRepRoasting playbook needs a 2-host attacker path")
    ws = f.hosts[script.attacker_path[0]]
    final = f.hosts[script.attacker_path[1]]
    victim = f.principal(script.stolen_principal)
    t = f.t0 + script.start_offset_min * MIN

    imp = _implant(f, script, t)

    # AS exchange for a no-preauth account, never followed by a TGS request;
    # the roasting tool talks straight to the DC from the implant session
    t1 = t + 5 * MIN
    dc_conn = f.connect(t1 - 200, ws, imp["session"], imp["mal"],
                        f.dc.fqdn, 88)
    roast, _ = f.kerberos_chain(t1, victim, ws.host,
                                f"krbtgt/{f.cfg.realm}", truncate_at=2)
    _mark(f, [dc_conn] + roast)

    t2 = t + 45 * MIN
    r = f.remote_access(t2, "SMB", victim, ws, final, imp["session"],
                        src_proc=imp["mal"], special_privileges=True)
    _mark_access(f, r, "SMB", imp["session"])
    _mark(f, [f.file_op(t2 + 1_500, final, r.dst_session, final.system,
                        f"\\\\{final.host.fqdn}\\shared\\archive.zip")])

    f.truth.attacks.append({
        "kind": "AsRepRoasting",
        "stolen_principal": script.stolen_principal,
        "chain_event_ids": [e.event_id for e in roast],
    })


PLAYBOOKS = {
    "PassTheHash": run_pass_the_hash,
    "GoldenTicket": run_golden_ticket,
    "PassTheTicket": run_pass_the_ticket,
    "Kerberoasting": run_kerberoasting,
    "AsRepRoasting": run_asrep_roasting,
}


def run_playbook(f: Forge, script: AttackScript) -> None:
    try:
        runner = PLAYBOOKS[script.kind]
    except KeyError:
        raise ConfigError(f"unknown attack kind {script.kind!r}")
    runner(f, script)
