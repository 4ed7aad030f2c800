"""Canned scenario configurations used by the CLI and the test suite."""

from __future__ import annotations

from .config import (
    ATTACK_KINDS,
    DEFAULT_BENIGN_RATES,
    AttackScript,
    HostSpec,
    ScenarioConfig,
    UserSpec,
)

REALM = "corp.example"


def _h(name: str) -> str:
    return f"{name}.{REALM}"


def standard_hosts() -> list:
    hosts = [
        HostSpec(_h("dc01"), role="dc"),
        HostSpec(_h("exch01"), role="server"),
        HostSpec(_h("data01"), role="server"),
        HostSpec(_h("db01"), role="server"),
        HostSpec(_h("file01"), role="server"),
        HostSpec(_h("web01"), role="server", web_server=True),
    ]
    hosts += [HostSpec(_h(f"ws{i:02d}"), role="workstation") for i in range(1, 7)]
    return hosts


def standard_users() -> list:
    return [
        UserSpec("alice", tier="admin", workstation=_h("ws02")),
        UserSpec("bob", tier="admin", workstation=_h("ws01")),
        UserSpec("carol", workstation=_h("ws01")),
        UserSpec("dave", workstation=_h("ws04")),
        UserSpec("erin", workstation=_h("ws05")),
        UserSpec("frank", legacy_ntlm=True, workstation=_h("ws03")),
        UserSpec("grace", workstation=_h("ws06")),
        UserSpec("helpdesk", tier="admin", workstation=_h("ws03")),
    ]


def attack_script(kind: str, start_offset_min: float = 60.0) -> AttackScript:
    table = {
        "PassTheHash": dict(
            foothold_host=_h("ws01"),
            attacker_path=[_h("ws01"), _h("exch01"), _h("data01")],
            stolen_principal="bob",
            compromised_principal="carol",
        ),
        "GoldenTicket": dict(
            foothold_host=_h("ws02"),
            attacker_path=[_h("ws02"), _h("dc01"), _h("ws03")],
            stolen_principal="administrator",
            compromised_principal="alice",
        ),
        "PassTheTicket": dict(
            foothold_host=_h("ws04"),
            attacker_path=[_h("ws04"), _h("file01")],
            stolen_principal="dave",
            compromised_principal="carol",
        ),
        "Kerberoasting": dict(
            foothold_host=_h("ws05"),
            attacker_path=[_h("ws05"), _h("db01")],
            stolen_principal="svc_sql",
            compromised_principal="erin",
        ),
        "AsRepRoasting": dict(
            foothold_host=_h("ws06"),
            attacker_path=[_h("ws06"), _h("file01")],
            stolen_principal="grace",
            compromised_principal="carol",
        ),
    }
    return AttackScript(kind=kind, start_offset_min=start_offset_min, **table[kind])


def playbook_scenario(kind: str, seed: int, *, duration_hours: float = 4.0,
                      truncation_fraction: float = 0.0,
                      benign_rates: dict = None) -> ScenarioConfig:
    rates = dict(DEFAULT_BENIGN_RATES)
    if benign_rates:
        rates.update(benign_rates)
    return ScenarioConfig(
        seed=seed,
        realm=REALM,
        hosts=standard_hosts(),
        users=standard_users(),
        duration_hours=duration_hours,
        benign_rates=rates,
        truncation_fraction=truncation_fraction,
        attacks=[attack_script(kind)],
    )


def four_hop_scenario(seed: int = 1) -> ScenarioConfig:
    """Multi-channel lateral-movement scenario: one hash-replay intrusion
    with three inbound channels, two local escalations, and a final hop."""
    return playbook_scenario("PassTheHash", seed)


def combined_scenario(seed: int = 1, *, duration_hours: float = 6.0) -> ScenarioConfig:
    cfg = playbook_scenario(ATTACK_KINDS[0], seed, duration_hours=duration_hours)
    cfg.attacks = [
        attack_script(kind, start_offset_min=60.0 + i * 50.0)
        for i, kind in enumerate(ATTACK_KINDS)
    ]
    return cfg


def benign_scenario(seed: int = 1, *, truncation_fraction: float = 0.05,
                    duration_hours: float = 4.0) -> ScenarioConfig:
    cfg = playbook_scenario("PassTheHash", seed, duration_hours=duration_hours,
                            truncation_fraction=truncation_fraction)
    cfg.attacks = []
    return cfg


def perf_scenario(seed: int = 1, *, scale: float = 90.0,
                  duration_hours: float = 8.0) -> ScenarioConfig:
    """Inflated benign volume for throughput measurements."""
    rates = {k: v * scale for k, v in DEFAULT_BENIGN_RATES.items()}
    return playbook_scenario("PassTheHash", seed, duration_hours=duration_hours,
                             benign_rates=rates)


PRESETS = {
    "fourhop": four_hop_scenario,
    "combined": combined_scenario,
    "benign": benign_scenario,
    "perf": perf_scenario,
}
for _kind in ATTACK_KINDS:
    PRESETS[_kind.lower()] = (lambda k: lambda seed=1, **kw:
                              playbook_scenario(k, seed, **kw))(_kind)
