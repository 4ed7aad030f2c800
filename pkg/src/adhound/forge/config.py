"""Scenario configuration for the deterministic event generator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

ATTACK_KINDS = (
    "PassTheHash",
    "GoldenTicket",
    "PassTheTicket",
    "Kerberoasting",
    "AsRepRoasting",
)

HOST_ROLES = ("dc", "server", "workstation")

DEFAULT_BENIGN_RATES = {
    # network-wide events per simulated hour
    "interactive_logon": 20.0,
    "smb_access": 30.0,
    "web_request": 40.0,
    "remote_admin": 4.0,
    "ntlm_share": 6.0,
    "service_noise": 60.0,
}


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class HostSpec:
    fqdn: str
    role: str = "workstation"  # dc | server | workstation
    web_server: bool = False

    def __post_init__(self):
        if self.role not in HOST_ROLES:
            raise ConfigError(f"unknown host role {self.role!r} for {self.fqdn}")


@dataclass
class UserSpec:
    name: str
    tier: str = "user"  # user | admin
    legacy_ntlm: bool = False  # NTLM-only principal, never flagged
    workstation: Optional[str] = None  # usual client host


@dataclass
class AttackScript:
    kind: str
    foothold_host: str
    attacker_path: list  # ordered hosts, starting at the foothold
    stolen_principal: str
    compromised_principal: Optional[str] = None  # whose session hosts the implant
    start_offset_min: float = 60.0
    discovery_count: int = 4
    cred_access_count: int = 2

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        if not self.attacker_path or self.attacker_path[0] != self.foothold_host:
            raise ConfigError("attacker_path must start at foothold_host")


@dataclass
class ScenarioConfig:
    seed: int = 1
    realm: str = "corp.example"
    hosts: list = field(default_factory=list)    # HostSpec
    users: list = field(default_factory=list)    # UserSpec
    duration_hours: float = 4.0
    benign_rates: dict = field(default_factory=lambda: dict(DEFAULT_BENIGN_RATES))
    truncation_fraction: float = 0.0   # benign auth chains cut short (network disruption)
    benign_lolbin_prob: float = 0.05   # benign sessions occasionally run LOLBins
    cascade_size: int = 50             # known benign logon-script cascade length
    attacks: list = field(default_factory=list)  # AttackScript

    def __post_init__(self):
        if not any(h.role == "dc" for h in self.hosts):
            raise ConfigError("scenario requires at least one domain controller")
        if not 0.0 <= self.truncation_fraction < 1.0:
            raise ConfigError("truncation_fraction must be in [0, 1)")

    @property
    def dc(self) -> HostSpec:
        return next(h for h in self.hosts if h.role == "dc")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        rates = dict(DEFAULT_BENIGN_RATES)
        rates.update(data.get("benign_rates", {}))
        return cls(
            seed=int(data.get("seed", 1)),
            realm=data.get("realm", "corp.example"),
            hosts=[HostSpec(**h) for h in data.get("hosts", [])],
            users=[UserSpec(**u) for u in data.get("users", [])],
            duration_hours=float(data.get("duration_hours", 4.0)),
            benign_rates=rates,
            truncation_fraction=float(data.get("truncation_fraction", 0.0)),
            benign_lolbin_prob=float(data.get("benign_lolbin_prob", 0.05)),
            cascade_size=int(data.get("cascade_size", 50)),
            attacks=[AttackScript(**a) for a in data.get("attacks", [])],
        )

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
