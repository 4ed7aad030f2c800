"""Ground-truth labels emitted alongside every forged scenario."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..events import HostId, LogonSessionKey


def session_to_dict(key: LogonSessionKey) -> dict:
    return {
        "host_fqdn": key.host.fqdn,
        "boot_epoch": key.boot_epoch,
        "local_id": key.local_id,
    }


def session_triple(key: LogonSessionKey) -> tuple:
    return (key.host.fqdn, key.boot_epoch, key.local_id)


def dict_to_triple(d: dict) -> tuple:
    return (d["host_fqdn"], d["boot_epoch"], d["local_id"])


@dataclass
class GroundTruth:
    attack_event_ids: set = field(default_factory=set)
    # list of {"src_session": {...}, "dst_session": {...}, "access_type": str}
    causal_cross_machine_edges: list = field(default_factory=list)
    attack_sessions: list = field(default_factory=list)  # session dicts
    # one entry per attack script:
    # {"kind", "stolen_principal", "chain_event_ids": [...]}
    attacks: list = field(default_factory=list)
    # rdp reconnect case: the events truly attributable to the attacker
    attacker_window_event_ids: list = field(default_factory=list)
    reassignment: dict = field(default_factory=dict)  # raw/true session dicts
    access_type_map: dict = field(default_factory=dict)  # logon_guid -> access type
    cascade: dict = field(default_factory=dict)  # {"root_event_id", "event_ids"}

    def add_edge(self, src: LogonSessionKey, dst: LogonSessionKey, access: str) -> None:
        self.causal_cross_machine_edges.append(
            {
                "src_session": session_to_dict(src),
                "dst_session": session_to_dict(dst),
                "access_type": access,
            }
        )

    def add_session(self, key: LogonSessionKey) -> None:
        d = session_to_dict(key)
        if d not in self.attack_sessions:
            self.attack_sessions.append(d)

    def edge_triples(self) -> set:
        return {
            (dict_to_triple(e["src_session"]), dict_to_triple(e["dst_session"]))
            for e in self.causal_cross_machine_edges
        }

    def to_dict(self) -> dict:
        return {
            "attack_event_ids": sorted(self.attack_event_ids),
            "causal_cross_machine_edges": self.causal_cross_machine_edges,
            "attack_sessions": self.attack_sessions,
            "attacks": self.attacks,
            "attacker_window_event_ids": self.attacker_window_event_ids,
            "reassignment": self.reassignment,
            "access_type_map": self.access_type_map,
            "cascade": self.cascade,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruth":
        gt = cls()
        gt.attack_event_ids = set(data.get("attack_event_ids", []))
        gt.causal_cross_machine_edges = data.get("causal_cross_machine_edges", [])
        gt.attack_sessions = data.get("attack_sessions", [])
        gt.attacks = data.get("attacks", [])
        gt.attacker_window_event_ids = data.get("attacker_window_event_ids", [])
        gt.reassignment = data.get("reassignment", {})
        gt.access_type_map = data.get("access_type_map", {})
        gt.cascade = data.get("cascade", {})
        return gt

    @classmethod
    def load(cls, path) -> "GroundTruth":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
