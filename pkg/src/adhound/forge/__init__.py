"""Deterministic labeled scenario generation."""

from .cases import (
    ACCESS_CASE_TYPES,
    ScriptError,
    forge_access_type_cases,
    forge_rdp_reconnect_case,
)
from .config import (
    ATTACK_KINDS,
    DEFAULT_BENIGN_RATES,
    AttackScript,
    ConfigError,
    HostSpec,
    ScenarioConfig,
    UserSpec,
)
from .generator import BASE_TIME, Forge, ForgeResult, forge, write_scenario
from .presets import (
    PRESETS,
    benign_scenario,
    combined_scenario,
    four_hop_scenario,
    perf_scenario,
    playbook_scenario,
)
from .truth import GroundTruth, dict_to_triple, session_to_dict, session_triple

__all__ = [
    "ACCESS_CASE_TYPES",
    "ATTACK_KINDS",
    "BASE_TIME",
    "DEFAULT_BENIGN_RATES",
    "AttackScript",
    "ConfigError",
    "Forge",
    "ForgeResult",
    "GroundTruth",
    "HostSpec",
    "PRESETS",
    "ScenarioConfig",
    "ScriptError",
    "UserSpec",
    "benign_scenario",
    "combined_scenario",
    "dict_to_triple",
    "four_hop_scenario",
    "forge",
    "forge_access_type_cases",
    "forge_rdp_reconnect_case",
    "perf_scenario",
    "playbook_scenario",
    "session_to_dict",
    "session_triple",
    "write_scenario",
]
