"""Session-based cross-machine provenance tracing."""

from .engine import (
    DEFAULT_HOP_WINDOW_MS,
    SessionModel,
    Tracer,
    TracerConfig,
    get_ad_attack_graph,
    triple_of,
)
from .fingerprints import (
    ACCESS_TYPES,
    DEFAULT_FINGERPRINTS,
    Fingerprint,
    SessionObservables,
    classify,
    spn_prefix,
)
from .graph import DEFAULT_META_PATTERNS, AttackGraph, MetaPattern, proc_node_id

__all__ = [
    "ACCESS_TYPES",
    "AttackGraph",
    "DEFAULT_FINGERPRINTS",
    "DEFAULT_HOP_WINDOW_MS",
    "DEFAULT_META_PATTERNS",
    "Fingerprint",
    "MetaPattern",
    "SessionModel",
    "SessionObservables",
    "Tracer",
    "TracerConfig",
    "classify",
    "get_ad_attack_graph",
    "proc_node_id",
    "spn_prefix",
    "triple_of",
]
