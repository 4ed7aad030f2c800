"""Two-stage Active Directory attack detection: lightweight authentication
anomaly detection plus on-demand cross-machine provenance tracing."""

__version__ = "0.1.0"

from .pipeline import DetectionResult, RunManifest, run_detection
from .sentinel import Alert, SentinelConfig, get_authentication_anomalies
from .store import EventStore, QueryFilter
from .tracer import Tracer, TracerConfig, get_ad_attack_graph
from .triage import ScoreConfig, ScoredReport, rank_reports, score_graph

__all__ = [
    "Alert",
    "DetectionResult",
    "EventStore",
    "QueryFilter",
    "RunManifest",
    "ScoreConfig",
    "ScoredReport",
    "SentinelConfig",
    "Tracer",
    "TracerConfig",
    "__version__",
    "get_ad_attack_graph",
    "get_authentication_anomalies",
    "rank_reports",
    "run_detection",
    "score_graph",
]
