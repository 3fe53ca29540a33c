"""emergelab: measuring causal emergence in mixed human/AI software ecosystems.

The pipeline: simulate or ingest a commit-event log, coarse-grain it into
aligned micro/macro state series, estimate Effective Information at both
description levels, and run the seven-proposition statistical battery.
"""

from .events import (
    AgentId,
    AgentKind,
    CommitEvent,
    DependencyGraph,
    MacroState,
    MicroState,
    Review,
    StateSeries,
    build_roster,
    validate_event_log,
)
from .ei import (
    EIResult,
    TransitionMatrix,
    causal_emergence,
    compress_micro,
    discretize,
    effective_information,
    estimate_transitions,
)
from .sim import SimConfig, presets, run
from .propositions import PropositionVerdict

__version__ = "0.1.0"

__all__ = [
    "AgentId",
    "AgentKind",
    "CommitEvent",
    "DependencyGraph",
    "EIResult",
    "MacroState",
    "MicroState",
    "PropositionVerdict",
    "Review",
    "SimConfig",
    "StateSeries",
    "TransitionMatrix",
    "build_roster",
    "causal_emergence",
    "compress_micro",
    "discretize",
    "effective_information",
    "estimate_transitions",
    "presets",
    "run",
    "validate_event_log",
    "__version__",
]
