"""Canonical domain types for ecosystem event logs and state series.

All types are immutable values after construction and safe to share across
concurrent tasks. Timestamps are integer seconds (git log granularity);
sub-second precision is discarded on ingestion.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (
    DanglingTrigger,
    DuplicateId,
    EmptyGraph,
    FieldOutOfRange,
)


class AgentKind(str, Enum):
    AI = "AI"
    HUMAN = "HUMAN"


@dataclass(frozen=True, order=True)
class AgentId:
    """Opaque agent identifier with a fixed kind.

    The kind of an agent is immutable over a dataset: the same id must not
    appear with two different kinds in one log.
    """

    id: str
    kind: AgentKind = AgentKind.HUMAN

    def __post_init__(self):
        if not self.id:
            raise FieldOutOfRange("agent id must be non-empty")


@dataclass(frozen=True)
class Review:
    reviewer: AgentId
    depth: float  # in [0, 1]

    def __post_init__(self):
        if not (0.0 <= self.depth <= 1.0):
            raise FieldOutOfRange(f"review depth {self.depth} outside [0, 1]")


@dataclass(frozen=True)
class CommitEvent:
    """One atomic ecosystem action: a commit with its CI/review evidence.

    ``ci_passed`` and ``quality_score`` may be ``None`` when the evidence
    source does not supply them (partial events pending merge).
    """

    commit_id: str
    timestamp: int
    author: AgentId
    modules_touched: frozenset[str] = frozenset()
    deps_added: tuple[tuple[str, str], ...] = ()
    deps_removed: tuple[tuple[str, str], ...] = ()
    parent_triggers: tuple[str, ...] = ()
    ci_passed: Optional[bool] = None
    required_rework: bool = False
    review: Optional[Review] = None
    quality_score: Optional[float] = None
    complexity_delta: float = 0.0
    loc_delta: int = 0

    def __post_init__(self):
        if not self.commit_id:
            raise FieldOutOfRange("commit_id must be non-empty")
        if self.quality_score is not None and not (0.0 <= self.quality_score <= 1.0):
            raise FieldOutOfRange(
                f"quality_score {self.quality_score} outside [0, 1] "
                f"(commit {self.commit_id})"
            )


@dataclass(frozen=True)
class MicroState:
    """Per-agent observables over one window ending at ``t``.

    ``comm_tensor[i, j]`` counts directed interactions from agent ``i`` to
    agent ``j``: reviews performed by ``i`` on ``j``'s commits, triggers from
    ``i``'s commits to ``j``'s follow-ups, or explicit messages. The diagonal
    is zero by convention.
    """

    t: int
    commit_counts: tuple[int, ...]
    review_participation: tuple[int, ...]
    tests_passed: tuple[int, ...]
    tests_failed: tuple[int, ...]
    comm_tensor: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = len(self.commit_counts)
        tensor = np.asarray(self.comm_tensor)
        if tensor.shape != (n, n):
            raise FieldOutOfRange(
                f"comm_tensor shape {tensor.shape} does not match roster size {n}"
            )
        if (tensor < 0).any():
            raise FieldOutOfRange("comm_tensor entries must be nonnegative")
        if n and np.diagonal(tensor).any():
            raise FieldOutOfRange("comm_tensor diagonal must be zero")
        tensor = tensor.astype(np.int64)
        tensor.setflags(write=False)
        object.__setattr__(self, "comm_tensor", tensor)


@dataclass(frozen=True)
class MacroState:
    """System-level observables over one window ending at ``t``.

    ``quality`` and ``defect_rate`` are ``None`` (NoData) for empty windows;
    series construction forward-fills them and flags the fill.
    """

    t: int
    quality: Optional[float]
    coupling: float
    coherence: float
    entropy_bits: float
    defect_rate: Optional[float]
    quality_filled: bool = False
    defect_filled: bool = False

    def __post_init__(self):
        if self.quality is not None and not (0.0 <= self.quality <= 1.0):
            raise FieldOutOfRange(f"quality {self.quality} outside [0, 1]")
        if self.coupling < 0:
            raise FieldOutOfRange("coupling must be >= 0")
        if not (-0.5 <= self.coherence <= 1.0):
            raise FieldOutOfRange(f"coherence {self.coherence} outside [-0.5, 1]")
        if self.entropy_bits < 0:
            raise FieldOutOfRange("entropy must be >= 0 bits")
        if self.defect_rate is not None and self.defect_rate < 0:
            raise FieldOutOfRange("defect_rate must be >= 0")


@dataclass(frozen=True)
class StateSeries:
    """Aligned micro/macro windows sampled at fixed ``dt`` over a fixed roster."""

    dt: int
    roster: tuple[AgentId, ...]
    windows: tuple[tuple[MicroState, MacroState], ...]

    def __post_init__(self):
        times = [micro.t for micro, _ in self.windows]
        for a, b in zip(times, times[1:]):
            if b - a != self.dt:
                raise FieldOutOfRange(
                    f"window times must advance by dt={self.dt}, got {a} -> {b}"
                )
        for micro, macro in self.windows:
            if micro.t != macro.t:
                raise FieldOutOfRange("micro/macro window times misaligned")

    @property
    def macro_matrix(self) -> np.ndarray:
        """(T, 5) array of (Q, C, A, E, D) with filled values substituted."""
        rows = []
        for _, macro in self.windows:
            rows.append(
                [
                    macro.quality if macro.quality is not None else 0.0,
                    macro.coupling,
                    macro.coherence,
                    macro.entropy_bits,
                    macro.defect_rate if macro.defect_rate is not None else 0.0,
                ]
            )
        return np.asarray(rows, dtype=float)


@dataclass(frozen=True)
class DependencyGraph:
    """Time-stamped module dependency digraph with per-module LOC weights."""

    snapshot_time: int
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    node_weights: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise FieldOutOfRange(f"self-edge {u!r} not allowed")
            if u not in self.nodes or v not in self.nodes:
                raise FieldOutOfRange(f"edge ({u!r}, {v!r}) endpoint outside node set")

    def require_nonempty(self):
        if not self.nodes:
            raise EmptyGraph("dependency graph has no nodes")


def build_roster(events: list[CommitEvent]) -> tuple[AgentId, ...]:
    """All authors and reviewers in the log, sorted by id for determinism."""
    agents: dict[str, AgentId] = {}
    for ev in events:
        agents.setdefault(ev.author.id, ev.author)
        if ev.review is not None:
            agents.setdefault(ev.review.reviewer.id, ev.review.reviewer)
    return tuple(agents[k] for k in sorted(agents))


def validate_event_log(events: list[CommitEvent]) -> list[CommitEvent]:
    """Sort a log by (timestamp, commit_id) and verify all invariants.

    Idempotent and deterministic: two runs on the same input produce the
    same ordered log. Raises DuplicateId, DanglingTrigger, or
    FieldOutOfRange (field ranges are checked at construction).

    An agent id must carry a single kind across the whole dataset.
    """
    ordered = sorted(events, key=lambda e: (e.timestamp, e.commit_id))

    seen: dict[str, int] = {}
    kinds: dict[str, AgentKind] = {}
    for pos, ev in enumerate(ordered):
        if ev.commit_id in seen:
            raise DuplicateId(f"duplicate commit_id {ev.commit_id!r}")
        seen[ev.commit_id] = pos
        for agent in (ev.author,) + ((ev.review.reviewer,) if ev.review else ()):
            prior = kinds.setdefault(agent.id, agent.kind)
            if prior != agent.kind:
                raise FieldOutOfRange(
                    f"agent {agent.id!r} appears with kinds {prior} and {agent.kind}"
                )

    for pos, ev in enumerate(ordered):
        for parent in ev.parent_triggers:
            if parent not in seen:
                raise DanglingTrigger(
                    f"commit {ev.commit_id!r} triggered by unknown commit {parent!r}"
                )
            if seen[parent] >= pos:
                raise DanglingTrigger(
                    f"commit {ev.commit_id!r} triggered by non-earlier commit {parent!r}"
                )
    return ordered


def replace_event(ev: CommitEvent, **changes) -> CommitEvent:
    """dataclasses.replace wrapper kept next to the type it serves."""
    return replace(ev, **changes)
