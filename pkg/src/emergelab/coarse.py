"""Coarse-graining: macro observables M(t) and micro vectors m(t) from a log.

The five macro observables per window are quality Q (mean commit quality
score), coupling C (ordered dependent pairs / |V| -- note this follows the
defining formula and may exceed 1; a [0,1]-normalized variant lives in
graphs.link_density), coherence A (Newman modularity), structural entropy
E (Shannon entropy of LOC across modules, bits), and defect rate D (CI
failure fraction).
"""

from __future__ import annotations

import csv
import math
from typing import Iterable, Optional

import networkx as nx
import numpy as np

from .errors import EmptyGraph, EmptyLog, TooShort, UncoveredNode, ZeroTotalWeight
from .events import (
    AgentId,
    CommitEvent,
    DependencyGraph,
    MacroState,
    MicroState,
    StateSeries,
    build_roster,
)
from .ingest import DependencySnapshot

NO_DATA = None


def quality_index(events: Iterable[CommitEvent]) -> Optional[float]:
    """Mean quality score over the window's commits, or NoData when empty.

    The time-weighted integral is discretized as an equal-weight mean over
    point-event commits. Events without a quality score are not counted.
    """
    scores = [ev.quality_score for ev in events if ev.quality_score is not None]
    if not scores:
        return NO_DATA
    return float(sum(scores) / len(scores))


def coupling_density(g: DependencyGraph) -> float:
    """C(t) = (number of ordered dependent module pairs) / |V|."""
    g.require_nonempty()
    return len(g.edges) / len(g.nodes)


def structural_entropy(g: DependencyGraph) -> float:
    """Shannon entropy (bits) of the LOC distribution across modules."""
    weights = np.array([g.node_weights.get(n, 0.0) for n in sorted(g.nodes)])
    if (weights < 0).any():
        raise ZeroTotalWeight("node weights must be >= 0")
    total = weights.sum()
    if total <= 0:
        raise ZeroTotalWeight("total LOC weight must be > 0")
    p = weights[weights > 0] / total
    return float(-(p * np.log2(p)).sum())


def architectural_coherence(
    g: DependencyGraph, partition: Optional[dict[str, str]] = None
) -> float:
    """Newman modularity of the undirected projection under a partition.

    Default partition: one community per top-level directory, i.e. one per
    module node (deterministic, reproducible bit-for-bit; community
    detection is deliberately not used). Empty edge set -> 0.0 by
    convention.
    """
    g.require_nonempty()
    if partition is None:
        partition = {n: n for n in g.nodes}
    missing = g.nodes - partition.keys()
    if missing:
        raise UncoveredNode(f"partition does not cover nodes: {sorted(missing)}")
    if not g.edges:
        return 0.0
    und = nx.Graph()
    und.add_nodes_from(g.nodes)
    und.add_edges_from(g.edges)
    communities: dict[str, set] = {}
    for node in g.nodes:
        communities.setdefault(partition[node], set()).add(node)
    return float(nx.community.modularity(und, communities.values()))


def defect_rate(events: Iterable[CommitEvent]) -> Optional[float]:
    """Fraction of window commits failing CI, or NoData when empty."""
    events = list(events)
    if not events:
        return NO_DATA
    failures = sum(1 for ev in events if ev.ci_passed is False)
    return failures / len(events)


def graph_at(
    events_upto: list[CommitEvent],
    snapshots: list[DependencySnapshot],
    t: int,
) -> DependencyGraph:
    """Dependency graph at time t from snapshots plus event edge deltas.

    The latest snapshot at or before t is the base; deps_added/removed from
    commits after that snapshot (up to t) are applied on top. LOC weights
    accumulate each commit's loc_delta split equally across its touched
    modules, floored at zero.
    """
    base_edges: set[tuple[str, str]] = set()
    base_ts = None
    for snap in snapshots:
        if snap.timestamp <= t:
            base_edges = set(snap.edges)
            base_ts = snap.timestamp
    edges = set(base_edges)
    weights: dict[str, float] = {}
    nodes: set[str] = set()
    for u, v in base_edges:
        nodes.update((u, v))
    for ev in events_upto:
        for m in ev.modules_touched:
            nodes.add(m)
            share = ev.loc_delta / len(ev.modules_touched)
            weights[m] = max(0.0, weights.get(m, 0.0) + share)
        if base_ts is None or ev.timestamp > base_ts:
            for e in ev.deps_added:
                if e[0] != e[1]:
                    edges.add(e)
                    nodes.update(e)
            for e in ev.deps_removed:
                edges.discard(e)
    for u, v in edges:
        nodes.update((u, v))
    return DependencyGraph(
        snapshot_time=t,
        nodes=frozenset(nodes),
        edges=frozenset(edges),
        node_weights=weights,
    )


def _window_micro(
    t: int,
    events: list[CommitEvent],
    roster: tuple[AgentId, ...],
    author_of: dict[str, str],
) -> MicroState:
    index = {a.id: i for i, a in enumerate(roster)}
    n = len(roster)
    commits = [0] * n
    reviews = [0] * n
    tp = [0] * n
    tf = [0] * n
    tensor = np.zeros((n, n), dtype=np.int64)
    for ev in events:
        ai = index[ev.author.id]
        commits[ai] += 1
        if ev.ci_passed is True:
            tp[ai] += 1
        elif ev.ci_passed is False:
            tf[ai] += 1
        if ev.review is not None:
            ri = index[ev.review.reviewer.id]
            reviews[ri] += 1
            if ri != ai:
                tensor[ri, ai] += 1
        for parent in ev.parent_triggers:
            pid = author_of.get(parent)
            if pid is not None and pid in index and index[pid] != ai:
                tensor[index[pid], ai] += 1
    return MicroState(
        t=t,
        commit_counts=tuple(commits),
        review_participation=tuple(reviews),
        tests_passed=tuple(tp),
        tests_failed=tuple(tf),
        comm_tensor=tensor,
    )


def build_series(
    events: list[CommitEvent],
    dep_snapshots: list[DependencySnapshot] = (),
    dt: int = 86400,
    partition: Optional[dict[str, str]] = None,
) -> StateSeries:
    """Tile a validated log into fixed-dt windows of (MicroState, MacroState).

    Output length is ceil(span / dt) (at least 1) and is independent of the
    input event ordering. NoData quality/defect values are forward-filled
    from the previous window (leading gaps back-filled from the first
    available value) and flagged so downstream tests can exclude them.
    """
    if not events:
        raise EmptyLog("cannot build a series from an empty log")
    if dt <= 0:
        raise TooShort("dt must be > 0")
    ordered = sorted(events, key=lambda e: (e.timestamp, e.commit_id))
    roster = build_roster(ordered)
    author_of = {ev.commit_id: ev.author.id for ev in ordered}

    t0 = ordered[0].timestamp
    span = ordered[-1].timestamp - t0
    # ceil(span/dt), bumped by one when the last event lands exactly on a
    # window boundary (windows are half-open [start, start + dt)).
    n_windows = math.ceil((span + 1) / dt)

    windows: list[tuple[MicroState, MacroState]] = []
    pos = 0
    upto: list[CommitEvent] = []
    for k in range(n_windows):
        w_start = t0 + k * dt
        w_end = w_start + dt
        in_window = []
        while pos < len(ordered) and ordered[pos].timestamp < w_end:
            in_window.append(ordered[pos])
            upto.append(ordered[pos])
            pos += 1
        micro = _window_micro(w_end, in_window, roster, author_of)
        graph = graph_at(upto, list(dep_snapshots), w_end)
        try:
            entropy = structural_entropy(graph)
        except ZeroTotalWeight:
            entropy = 0.0
        try:
            coupling = coupling_density(graph)
            coherence = architectural_coherence(graph, partition)
        except EmptyGraph:
            coupling, coherence = 0.0, 0.0
        macro = MacroState(
            t=w_end,
            quality=quality_index(in_window),
            coupling=coupling,
            coherence=coherence,
            entropy_bits=entropy,
            defect_rate=defect_rate(in_window),
        )
        windows.append((micro, macro))

    return StateSeries(dt=dt, roster=roster, windows=tuple(_fill_gaps(windows)))


def _fill_gaps(windows):
    """Forward-fill NoData Q/D, back-filling leading gaps, with flags."""

    def fill(get):
        values = [get(macro) for _, macro in windows]
        first = next((v for v in values if v is not None), 0.0)
        filled = []
        last = first
        for v in values:
            if v is None:
                filled.append((last, True))
            else:
                filled.append((v, False))
                last = v
        return filled

    q_filled = fill(lambda m: m.quality)
    d_filled = fill(lambda m: m.defect_rate)
    out = []
    for (micro, macro), (q, qf), (d, df) in zip(windows, q_filled, d_filled):
        out.append(
            (
                micro,
                MacroState(
                    t=macro.t,
                    quality=q,
                    coupling=macro.coupling,
                    coherence=macro.coherence,
                    entropy_bits=macro.entropy_bits,
                    defect_rate=d,
                    quality_filled=qf,
                    defect_filled=df,
                ),
            )
        )
    return out


# -- CSV export / import ------------------------------------------------------

MACRO_COLUMNS = ["t", "Q", "C", "A", "E", "D", "q_filled", "d_filled"]


def micro_column_names(roster: tuple[AgentId, ...]) -> list[str]:
    cols = []
    for prefix in ("c", "r", "tp", "tf"):
        cols.extend(f"{prefix}_{a.id}" for a in roster)
    return cols


def write_series_csv(series: StateSeries, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MACRO_COLUMNS + micro_column_names(series.roster))
        for micro, macro in series.windows:
            row = [
                macro.t,
                "" if macro.quality is None else f"{macro.quality:.10g}",
                f"{macro.coupling:.10g}",
                f"{macro.coherence:.10g}",
                f"{macro.entropy_bits:.10g}",
                "" if macro.defect_rate is None else f"{macro.defect_rate:.10g}",
                int(macro.quality_filled),
                int(macro.defect_filled),
            ]
            row.extend(micro.commit_counts)
            row.extend(micro.review_participation)
            row.extend(micro.tests_passed)
            row.extend(micro.tests_failed)
            writer.writerow(row)


def write_tensor_csv(series: StateSeries, path: str) -> None:
    """Sparse dump of the per-window communication tensor: t,row,col,count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "row", "col", "count"])
        ids = [a.id for a in series.roster]
        for micro, _ in series.windows:
            rows, cols = np.nonzero(micro.comm_tensor)
            for i, j in zip(rows, cols):
                writer.writerow([micro.t, ids[i], ids[j], int(micro.comm_tensor[i, j])])


def read_series_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """Read a series CSV back as (times, macro (T,5), micro (T,d), micro cols)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        micro_cols = header[len(MACRO_COLUMNS):]
        times, macro, micro = [], [], []
        for row in reader:
            times.append(int(row[0]))
            macro.append(
                [
                    float(row[1]) if row[1] != "" else 0.0,
                    float(row[2]),
                    float(row[3]),
                    float(row[4]),
                    float(row[5]) if row[5] != "" else 0.0,
                ]
            )
            micro.append([float(x) for x in row[len(MACRO_COLUMNS):]])
    return (
        np.asarray(times, dtype=np.int64),
        np.asarray(macro, dtype=float),
        np.asarray(micro, dtype=float),
        micro_cols,
    )
