"""Topology observables: clustering, link density, cascades, fan-out."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import networkx as nx

from .errors import EmptyGraph, EmptyLog, TooFewNodes
from .events import CommitEvent, DependencyGraph


@dataclass(frozen=True)
class Cascade:
    """A set of commits causally linked by trigger edges.

    depth is the longest trigger-chain length from the root; singleton
    commits form size-1, depth-0 cascades.
    """

    root: str
    members: frozenset[str]
    depth: int

    @property
    def size(self) -> int:
        return len(self.members)


def clustering_coefficient(g: DependencyGraph) -> float:
    """Global transitivity of the undirected projection: 3*triangles/triples.

    Returns 0.0 when no connected triples exist.
    """
    g.require_nonempty()
    und = nx.Graph()
    und.add_nodes_from(g.nodes)
    und.add_edges_from(g.edges)
    return float(nx.transitivity(und))


def link_density(g: DependencyGraph) -> float:
    """Directed edge count over |V|(|V|-1); requires at least two nodes."""
    if len(g.nodes) < 2:
        raise TooFewNodes("link density needs at least 2 nodes")
    n = len(g.nodes)
    return len(g.edges) / (n * (n - 1))


def trigger_edges(
    events: list[CommitEvent],
    heuristic: bool = False,
    horizon: int = 86400,
) -> list[tuple[str, str]]:
    """Causal edges between commits.

    Explicit parent_triggers are always included. With ``heuristic=True``,
    an edge is also added from each CI-failing commit to any later commit
    within ``horizon`` seconds touching one of the modules it broke
    (default off: explicit causality stays the ground truth in simulation).
    """
    edges = []
    known = {ev.commit_id for ev in events}
    for ev in events:
        for parent in ev.parent_triggers:
            if parent in known:
                edges.append((parent, ev.commit_id))
    if heuristic:
        ordered = sorted(events, key=lambda e: (e.timestamp, e.commit_id))
        for i, failing in enumerate(ordered):
            if failing.ci_passed is not False:
                continue
            for later in ordered[i + 1 :]:
                if later.timestamp - failing.timestamp > horizon:
                    break
                if later.commit_id != failing.commit_id and (
                    later.modules_touched & failing.modules_touched
                ):
                    edges.append((failing.commit_id, later.commit_id))
    return edges


def extract_cascades(
    events: list[CommitEvent],
    heuristic: bool = False,
    horizon: int = 86400,
) -> list[Cascade]:
    """Cascades = weakly connected components of the trigger DAG.

    Components are the weakest membership assumption consistent with
    "causally linked". The root of a component is its earliest commit in
    (timestamp, commit_id) order; depth is the longest directed path from
    any in-degree-0 member.
    """
    order = {
        ev.commit_id: (ev.timestamp, ev.commit_id)
        for ev in sorted(events, key=lambda e: (e.timestamp, e.commit_id))
    }
    dag = nx.DiGraph()
    dag.add_nodes_from(order)
    dag.add_edges_from(trigger_edges(events, heuristic=heuristic, horizon=horizon))

    cascades = []
    for component in nx.weakly_connected_components(dag):
        sub = dag.subgraph(component)
        root = min(component, key=lambda c: order[c])
        depth = max(nx.dag_longest_path_length(sub), 0) if len(component) > 1 else 0
        cascades.append(Cascade(root=root, members=frozenset(component), depth=depth))
    return sorted(cascades, key=lambda c: order[c.root])


def fan_out_ratio(events: list[CommitEvent]) -> float:
    """Mean number of direct trigger-children per commit."""
    if not events:
        raise EmptyLog("fan-out undefined on an empty log")
    return len(trigger_edges(events)) / len(events)


def write_cascades_csv(
    cascades: list[Cascade], events: list[CommitEvent], path: str
) -> None:
    ts = {ev.commit_id: ev.timestamp for ev in events}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["root", "size", "depth", "start_ts", "end_ts"])
        for c in cascades:
            stamps = [ts[m] for m in c.members if m in ts]
            writer.writerow([c.root, c.size, c.depth, min(stamps), max(stamps)])
