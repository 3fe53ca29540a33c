"""Agent-based generator of synthetic multi-agent software ecosystems.

Mechanics per step (one step = one measurement window):
  1. every AI agent picks a module by softmax over its internal utility
     minus adaptivity * friction (ambiguity sets the softmax temperature;
     zero ambiguity degenerates to a deterministic argmax); humans commit
     to their own modules
  2. each AI agent records a predicted CI outcome from its internal model;
     the actual outcome is drawn from a success probability combining
     capability growth, codebase drift, review dilution, and (optionally)
     dependency-graph topology
  3. a failing commit spawns a Geometric(mean b) number of follow-up rework
     commits in the next step; rework commits propagate further with the
     same offspring law, so cascades rooted at failing commits are
     Galton-Watson trees with mean size 1/(1-b)
  4. under-reviewed or misaligned AI commits add cross-module dependency
     edges chosen by preferential attachment over in-degree
  5. humans review every commit at depth min(1, capacity*n_human/pending);
     semantic review (depth >= review_floor) carries a CI success bonus
  6. every governance_period steps a gate is added to the module with the
     most boundary violations, raising its friction

Macro observables (quality, coupling, entropy trajectories) emerge from
these rules; nothing optimizes them directly. Ground truth (true cascade
edges, per-step ratio, predictions vs outcomes, rule counts) is emitted
separately so measurement never reads it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import IO, Optional

import numpy as np

from .events import AgentId, AgentKind, CommitEvent, Review, validate_event_log
from .stats import power_law_sample

_CASCADE_CAP = 1000  # safety valve per root; unreachable for b < 1


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_ai: int = 4
    n_human: int = 2
    steps: int = 100
    modules_init: int = 8
    branching_ratio: float = 0.5       # mean trigger-children per cascade node
    ambiguity: float = 0.2             # softmax temperature / misalignment rate
    drift: float = 0.0                 # per-step calibration drift
    review_capacity: float = 2.5       # reviews per human per step
    review_floor: float = 0.8          # minimum depth for semantic review
    governance_period: int = 10        # steps between gate additions
    governance_threshold: int = 0      # if > 0, gate on accumulated violations instead
    adaptivity: float = 0.5            # agent re-routing strength
    pref_attach: float = 1.0           # dependency target exponent
    capability_growth: float = 0.0     # per-step base success increment
    base_success: float = 0.9
    semantic_fix_bonus: float = 0.08
    dilution_failure_weight: float = 0.25
    drift_weight: float = 1.0
    misalign_failure_weight: float = 0.1
    topo_failure_weight: float = 0.0
    friction_weight: float = 0.03      # success penalty per gate on a module
    rule_overhead: float = 0.0         # global success penalty per active rule
    commit_size: int = 20
    new_module_rate: float = 0.02
    init_topology: str = "none"        # none | chain | triples | bipartite
    offspring: str = "geometric"       # or "powerlaw"
    offspring_alpha: float = 2.5
    window_seconds: int = 86400

    def __post_init__(self):
        if self.n_human < 1:
            raise ValueError("n_human must be >= 1")
        if not (0.0 <= self.ambiguity <= 1.0):
            raise ValueError("ambiguity must be in [0, 1]")
        if self.drift < 0 or self.branching_ratio < 0 or self.pref_attach < 0:
            raise ValueError("drift, branching_ratio, pref_attach must be >= 0")
        if not (0.0 <= self.adaptivity <= 1.0) and self.adaptivity < 0:
            raise ValueError("adaptivity must be >= 0")

    @property
    def r(self) -> float:
        return self.n_ai / self.n_human

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "SimConfig":
        """Parse a flat key = value config (# starts a comment)."""
        values: dict = {}
        types = {f.name: f.type for f in fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in types:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            kind = types[key]
            if kind in ("int", int):
                values[key] = int(value)
            elif kind in ("float", float):
                values[key] = float(value)
            else:
                values[key] = value
        return cls(**values)


def presets() -> dict[str, SimConfig]:
    """Named control configurations for the proposition battery."""
    return {
        "low-agent": SimConfig(
            n_ai=1, n_human=12, steps=120, ambiguity=0.25, drift=0.0,
            branching_ratio=0.5, review_capacity=3.0,
        ),
        "high-agent": SimConfig(
            n_ai=6, n_human=3, steps=120, ambiguity=0.25, drift=0.005,
            branching_ratio=0.5, review_capacity=3.0,
        ),
        "subcritical": SimConfig(
            n_ai=2, n_human=4, steps=100, branching_ratio=0.5,
        ),
        "supercritical": SimConfig(
            n_ai=8, n_human=2, steps=200, ambiguity=0.3, drift=0.004,
            branching_ratio=0.5, capability_growth=0.001,
            topo_failure_weight=0.25, governance_period=10,
        ),
        # every mechanism off: deterministic routing, no drift, no cascades,
        # no module growth, and certain CI success, so all macro observables
        # are exactly constant
        "null-world": SimConfig(
            n_ai=4, n_human=2, steps=100, ambiguity=0.0, drift=0.0,
            branching_ratio=0.0, capability_growth=0.0, base_success=1.0,
            new_module_rate=0.0, topo_failure_weight=0.0,
        ),
    }


@dataclass
class _SimState:
    modules: list[str]
    edges: set[tuple[str, str]]
    indegree: dict[str, int]
    friction: dict[str, float]
    gates: set[str]
    violations: dict[str, int]
    models: dict[str, np.ndarray]   # AI agent id -> predicted success per module
    human_modules: dict[str, list[str]]
    rule_count: int = 0
    commit_counter: int = 0


def _init_edges(cfg: SimConfig, modules: list[str]) -> set[tuple[str, str]]:
    """Seed dependency edges with a chosen shape.

    "triples" yields maximal clustering at low density; "bipartite" yields
    zero clustering at higher density; the two let topology observables
    vary independently across configurations.
    """
    edges: set[tuple[str, str]] = set()
    if cfg.init_topology == "none":
        pass
    elif cfg.init_topology == "chain":
        edges = {(modules[i], modules[i + 1]) for i in range(len(modules) - 1)}
    elif cfg.init_topology == "triples":
        for i in range(0, len(modules) - 2, 3):
            a, b, c = modules[i : i + 3]
            edges |= {(a, b), (b, c), (c, a)}
    elif cfg.init_topology == "bipartite":
        half = len(modules) // 2
        edges = {(a, b) for a in modules[:half] for b in modules[half:]}
    else:
        raise ValueError(f"unknown init_topology {cfg.init_topology!r}")
    return edges


def _init_state(cfg: SimConfig, rng: np.random.Generator) -> _SimState:
    modules = [f"m{idx:02d}" for idx in range(cfg.modules_init)]
    models = {}
    for i in range(cfg.n_ai):
        agent = f"ai{i:02d}"
        models[agent] = np.clip(
            cfg.base_success + rng.normal(0.0, 0.02, size=len(modules)), 0.05, 0.99
        )
    human_modules = {}
    for j in range(cfg.n_human):
        agent = f"hu{j:02d}"
        owned = [modules[(2 * j) % len(modules)], modules[(2 * j + 1) % len(modules)]]
        human_modules[agent] = owned
    edges = _init_edges(cfg, modules)
    indegree = {m: 0 for m in modules}
    for _, target in edges:
        indegree[target] += 1
    return _SimState(
        modules=modules,
        edges=edges,
        indegree=indegree,
        friction={m: 0.0 for m in modules},
        gates=set(),
        violations={m: 0 for m in modules},
        models=models,
        human_modules=human_modules,
    )


def _graph_topology(state: _SimState) -> tuple[float, float]:
    """(clustering, density) of the current dependency graph."""
    n = len(state.modules)
    if n < 2:
        return 0.0, 0.0
    density = len(state.edges) / (n * (n - 1))
    und: dict[str, set[str]] = {m: set() for m in state.modules}
    for u, v in state.edges:
        und[u].add(v)
        und[v].add(u)
    triangles = 0
    triples = 0
    for node, nbrs in und.items():
        d = len(nbrs)
        triples += d * (d - 1) // 2
        for a in nbrs:
            for b in nbrs:
                if a < b and b in und[a]:
                    triangles += 1
    clustering = (triangles / triples) if triples else 0.0
    return clustering, density


def _choose_module(
    agent: str, state: _SimState, cfg: SimConfig, rng: np.random.Generator
) -> int:
    utility = state.models[agent] - cfg.adaptivity * np.array(
        [state.friction[m] for m in state.modules]
    )
    if cfg.ambiguity <= 0:
        return int(np.argmax(utility))
    logits = (utility - utility.max()) / cfg.ambiguity
    probs = np.exp(logits)
    probs /= probs.sum()
    return int(rng.choice(len(state.modules), p=probs))


def _offspring_count(cfg: SimConfig, rng: np.random.Generator) -> int:
    if cfg.branching_ratio <= 0:
        return 0
    if cfg.offspring == "powerlaw":
        return int(power_law_sample(cfg.offspring_alpha, 1, 1, rng)[0]) - 1
    # geometric on {0, 1, ...} with mean b
    return int(rng.geometric(1.0 / (1.0 + cfg.branching_ratio))) - 1


def _add_module(state: _SimState, cfg: SimConfig, rng: np.random.Generator) -> str:
    name = f"m{len(state.modules):02d}"
    state.modules.append(name)
    state.indegree[name] = 0
    state.friction[name] = 0.0
    state.violations[name] = 0
    for agent in state.models:
        prior = np.clip(cfg.base_success + rng.normal(0.0, 0.02), 0.05, 0.99)
        state.models[agent] = np.append(state.models[agent], prior)
    return name


def run(cfg: SimConfig) -> tuple[list[CommitEvent], list[dict]]:
    """Run a full simulation; returns (validated event log, ground-truth trace).

    Identical configs produce byte-identical logs. The trace has one record
    per step with the agent ratio, rule count, capability level, topology,
    true cascade edges, and (prediction, outcome) pairs.
    """
    rng = np.random.default_rng(cfg.seed)
    state = _init_state(cfg, rng)
    ai_agents = [AgentId(a, AgentKind.AI) for a in sorted(state.models)]
    humans = [AgentId(h, AgentKind.HUMAN) for h in sorted(state.human_modules)]

    events: list[CommitEvent] = []
    truth: list[dict] = []
    if state.edges:
        # seeded topology enters the log as a bootstrap commit so that
        # measurement can reconstruct the dependency graph from events alone
        events.append(
            CommitEvent(
                commit_id=f"c{state.commit_counter:07d}",
                timestamp=0,
                author=humans[0],
                modules_touched=frozenset(state.modules),
                deps_added=tuple(sorted(state.edges)),
                ci_passed=True,
                review=Review(reviewer=humans[0], depth=1.0),
                quality_score=0.9,
                complexity_delta=0.0,
                loc_delta=cfg.commit_size,
            )
        )
        state.commit_counter += 1
    # rework scheduled for the next step: (parent_commit_id, author, module, root)
    rework_queue: list[tuple[str, AgentId, str, str]] = []
    cascade_sizes: dict[str, int] = {}

    for t in range(cfg.steps):
        clustering, density = _graph_topology(state)
        capability = min(1.0, cfg.base_success + cfg.capability_growth * t)
        drift_penalty = cfg.drift_weight * cfg.drift * t

        # (author, module_index, parent_id or None, root or None)
        intents: list[tuple[AgentId, int, Optional[str], Optional[str]]] = []
        mod_index = {m: i for i, m in enumerate(state.modules)}
        for parent_id, author, module, root in rework_queue:
            intents.append((author, mod_index[module], parent_id, root))
        rework_queue = []
        for human in humans:
            owned = state.human_modules[human.id]
            if cfg.ambiguity <= 0:
                # zero ambiguity switches every routing decision to its
                # deterministic limit, humans included
                module = owned[0]
            else:
                module = owned[int(rng.integers(len(owned)))]
            intents.append((human, mod_index[module], None, None))
        for agent in ai_agents:
            intents.append((agent, _choose_module(agent.id, state, cfg, rng), None, None))

        pending = len(intents)
        depth = min(1.0, cfg.review_capacity * cfg.n_human / pending) if pending else 1.0
        semantic = depth >= cfg.review_floor

        step_truth = {
            "step": t,
            "r": cfg.r,
            "rule_count": state.rule_count,
            "epoch": state.rule_count,
            "capability": capability,
            "clustering": clustering,
            "density": density,
            "review_depth": depth,
            "true_cascade_edges": [],
            "predictions": [],
        }

        for seq, (author, m_idx, parent_id, root) in enumerate(intents):
            module = state.modules[m_idx]
            is_ai = author.kind is AgentKind.AI
            misaligned = bool(is_ai and cfg.ambiguity > 0 and rng.random() < cfg.ambiguity)

            if is_ai and rng.random() < cfg.new_module_rate:
                module = _add_module(state, cfg, rng)
                m_idx = len(state.modules) - 1
                mod_index[module] = m_idx

            predicted = float(state.models[author.id][m_idx]) if is_ai else capability

            p_success = capability - drift_penalty
            p_success -= cfg.dilution_failure_weight * (1.0 - depth)
            if semantic:
                p_success += cfg.semantic_fix_bonus
            if misaligned:
                p_success -= cfg.misalign_failure_weight
            if state.friction[module] > 0:
                # governance gates add process friction that costs reliability
                p_success -= cfg.friction_weight * min(state.friction[module], 5.0)
            if cfg.rule_overhead > 0:
                # every active rule imposes compliance overhead on all commits
                p_success -= cfg.rule_overhead * state.rule_count
            if cfg.topo_failure_weight > 0:
                p_success -= cfg.topo_failure_weight * (clustering + density) / 2.0
            p_success = float(np.clip(p_success, 0.01, 1.0))
            passed = bool(rng.random() < p_success)

            violated = False
            deps_added: tuple[tuple[str, str], ...] = ()
            if is_ai:
                p_viol = min(
                    0.95,
                    0.3 * cfg.ambiguity * (1.0 + misaligned)
                    + 0.8 * max(0.0, cfg.review_floor - depth),
                )
                if rng.random() < p_viol and len(state.modules) > 1:
                    weights = np.array(
                        [
                            0.0 if m == module else (state.indegree[m] + 1.0) ** cfg.pref_attach
                            for m in state.modules
                        ]
                    )
                    target = state.modules[
                        int(rng.choice(len(state.modules), p=weights / weights.sum()))
                    ]
                    if (module, target) not in state.edges:
                        state.edges.add((module, target))
                        state.indegree[target] += 1
                        deps_added = ((module, target),)
                    violated = True
                    state.violations[module] += 1

            quality = float(
                np.clip(
                    0.9
                    - 0.2 * (not semantic)
                    - 0.2 * violated
                    - 0.1 * misaligned,
                    0.0,
                    1.0,
                )
            )
            complexity = float(0.5 + 1.5 * violated + 0.5 * misaligned + rng.normal(0.0, 0.3))

            commit_id = f"c{state.commit_counter:07d}"
            state.commit_counter += 1
            reviewer = humans[(t + seq) % len(humans)]
            events.append(
                CommitEvent(
                    commit_id=commit_id,
                    timestamp=t * cfg.window_seconds + min(seq, cfg.window_seconds - 1),
                    author=author,
                    modules_touched=frozenset({module}),
                    deps_added=deps_added,
                    parent_triggers=(parent_id,) if parent_id else (),
                    ci_passed=passed,
                    required_rework=not passed,
                    review=Review(reviewer=reviewer, depth=depth),
                    quality_score=quality,
                    complexity_delta=complexity,
                    loc_delta=cfg.commit_size,
                )
            )
            if parent_id:
                step_truth["true_cascade_edges"].append([parent_id, commit_id])
            if is_ai:
                step_truth["predictions"].append([author.id, predicted, passed])
                model = state.models[author.id]
                model[m_idx] = model[m_idx] + 0.2 * (passed - model[m_idx])

            # cascade propagation: failing commits seed cascades; rework
            # nodes always propagate with the same offspring law
            is_cascade_node = parent_id is not None
            if (not passed) or is_cascade_node:
                this_root = root if root is not None else commit_id
                size = cascade_sizes.get(this_root, 1)
                if size < _CASCADE_CAP:
                    kids = _offspring_count(cfg, rng)
                    kids = min(kids, _CASCADE_CAP - size)
                    cascade_sizes[this_root] = size + kids
                    for _ in range(kids):
                        rework_queue.append((commit_id, author, module, this_root))

        if cfg.governance_threshold > 0:
            fire_gate = sum(state.violations.values()) >= cfg.governance_threshold
        else:
            fire_gate = (
                cfg.governance_period > 0
                and (t + 1) % cfg.governance_period == 0
                and any(state.violations.values())
            )
        if fire_gate:
            worst = max(sorted(state.violations), key=lambda m: state.violations[m])
            state.gates.add(worst)
            state.friction[worst] += 1.0
            state.rule_count += 1
            state.violations = {m: 0 for m in state.modules}

        truth.append(step_truth)

    return validate_event_log(events), truth


def write_truth_jsonl(truth: list[dict], stream: IO) -> None:
    for rec in truth:
        stream.write(json.dumps(rec, sort_keys=True))
        stream.write("\n")


def config_to_dict(cfg: SimConfig) -> dict:
    return asdict(cfg)
