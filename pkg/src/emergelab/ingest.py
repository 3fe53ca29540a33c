"""Parsers for the canonical JSONL event format and repository evidence.

Canonical JSONL schema (one object per line). Required fields:
``commit_id, ts, author, author_kind, modules, ci_passed``. Optional:
``deps_added, deps_removed, parents_triggered_by, review_depth, reviewer,
quality, complexity_delta, loc_delta, rework``. Unknown fields are ignored.

Sidecar formats:
  dependency snapshot JSONL: ``{"ts": ..., "edges": [[from, to], ...]}``
  CI record JSONL:           ``{"commit_id": ..., "passed": true|false}``
  review record JSONL:       ``{"commit_id": ..., "reviewer": ..., "depth": ...}``
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Union

from .errors import (
    ConflictingEvidence,
    FieldOutOfRange,
    MalformedHeader,
    MalformedLine,
    MissingRequiredField,
    NonNumericStat,
)
from .events import AgentId, AgentKind, CommitEvent, Review, replace_event

REQUIRED_FIELDS = ("commit_id", "ts", "author", "author_kind", "modules", "ci_passed")


@dataclass(frozen=True)
class RawGitRecord:
    commit_id: str
    author: str
    timestamp: int
    file_stats: tuple[tuple[str, int, int], ...]  # (path, added, deleted)

    def __post_init__(self):
        for _, added, deleted in self.file_stats:
            if added < 0 or deleted < 0:
                raise FieldOutOfRange("line counts must be >= 0")


@dataclass(frozen=True)
class DependencySnapshot:
    timestamp: int
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise FieldOutOfRange(f"self-edge {u!r} in dependency snapshot")


def _event_from_record(rec: dict, lineno: int) -> CommitEvent:
    for key in REQUIRED_FIELDS:
        if key not in rec:
            raise MissingRequiredField(lineno, key)
    try:
        author = AgentId(str(rec["author"]), AgentKind(rec["author_kind"]))
        review = None
        if rec.get("reviewer") is not None:
            review = Review(
                reviewer=AgentId(str(rec["reviewer"]), AgentKind.HUMAN),
                depth=float(rec.get("review_depth", 1.0)),
            )
        ci = rec["ci_passed"]
        return CommitEvent(
            commit_id=str(rec["commit_id"]),
            timestamp=int(rec["ts"]),
            author=author,
            modules_touched=frozenset(str(m) for m in rec["modules"]),
            deps_added=tuple((str(a), str(b)) for a, b in rec.get("deps_added", [])),
            deps_removed=tuple(
                (str(a), str(b)) for a, b in rec.get("deps_removed", [])
            ),
            parent_triggers=tuple(str(p) for p in rec.get("parents_triggered_by", [])),
            ci_passed=None if ci is None else bool(ci),
            required_rework=bool(rec.get("rework", False)),
            review=review,
            quality_score=(
                None if rec.get("quality") is None else float(rec["quality"])
            ),
            complexity_delta=float(rec.get("complexity_delta", 0.0)),
            loc_delta=int(rec.get("loc_delta", 0)),
        )
    except (ValueError, TypeError, FieldOutOfRange) as exc:
        raise MalformedLine(lineno, str(exc)) from exc


def parse_jsonl(stream: Union[IO, Iterable[str]]) -> list[CommitEvent]:
    """Parse canonical JSONL into events, preserving input order.

    Reviewer kinds are not part of the schema; a reviewer is assigned the
    kind under which they author commits in the same log, defaulting to
    HUMAN when they never author.
    """
    events: list[CommitEvent] = []
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(rec, dict):
            raise MalformedLine(lineno, "record is not a JSON object")
        events.append(_event_from_record(rec, lineno))

    author_kind = {ev.author.id: ev.author.kind for ev in events}
    fixed = []
    for ev in events:
        if ev.review is not None:
            kind = author_kind.get(ev.review.reviewer.id, AgentKind.HUMAN)
            if kind != ev.review.reviewer.kind:
                ev = replace_event(
                    ev,
                    review=Review(AgentId(ev.review.reviewer.id, kind), ev.review.depth),
                )
        fixed.append(ev)
    return fixed


def event_to_record(ev: CommitEvent) -> dict:
    rec = {
        "commit_id": ev.commit_id,
        "ts": ev.timestamp,
        "author": ev.author.id,
        "author_kind": ev.author.kind.value,
        "modules": sorted(ev.modules_touched),
        "ci_passed": ev.ci_passed,
        "deps_added": [list(e) for e in ev.deps_added],
        "deps_removed": [list(e) for e in ev.deps_removed],
        "parents_triggered_by": list(ev.parent_triggers),
        "quality": ev.quality_score,
        "complexity_delta": ev.complexity_delta,
        "loc_delta": ev.loc_delta,
        "rework": ev.required_rework,
    }
    if ev.review is not None:
        rec["reviewer"] = ev.review.reviewer.id
        rec["review_depth"] = ev.review.depth
    return rec


def emit_jsonl(events: Iterable[CommitEvent], stream: IO) -> None:
    """Write events in the canonical schema, one object per line."""
    for ev in events:
        stream.write(json.dumps(event_to_record(ev), sort_keys=True))
        stream.write("\n")


_HEADER_RE = re.compile(r"^H\|([^|]+)\|([^|]+)\|(.+)$")
_BINARY_MARK = "-"


def parse_git_log(
    text: str, ai_author_patterns: Iterable[str] = ()
) -> list[CommitEvent]:
    """Parse a line-oriented git history dump into partial events.

    Expected input: one header per commit, ``H|<id>|<unix-ts>|<author>``,
    followed by numstat lines ``<added>\\t<deleted>\\t<path>``. Binary files
    (``-`` markers) contribute nothing to loc_delta. Module identity is the
    first path segment.

    AI authorship is declared, not inferred: an author whose name matches
    any regex in ``ai_author_patterns`` gets kind AI. CI/review/quality
    fields are left as NoData placeholders pending merge_evidence.
    """
    patterns = [re.compile(p) for p in ai_author_patterns]
    events: list[CommitEvent] = []
    current: Optional[dict] = None

    def flush():
        if current is None:
            return
        kind = (
            AgentKind.AI
            if any(p.search(current["author"]) for p in patterns)
            else AgentKind.HUMAN
        )
        events.append(
            CommitEvent(
                commit_id=current["id"],
                timestamp=current["ts"],
                author=AgentId(current["author"], kind),
                modules_touched=frozenset(current["modules"]),
                loc_delta=current["loc"],
            )
        )

    for raw in text.splitlines():
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("H|"):
            m = _HEADER_RE.match(line)
            if not m:
                raise MalformedHeader(f"bad header line: {line!r}")
            cid, ts_str, author = m.groups()
            try:
                ts = int(ts_str)
            except ValueError as exc:
                raise MalformedHeader(f"non-numeric timestamp in {line!r}") from exc
            flush()
            current = {"id": cid, "ts": ts, "author": author, "modules": set(), "loc": 0}
        else:
            if current is None:
                raise MalformedHeader(f"numstat line before any header: {line!r}")
            parts = line.split("\t")
            if len(parts) != 3:
                raise NonNumericStat(f"bad numstat line: {line!r}")
            added_s, deleted_s, path = parts
            if added_s == _BINARY_MARK or deleted_s == _BINARY_MARK:
                continue  # binary file: no line-count contribution
            try:
                added, deleted = int(added_s), int(deleted_s)
            except ValueError as exc:
                raise NonNumericStat(f"non-numeric counts in {line!r}") from exc
            if added < 0 or deleted < 0:
                raise NonNumericStat(f"negative counts in {line!r}")
            current["loc"] += added - deleted
            current["modules"].add(path.split("/")[0])
    flush()
    return events


def parse_dep_snapshots(stream: Union[IO, Iterable[str]]) -> list[DependencySnapshot]:
    snaps = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            snaps.append(
                DependencySnapshot(
                    timestamp=int(rec["ts"]),
                    edges=frozenset((str(a), str(b)) for a, b in rec["edges"]),
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise MalformedLine(lineno, str(exc)) from exc
    return sorted(snaps, key=lambda s: s.timestamp)


def _parse_keyed_records(stream, required):
    out = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(lineno, f"invalid JSON: {exc.msg}") from exc
        for key in required:
            if key not in rec:
                raise MissingRequiredField(lineno, key)
        out.append(rec)
    return out


def parse_ci_records(stream) -> list[dict]:
    return _parse_keyed_records(stream, ("commit_id", "passed"))


def parse_review_records(stream) -> list[dict]:
    return _parse_keyed_records(stream, ("commit_id", "reviewer", "depth"))


def merge_evidence(
    git_events: list[CommitEvent],
    ci_records: list[dict] = (),
    review_records: list[dict] = (),
    dep_snapshots: list[DependencySnapshot] = (),
    quality_records: list[dict] = (),
) -> tuple[list[CommitEvent], dict]:
    """Join sidecar evidence onto git events by commit_id.

    Dependency changes between consecutive snapshots are attributed to the
    latest commit at or before the later snapshot (declared convention when
    several commits fall between snapshots). Deterministic and independent
    of source record ordering. Returns (events, report) where report lists
    unmatched sidecar records.

    Raises ConflictingEvidence when two CI records disagree for one commit.
    """
    by_id = {ev.commit_id: ev for ev in git_events}
    unmatched = {"ci": [], "review": [], "quality": []}

    ci_seen: dict[str, bool] = {}
    for rec in sorted(ci_records, key=lambda r: str(r["commit_id"])):
        cid, passed = str(rec["commit_id"]), bool(rec["passed"])
        if cid in ci_seen and ci_seen[cid] != passed:
            raise ConflictingEvidence(f"two CI outcomes for commit {cid!r}")
        ci_seen[cid] = passed
        if cid not in by_id:
            unmatched["ci"].append(cid)

    review_by_id: dict[str, dict] = {}
    for rec in sorted(review_records, key=lambda r: str(r["commit_id"])):
        cid = str(rec["commit_id"])
        if cid not in by_id:
            unmatched["review"].append(cid)
            continue
        review_by_id[cid] = rec

    quality_by_id: dict[str, float] = {}
    for rec in sorted(quality_records, key=lambda r: str(r["commit_id"])):
        cid = str(rec["commit_id"])
        if cid not in by_id:
            unmatched["quality"].append(cid)
            continue
        quality_by_id[cid] = float(rec["quality"])

    # Attribute snapshot-to-snapshot edge diffs to the latest intervening commit.
    deps_added: dict[str, list] = {}
    deps_removed: dict[str, list] = {}
    ordered = sorted(git_events, key=lambda e: (e.timestamp, e.commit_id))
    snaps = sorted(dep_snapshots, key=lambda s: s.timestamp)
    for prev, nxt in zip(snaps, snaps[1:]):
        added = sorted(nxt.edges - prev.edges)
        removed = sorted(prev.edges - nxt.edges)
        if not added and not removed:
            continue
        carrier = None
        for ev in ordered:
            if prev.timestamp < ev.timestamp <= nxt.timestamp:
                carrier = ev.commit_id
        if carrier is None:
            continue
        deps_added.setdefault(carrier, []).extend(added)
        deps_removed.setdefault(carrier, []).extend(removed)

    merged = []
    for ev in ordered:
        changes = {}
        if ev.commit_id in ci_seen:
            changes["ci_passed"] = ci_seen[ev.commit_id]
        if ev.commit_id in review_by_id:
            rec = review_by_id[ev.commit_id]
            changes["review"] = Review(
                reviewer=AgentId(str(rec["reviewer"]), AgentKind.HUMAN),
                depth=float(rec["depth"]),
            )
        if ev.commit_id in quality_by_id:
            changes["quality_score"] = quality_by_id[ev.commit_id]
        if ev.commit_id in deps_added:
            changes["deps_added"] = tuple(deps_added[ev.commit_id])
        if ev.commit_id in deps_removed:
            changes["deps_removed"] = tuple(deps_removed[ev.commit_id])
        merged.append(replace_event(ev, **changes) if changes else ev)
    return merged, unmatched
