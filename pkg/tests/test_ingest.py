"""Parsers: canonical JSONL, git dumps, sidecar evidence merging."""

import io
import json

import pytest

from emergelab import ingest
from emergelab.errors import (
    ConflictingEvidence,
    MalformedHeader,
    MalformedLine,
    MissingRequiredField,
    NonNumericStat,
)
from emergelab.events import AgentKind


def record(cid="c1", ts=0, author="alice", kind="HUMAN", **kw):
    rec = {
        "commit_id": cid, "ts": ts, "author": author, "author_kind": kind,
        "modules": ["core"], "ci_passed": True,
    }
    rec.update(kw)
    return rec


def to_stream(records):
    return io.StringIO("\n".join(json.dumps(r) for r in records) + "\n")


class TestParseJsonl:
    def test_minimal_record(self):
        (event,) = ingest.parse_jsonl(to_stream([record()]))
        assert event.commit_id == "c1"
        assert event.author.kind is AgentKind.HUMAN
        assert event.modules_touched == frozenset({"core"})

    def test_missing_required_field_names_line(self):
        rec = record()
        del rec["modules"]
        stream = to_stream([record(cid="c0"), rec])
        with pytest.raises(MissingRequiredField) as exc:
            ingest.parse_jsonl(stream)
        assert "line 2" in str(exc.value)
        assert "modules" in str(exc.value)

    def test_invalid_json_names_line(self):
        stream = io.StringIO(json.dumps(record()) + "\nnot json\n")
        with pytest.raises(MalformedLine) as exc:
            ingest.parse_jsonl(stream)
        assert "line 2" in str(exc.value)

    def test_unknown_fields_ignored(self):
        (event,) = ingest.parse_jsonl(to_stream([record(banana=42)]))
        assert event.commit_id == "c1"

    def test_reviewer_kind_resolved_from_authorship(self):
        records = [
            record(cid="c1", author="bot", kind="AI"),
            record(cid="c2", author="amy", reviewer="bot", review_depth=0.7),
        ]
        events = ingest.parse_jsonl(to_stream(records))
        assert events[1].review.reviewer.kind is AgentKind.AI

    def test_round_trip_preserves_events(self):
        records = [
            record(cid="c1", author="bot", kind="AI", deps_added=[["a", "b"]],
                   quality=0.75, loc_delta=12, complexity_delta=1.5),
            record(cid="c2", ts=10, reviewer="amy", review_depth=0.5,
                   parents_triggered_by=["c1"], rework=True, ci_passed=False),
        ]
        events = ingest.parse_jsonl(to_stream(records))
        buf = io.StringIO()
        ingest.emit_jsonl(events, buf)
        buf.seek(0)
        assert ingest.parse_jsonl(buf) == events


GIT_FIXTURE = """\
H|abc1|1000|alice
3\t1\tcore/main.py
2\t0\tdocs/readme.md

H|abc2|2000|codex-bot
10\t5\tcore/util.py
-\t-\tassets/logo.png
"""


class TestParseGitLog:
    def test_parses_headers_and_numstat(self):
        events = ingest.parse_git_log(GIT_FIXTURE, ai_author_patterns=[r"bot$"])
        assert len(events) == 2
        first, second = events
        assert first.loc_delta == (3 - 1) + (2 - 0)
        assert first.modules_touched == frozenset({"core", "docs"})
        assert first.author.kind is AgentKind.HUMAN
        assert second.author.kind is AgentKind.AI
        assert second.loc_delta == 5  # binary file ignored

    def test_bad_header(self):
        with pytest.raises(MalformedHeader):
            ingest.parse_git_log("H|onlytwo|fields\n")

    def test_non_numeric_stat(self):
        with pytest.raises(NonNumericStat):
            ingest.parse_git_log("H|c1|5|amy\nx\t1\tcore/a.py\n")

    def test_stat_before_header(self):
        with pytest.raises(MalformedHeader):
            ingest.parse_git_log("1\t2\tcore/a.py\n")


class TestMergeEvidence:
    def _git_events(self):
        text = "H|c1|100|amy\n1\t0\tcore/a.py\nH|c2|200|amy\n1\t0\tweb/b.py\n"
        return ingest.parse_git_log(text)

    def test_ci_and_review_joined(self):
        events, unmatched = ingest.merge_evidence(
            self._git_events(),
            ci_records=[{"commit_id": "c1", "passed": False}],
            review_records=[{"commit_id": "c2", "reviewer": "bob", "depth": 0.8}],
        )
        by_id = {e.commit_id: e for e in events}
        assert by_id["c1"].ci_passed is False
        assert by_id["c2"].review.depth == 0.8
        assert unmatched == {"ci": [], "review": [], "quality": []}

    def test_conflicting_ci_raises(self):
        with pytest.raises(ConflictingEvidence):
            ingest.merge_evidence(
                self._git_events(),
                ci_records=[
                    {"commit_id": "c1", "passed": True},
                    {"commit_id": "c1", "passed": False},
                ],
            )

    def test_duplicate_agreeing_ci_ok(self):
        events, _ = ingest.merge_evidence(
            self._git_events(),
            ci_records=[
                {"commit_id": "c1", "passed": True},
                {"commit_id": "c1", "passed": True},
            ],
        )
        assert events[0].ci_passed is True

    def test_unmatched_records_reported(self):
        _, unmatched = ingest.merge_evidence(
            self._git_events(),
            ci_records=[{"commit_id": "ghost", "passed": True}],
        )
        assert unmatched["ci"] == ["ghost"]

    def test_snapshot_diff_attributed_to_latest_intervening_commit(self):
        snaps = [
            ingest.DependencySnapshot(timestamp=50, edges=frozenset()),
            ingest.DependencySnapshot(
                timestamp=250, edges=frozenset({("core", "web")})
            ),
        ]
        events, _ = ingest.merge_evidence(self._git_events(), dep_snapshots=snaps)
        by_id = {e.commit_id: e for e in events}
        assert by_id["c2"].deps_added == (("core", "web"),)
        assert by_id["c1"].deps_added == ()

    def test_merge_is_order_independent(self):
        ci = [{"commit_id": "c2", "passed": False}, {"commit_id": "c1", "passed": True}]
        a, _ = ingest.merge_evidence(self._git_events(), ci_records=ci)
        b, _ = ingest.merge_evidence(self._git_events(), ci_records=ci[::-1])
        assert a == b
