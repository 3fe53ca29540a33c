"""Command-line front end: simulate, ingest, measure, ei, test-propositions.

Exit codes are a stable contract: 0 success, 2 usage/validation error,
3 I/O failure, 4 conflicting evidence. All randomness flows from a single
--seed through named per-component substreams.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import bundles, coarse, ei as ei_mod, graphs, ingest, propositions as props, sim
from .errors import ConflictingEvidence, EmergelabError, EmptyLog
from .events import AgentKind, validate_event_log

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFLICT = 4


def _substream(seed: int, name: str) -> np.random.Generator:
    """Named child stream of the run-level seed."""
    digest = int.from_bytes(name.encode(), "big") % (2**31)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(digest,)))


def _load_events(path: str):
    with open(path) as fh:
        events = ingest.parse_jsonl(fh)
    if not events:
        raise EmptyLog(f"no events in {path}")
    return events


def _summary(events) -> str:
    n = len(events)
    ai = sum(1 for ev in events if ev.author.kind is AgentKind.AI)
    t0 = min(ev.timestamp for ev in events)
    t1 = max(ev.timestamp for ev in events)
    return (
        f"commits: {n}\n"
        f"ai_share: {ai / n:.3f}\n"
        f"span: {t0}..{t1} ({(t1 - t0) / 86400.0:.1f} days)"
    )


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.config is None and args.preset is None:
        print("simulate: one of --config or --preset is required", file=sys.stderr)
        return EXIT_USAGE
    if args.config is not None:
        with open(args.config) as fh:
            try:
                cfg = sim.SimConfig.from_text(fh.read())
            except (ValueError, TypeError) as exc:
                print(f"simulate: bad config: {exc}", file=sys.stderr)
                return EXIT_USAGE
    else:
        cfgs = sim.presets()
        if args.preset not in cfgs:
            print(
                f"simulate: unknown preset {args.preset!r}; "
                f"choose from {sorted(cfgs)}",
                file=sys.stderr,
            )
            return EXIT_USAGE
        cfg = cfgs[args.preset]
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)

    events, truth = sim.run(cfg)
    with open(args.out, "w") as fh:
        ingest.emit_jsonl(events, fh)
    if args.truth:
        with open(args.truth, "w") as fh:
            sim.write_truth_jsonl(truth, fh)
    print(_summary(events))
    return EXIT_OK


# -- ingest -------------------------------------------------------------------

def cmd_ingest(args) -> int:
    if args.source == "jsonl":
        events = _load_events(args.log)
    else:
        with open(args.log) as fh:
            git_events = ingest.parse_git_log(fh.read(), args.ai_authors or ())
        ci = reviews = ()
        deps = ()
        if args.ci:
            with open(args.ci) as fh:
                ci = ingest.parse_ci_records(fh)
        if args.reviews:
            with open(args.reviews) as fh:
                reviews = ingest.parse_review_records(fh)
        if args.deps:
            with open(args.deps) as fh:
                deps = ingest.parse_dep_snapshots(fh)
        events, unmatched = ingest.merge_evidence(git_events, ci, reviews, deps)
        dropped = sum(len(v) for v in unmatched.values())
        if dropped:
            print(f"unmatched sidecar records: {dropped}", file=sys.stderr)
    events = validate_event_log(events)
    with open(args.out, "w") as fh:
        ingest.emit_jsonl(events, fh)
    print(_summary(events))
    return EXIT_OK


# -- measure ------------------------------------------------------------------

def cmd_measure(args) -> int:
    events = _load_events(args.events)
    events = validate_event_log(events)
    series = coarse.build_series(events, dt=args.dt)
    if args.out_series:
        coarse.write_series_csv(series, args.out_series)
    if args.out_tensor:
        coarse.write_tensor_csv(series, args.out_tensor)
    if args.out_cascades:
        cascades = graphs.extract_cascades(events)
        graphs.write_cascades_csv(cascades, events, args.out_cascades)
    print(f"windows: {len(series.windows)}")
    return EXIT_OK


# -- ei -----------------------------------------------------------------------

def cmd_ei(args) -> int:
    if args.bins < 2:
        print("ei: --bins must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    if args.budget < 2:
        print("ei: --budget must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    _, macro, micro, _ = coarse.read_series_csv(args.series)
    macro_seq, _ = ei_mod.discretize(macro, k=args.bins)
    micro_seq, _ = ei_mod.compress_micro(micro, budget=args.budget, bins=2)
    result = ei_mod.causal_emergence(
        micro_seq,
        macro_seq,
        n_boot=args.bootstrap,
        rng=_substream(args.seed, "ei"),
        bins=args.bins,
    )
    with open(args.out, "w") as fh:
        fh.write(result.to_json())
        fh.write("\n")
    print(f"ce: {result.ce:.4f} bits ({result.classification})")
    return EXIT_OK


# -- test-propositions --------------------------------------------------------

_ALL_PROPS = ("p1", "p2", "p3", "p4", "p5", "p6", "p7")


def _read_columns_csv(path: str, n_cols: int) -> list[np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    if names is None or len(names) < n_cols:
        raise EmergelabError(f"{path}: expected at least {n_cols} named columns")
    return [np.atleast_1d(data[name]).astype(float) for name in names[:n_cols]]


def _entropy_column(path: str) -> np.ndarray:
    _, macro, _, _ = coarse.read_series_csv(path)
    return macro[:, coarse.MACRO_COLUMNS.index("E") - 1]


def _explicit_verdicts(args, rng) -> dict[str, props.PropositionVerdict]:
    wanted = args.propositions
    out: dict[str, props.PropositionVerdict] = {}
    alpha = args.alpha
    events = _load_events(args.events) if args.events else None

    for pid in wanted:
        if pid == "p1":
            if not (args.series_high and args.series_low):
                raise _MissingInput("p1 needs --series-high and --series-low")
            high = [_entropy_column(p) for p in args.series_high]
            low = [_entropy_column(p) for p in args.series_low]
            out["P1"] = props.p1_entropy_slopes(high, low, alpha=alpha, rng=rng)
        elif pid == "p2":
            if not args.ratio_csv:
                raise _MissingInput("p2 needs --ratio-csv (columns r,reliability)")
            r, rel = _read_columns_csv(args.ratio_csv, 2)
            out["P2"] = props.p2_changepoint(r, rel, alpha=alpha, rng=rng)
        elif pid == "p3":
            if events is None:
                raise _MissingInput("p3 needs --events")
            out["P3"] = props.p3_emergence(
                events, dt=args.dt, bins=args.bins, budget=args.budget,
                alpha=alpha, rng=rng,
            )
        elif pid == "p4":
            if not args.levels_csv:
                raise _MissingInput("p4 needs --levels-csv (columns n,rate)")
            n_col, rate_col = _read_columns_csv(args.levels_csv, 2)
            grouped: dict[float, list[float]] = {}
            for n, rate in zip(n_col, rate_col):
                grouped.setdefault(float(n), []).append(float(rate))
            out["P4"] = props.p4_powerlaw(sorted(grouped.items()), alpha=alpha, rng=rng)
        elif pid == "p5":
            if not args.feedback_csv:
                raise _MissingInput(
                    "p5 needs --feedback-csv (columns intervention,rules,capability)"
                )
            iv, rules, cap = _read_columns_csv(args.feedback_csv, 3)
            out["P5"] = props.p5_feedback(iv, rules, cap, alpha=alpha)
        elif pid == "p6":
            if events is None:
                raise _MissingInput("p6 needs --events")
            out["P6"] = props.p6_comprehension(events, dt=args.dt, alpha=alpha)
        elif pid == "p7":
            if events is None:
                raise _MissingInput("p7 needs --events")
            occ, clu, den = bundles.window_topology(events, args.dt)
            out["P7"] = props.p7_cascade_topology(occ, clu, den, alpha=alpha)
    return out


class _MissingInput(Exception):
    pass


def _write_plots(verdicts, args, plots_dir: str) -> None:
    import os

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(plots_dir, exist_ok=True)
    for pid, v in verdicts.items():
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if pid == "P3":
            ax.bar(
                ["EI micro", "EI macro"],
                [v.statistics.get("ei_micro", 0), v.statistics.get("ei_macro", 0)],
            )
            ax.set_ylabel("bits")
        else:
            keys = list(v.statistics)[:6]
            ax.bar(keys, [v.statistics[k] for k in keys])
            ax.tick_params(axis="x", rotation=45)
        ax.set_title(f"{pid}: {v.verdict}")
        fig.tight_layout()
        fig.savefig(os.path.join(plots_dir, f"{pid.lower()}.svg"))
        plt.close(fig)


def cmd_test_propositions(args) -> int:
    rng = _substream(args.seed, "propositions")
    if args.bundle:
        kind = args.bundle
        if kind in ("supercritical", "high-agent"):
            verdicts = bundles.positive_battery(
                seed=args.seed, alpha=args.alpha, quick=args.quick
            )
        elif kind in ("null", "null-world"):
            verdicts = bundles.null_battery(seed=args.seed, alpha=args.alpha)
        else:
            print(f"test-propositions: unknown bundle {kind!r}", file=sys.stderr)
            return EXIT_USAGE
        verdicts = {
            k: v for k, v in verdicts.items() if k.lower() in args.propositions
        }
    else:
        try:
            verdicts = _explicit_verdicts(args, rng)
        except _MissingInput as exc:
            print(f"test-propositions: {exc}", file=sys.stderr)
            return EXIT_USAGE

    report = props.verdicts_to_json(
        list(verdicts.values()), alpha=args.alpha, seed=args.seed
    )
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report)
            fh.write("\n")
    if args.plots:
        _write_plots(verdicts, args, args.plots)
    for pid in sorted(verdicts):
        print(f"{pid}: {verdicts[pid].verdict}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emergelab",
        description="Causal-emergence laboratory for mixed human/AI commit histories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic commit log")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--preset", help="named preset configuration")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="canonical JSONL output path")
    p.add_argument("--truth", help="optional ground-truth JSONL path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="parse raw history into canonical JSONL")
    p.add_argument("source", choices=("git", "jsonl"))
    p.add_argument("--log", required=True, help="git dump or JSONL input")
    p.add_argument("--ci", help="CI sidecar JSONL (commit_id, passed)")
    p.add_argument("--reviews", help="review sidecar JSONL (commit_id, reviewer, depth)")
    p.add_argument("--deps", help="dependency snapshot JSONL (ts, edges)")
    p.add_argument(
        "--ai-authors", nargs="*", default=[],
        help="regex patterns marking AI authors",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("measure", help="coarse-grain a log into state series")
    p.add_argument("--events", required=True)
    p.add_argument("--dt", type=int, default=86400, help="window length in seconds")
    p.add_argument("--out-series", help="macro+micro series CSV")
    p.add_argument("--out-tensor", help="communication tensor CSV")
    p.add_argument("--out-cascades", help="cascade summary CSV")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("ei", help="effective information / causal emergence")
    p.add_argument("--series", required=True, help="series CSV from `measure`")
    p.add_argument("--bins", type=int, default=4)
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--bootstrap", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(func=cmd_ei)

    p = sub.add_parser("test-propositions", help="run the proposition battery")
    p.add_argument(
        "--propositions", default=",".join(_ALL_PROPS),
        help="comma-separated subset, e.g. p1,p4",
    )
    p.add_argument("--bundle", help="generate inputs from a simulation bundle "
                                    "(supercritical | null)")
    p.add_argument("--quick", action="store_true",
                   help="smaller bundle runs (faster, less power)")
    p.add_argument("--events", help="canonical JSONL log (p3, p6, p7)")
    p.add_argument("--series-high", nargs="*", help="series CSVs, agent-intensive group (p1)")
    p.add_argument("--series-low", nargs="*", help="series CSVs, low-agent group (p1)")
    p.add_argument("--ratio-csv", help="CSV with columns r,reliability (p2)")
    p.add_argument("--levels-csv", help="CSV with columns n,rate (p4)")
    p.add_argument("--feedback-csv",
                   help="CSV with columns intervention,rules,capability (p5)")
    p.add_argument("--dt", type=int, default=86400)
    p.add_argument("--bins", type=int, default=4)
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="verdict JSON output path")
    p.add_argument("--plots", help="directory for SVG plots")
    p.set_defaults(func=cmd_test_propositions)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "propositions", None) is not None and isinstance(
        args.propositions, str
    ):
        args.propositions = [
            p.strip().lower() for p in args.propositions.split(",") if p.strip()
        ]
        unknown = set(args.propositions) - set(_ALL_PROPS)
        if unknown:
            print(f"unknown propositions: {sorted(unknown)}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except ConflictingEvidence as exc:
        print(f"error: conflicting evidence: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except EmergelabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
