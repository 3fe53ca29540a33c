#!/usr/bin/env python3
"""Run the positive-control proposition battery and write a verdict report.

The battery simulates the agent-intensive regimes (supercritical ratio,
high AI share), measures them, and runs all seven proposition tests. Expect
P1, P2, P4, P5 and P7 to come back CONFIRMED on healthy seeds.
"""

import argparse
import sys

from emergelab import propositions as props
from emergelab.bundles import positive_battery


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--quick", action="store_true",
                        help="shorter simulations (faster, less power)")
    parser.add_argument("--report", help="verdict JSON output path")
    args = parser.parse_args(argv)

    verdicts = positive_battery(seed=args.seed, alpha=args.alpha, quick=args.quick)
    for pid in sorted(verdicts):
        v = verdicts[pid]
        extras = "; ".join(v.notes) if v.notes else ""
        print(f"{pid}: {v.verdict}" + (f"  [{extras}]" if extras else ""))
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(props.verdicts_to_json(
                list(verdicts.values()), alpha=args.alpha, seed=args.seed))
            fh.write("\n")
        print(f"report written to {args.report}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
