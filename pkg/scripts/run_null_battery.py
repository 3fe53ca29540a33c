#!/usr/bin/env python3
"""False-confirmation sweep: run the proposition battery on null worlds.

Every seeded run simulates the null-world preset (all generative mechanisms
switched off) and runs the full battery against it. Any CONFIRMED verdict
is a false confirmation; a sound harness reports zero across the sweep.
"""

import argparse
import sys

from emergelab.bundles import null_battery


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=20,
                        help="number of seeded null runs")
    parser.add_argument("--alpha", type=float, default=0.05)
    args = parser.parse_args(argv)

    false_confirms = []
    for seed in range(1, args.seeds + 1):
        verdicts = null_battery(seed=seed, alpha=args.alpha)
        confirmed = sorted(pid for pid, v in verdicts.items()
                           if v.verdict == "CONFIRMED")
        line = ", ".join(f"{pid}:{verdicts[pid].verdict[:4]}"
                         for pid in sorted(verdicts))
        print(f"seed {seed:3d}  {line}")
        false_confirms.extend((seed, pid) for pid in confirmed)

    print(f"\nfalse confirmations: {len(false_confirms)} "
          f"over {args.seeds} runs x {len(verdicts)} propositions")
    for seed, pid in false_confirms:
        print(f"  seed {seed}: {pid}")
    return 1 if false_confirms else 0


if __name__ == "__main__":
    sys.exit(main())
