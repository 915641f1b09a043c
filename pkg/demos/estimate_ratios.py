"""Measure bilinear block products against their predicted bound.

For small random block pairs the measured product norm is compared with
the bound assembled from the block parameters; ratios below 1 everywhere
with no growth trend in any parameter is the interesting outcome.  This
is a cut-down version of what `csd bilinear` runs in full.
"""
from __future__ import annotations

import argparse

from csdlab.calibrate import FROZEN
from csdlab.nullforms import thm31_sweep, trend_slopes


def main() -> None:
    ap = argparse.ArgumentParser(description="block estimate ratio demo")
    ap.add_argument("--seed", type=int, default=int(FROZEN["thm31_seed"]))
    ap.add_argument("--max-fill", type=int, default=256)
    ap.add_argument("--top", type=int, default=12)
    args = ap.parse_args()

    rows = thm31_sweep(args.seed, Ns=(1, 2, 4, 8), Ls=(1, 4, 16, 64),
                       max_fill=args.max_fill)
    rows.sort(key=lambda r: -r["ratio"])

    print(f"{len(rows)} block configurations, seed {args.seed}")
    print(f"{'N0':>4} {'L0':>4} {'N1':>4} {'L1':>4} {'N2':>4} {'L2':>4} "
          f"{'measured':>11} {'bound':>11} {'ratio':>9}")
    for r in rows[:args.top]:
        print(f"{r['N0']:>4} {r['L0']:>4} {r['N1']:>4} {r['L1']:>4} "
              f"{r['N2']:>4} {r['L2']:>4} {r['measured']:11.4e} "
              f"{r['bound']:11.4e} {r['ratio']:9.5f}")

    worst = rows[0]["ratio"]
    print(f"\nworst ratio {worst:.5f} "
          f"(recorded ceiling {FROZEN['thm31_cemp']:.5f})")
    slopes = trend_slopes(rows, ("N0", "L0", "N1", "L1", "N2", "L2"))
    print("trend slopes (log ratio per log parameter):")
    for key, val in slopes.items():
        print(f"  {key:>3}: {val:+.4f}")


if __name__ == "__main__":
    main()
