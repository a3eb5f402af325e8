"""Convergence time against size for each elementary family.

Writes one scan CSV and fit summary per family into --outdir and prints a
compact table. Example:

    python3 scripts/convergence_scaling.py --outdir results/scaling
"""

import argparse
import json
from pathlib import Path

from netbargain.cli import ScanPlan, run_scan, scan_csv

SCANS = {
    "path": ("path", "n", (8, 16, 32, 64), 1.0),
    "cycle_half": ("cycle", "n", (8, 16, 32, 64), 0.5),
    "cycle_odd": ("cycle", "n", (9, 17, 33, 65), 1.0),
    "blossom_even": ("blossom:n=2,m=2", "m", (4, 8, 16, 32), 1.0),
    "blossom_odd": ("blossom:n=2,m=3", "m", (5, 9, 17, 33), 1.0),
    "bicycle_one_even": ("bicycle:l=3,n=2,m=2", "m", (4, 8, 16, 32), 1.0),
    "bicycle_both_odd": ("bicycle:l=3,n=2,m=3", "m", (5, 9, 17, 33), 1.0),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="results/scaling")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--horizon", type=int, default=200_000)
    parser.add_argument("--only", nargs="*", choices=sorted(SCANS))
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in args.only or SCANS:
        base, vary, sizes, alpha = SCANS[name]
        plan = ScanPlan(base, vary, sizes, alpha=alpha, horizon=args.horizon, seed=args.seed)
        rows, fit = run_scan(plan)
        (outdir / f"{name}.csv").write_text(scan_csv(plan, rows))
        (outdir / f"{name}.fit.json").write_text(json.dumps(fit, indent=1) + "\n")
        ratios = " ".join("-" if r is None else f"{r:.3f}" for r in fit["ratios_empirical"])
        p = fit["exponent_empirical"]
        print(f"{name:16s} p={'-' if p is None else f'{p:.3f}':>6s}  T_emp/T_asym: {ratios}")


if __name__ == "__main__":
    main()
