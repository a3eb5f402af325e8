"""Linearization time T0 of a blossom loop started near the branch boundary.

For each loop size m, draws loop states with y_1 + y_m = 1 +/- delta and
reports the largest detected T0 and T0 / m^2, from both the closed-form loop
sum and the full nonlinear simulation.
"""

import argparse

import numpy as np

from netbargain import elementary as el
from netbargain.dynamics import DynamicsConfig
from netbargain.linear_model import SIGN_FLOOR, detect_linearization, loop_sum_closed_form


def closed_form_T0(m, y0, horizon):
    dev = loop_sum_closed_form(m, y0, np.arange(horizon + 1)) - 1.0
    label = np.where(dev < -SIGN_FLOOR, 1, np.where(dev > SIGN_FLOOR, 2, 0))
    decided = np.nonzero(label)[0]
    if decided.size == 0:
        return 0
    flips = decided[label[decided] != label[decided[-1]]]
    return 0 if flips.size == 0 else int(flips[-1]) + 1


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,8,16,32")
    parser.add_argument("--stem", type=int, default=2)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--delta", type=float, default=1e-3)
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'m':>4s} {'max T0 (closed)':>16s} {'max T0 (sim)':>13s} {'max T0/m^2':>11s}")
    for m in (int(s) for s in args.sizes.split(",")):
        inst = el.build(el.BlossomSpec(args.stem, m))
        horizon = 50 * inst.dim**2
        worst_closed = worst_sim = 0
        for trial in range(args.trials):
            y0 = rng.random(m)
            y0[0] = rng.uniform(0.1, 0.9)
            y0[-1] = 1.0 + (1 if trial % 2 else -1) * args.delta - y0[0]
            x0 = el.from_reduced(inst, np.r_[rng.random(args.stem), y0])
            if args.alpha == 1.0:
                worst_closed = max(worst_closed, closed_form_T0(m, y0, horizon))
            rep = detect_linearization(inst, x0, DynamicsConfig(alpha=args.alpha, horizon=horizon))
            worst_sim = max(worst_sim, rep.T0)
        print(f"{m:4d} {worst_closed:16d} {worst_sim:13d} {max(worst_closed, worst_sim) / m**2:11.3f}")


if __name__ == "__main__":
    main()
