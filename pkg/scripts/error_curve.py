#!/usr/bin/env python3
"""Worst-grid error budget before suppression and after the uniform cap pass."""

import argparse
import csv
import sys

from griddp.cli import _parse_eps_grid
from griddp.harness import ExperimentConfig, monte_carlo_error
from griddp.synth import SynthParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", default="0.1:2.0:0.1", help="lo:hi:step or comma list")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--grids", type=int, default=12)
    ap.add_argument("--users", type=int, default=4095)
    ap.add_argument("--u", type=float, default=65.0)
    ap.add_argument("--q", type=float, default=0.01)
    ap.add_argument("--heavy-gamma", type=float, default=3.0)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    params = SynthParams(
        grids=args.grids,
        users=args.users,
        bound_u=args.u,
        geometric_q=args.q,
        heavy_gamma=args.heavy_gamma,
    )
    config = ExperimentConfig(
        epsilons=tuple(_parse_eps_grid(args.eps)),
        seed=args.seed,
        trials=args.trials,
        threads=args.threads,
    )
    points = monte_carlo_error(params, config)

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["epsilon", "value", "label"])
    for p in points:
        writer.writerow([p.epsilon, p.value, p.label])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
