#!/usr/bin/env python3
"""MAE curve of a released grid mean, on a file or a synthetic dataset.

Without --data, a synthetic dataset is drawn (heavy-gamma 3) and the grid
with the most samples is evaluated.
"""

import argparse
import csv
import sys

from griddp.cli import _parse_eps_grid
from griddp.dataset import parse_dataset
from griddp.harness import ExperimentConfig, mae_eval
from griddp.rng import RngStream
from griddp.synth import SynthParams, ValueModel, generate_occupancy, generate_values


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default=None, help="user,grid,value CSV")
    ap.add_argument("--grid", default=None, help="grid token (largest if omitted)")
    ap.add_argument("--u", type=float, default=65.0)
    ap.add_argument("--eps", default="0.1:2.0:0.1", help="lo:hi:step or comma list")
    ap.add_argument(
        "--mech",
        choices=("baseline", "array_average", "levy", "quantile"),
        default="baseline",
    )
    ap.add_argument("--draws", type=int, default=10_000)
    ap.add_argument("--strategy", choices=("wrap", "best"), default="best")
    ap.add_argument("--capacity", type=int, default=None)
    ap.add_argument("--quantile-mode", choices=("fixed", "optimized"), default="fixed")
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    if args.data:
        ds = parse_dataset(args.data, args.u)
    else:
        root = RngStream(args.seed)
        params = SynthParams(bound_u=args.u, heavy_gamma=3.0)
        occ = generate_occupancy(params, root)
        ds = generate_values(occ, ValueModel(bound_u=args.u), root)
    grid = args.grid or max(ds.grids(), key=lambda g: len(ds.grid_values(g)))

    config = ExperimentConfig(
        epsilons=tuple(_parse_eps_grid(args.eps)),
        seed=args.seed,
        mechanism=args.mech,
        mae_draws=args.draws,
        threads=args.threads,
    )
    points = mae_eval(
        ds,
        grid,
        config,
        strategy=args.strategy,
        capacity=args.capacity,
        quantile_mode=args.quantile_mode,
    )

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["epsilon", "value", "label"])
    for p in points:
        writer.writerow([p.epsilon, p.value, p.label])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
