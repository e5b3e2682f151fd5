"""Command line surface.

Subcommands cover the full pipeline: dataset statistics, sensitivity and
bias calculators, private releases, the suppression routine, synthetic
data, Monte Carlo curves, MAE curves, and scaling-law checks. Output is
CSV by default or JSON with --format json, written to stdout or --out.

Randomized subcommands require --seed, either on the command line or via
--config, a file of KEY=VALUE lines supplying defaults for any option
(command-line values win). Identical inputs and seed produce byte
identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .composition import clip_user
from .dataset import grid_stats, parse_dataset, parse_occupancy
from .errors import GridDPError, IoError, UsageError
from .grouping import STRATEGY_BEST, STRATEGY_WRAP
from .harness import (
    ExperimentConfig,
    check_scaling_laws,
    mae_eval,
    monte_carlo_error,
    monte_carlo_privacy,
)
from .mechanisms import (
    QUANTILE_FIXED,
    QUANTILE_OPTIMIZED,
    MechanismParams,
    clip_release,
    release,
)
from .rng import RngStream
from .sensitivity import (
    clipped_mean_sensitivity,
    clipped_variance_sensitivity,
    mean_sensitivity,
    variance_sensitivity,
)
from .synth import SynthParams, ValueModel, generate_occupancy, generate_values
from .worst_case_bias import mean_bias, variance_bias

RANDOMIZED = {"mechanism", "synth", "montecarlo", "mae"}

MECHANISM_CHOICES = ("baseline", "clip", "array_average", "levy", "quantile")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def _parse_eps_grid(text: str) -> list[float]:
    """Either "lo:hi:step" (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            lo_s, hi_s, step_s = text.split(":")
            lo, hi, step = float(lo_s), float(hi_s), float(step_s)
            if step <= 0:
                raise ValueError
            n = int((hi - lo) / step + 1e-9) + 1
            return [round(lo + i * step, 10) for i in range(n)]
        return [float(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"cannot parse epsilon grid {text!r}") from None


def _coerce(value: str):
    low = value.strip()
    if low.lower() in ("true", "false"):
        return low.lower() == "true"
    for cast in (int, float):
        try:
            return cast(low)
        except ValueError:
            continue
    return low


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected KEY=VALUE, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = _coerce(value)
    return out


def _emit(args, rows: list[dict], fields: list[str], json_obj=None) -> None:
    if args.format == "json":
        payload = json_obj if json_obj is not None else rows
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields, restval="", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
        text = buf.getvalue()
    if args.out and args.out != "-":
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(f"cannot write {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _cmd_stats(args) -> None:
    ds = parse_dataset(args.data, args.u)
    grids = [args.grid] if args.grid else ds.grids()
    rows = []
    for g in grids:
        st = grid_stats(ds, g)
        rows.append(
            {"grid": st.grid, "n": st.n, "mean": st.mean, "variance": st.variance}
        )
    _emit(args, rows, ["grid", "n", "mean", "variance"])


def _cmd_sensitivity(args) -> None:
    counts = _parse_int_list(args.counts)
    rows = []
    for rep, scope in (
        (mean_sensitivity(counts, args.u), "full"),
        (variance_sensitivity(counts, args.u), "full"),
    ):
        rows.append(
            {"target": rep.target, "scope": scope, "value": rep.value, "branch": rep.branch}
        )
    if args.retained is not None:
        gammas = _parse_int_list(args.retained)
        for rep in (
            clipped_mean_sensitivity(gammas, args.u),
            clipped_variance_sensitivity(gammas, args.u),
        ):
            rows.append(
                {
                    "target": rep.target,
                    "scope": "clipped",
                    "value": rep.value,
                    "branch": rep.branch,
                }
            )
    _emit(args, rows, ["target", "scope", "value", "branch"])


def _cmd_bias(args) -> None:
    counts = _parse_int_list(args.counts)
    gammas = _parse_int_list(args.retained)
    rows = []
    for rep in (
        mean_bias(counts, gammas, args.u),
        variance_bias(counts, gammas, args.u),
    ):
        rows.append({"target": rep.target, "value": rep.value, "branch": rep.branch})
    _emit(args, rows, ["target", "value", "branch"])


def _load_plan(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read plan {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"plan {path} is not valid JSON: {exc}") from None
    if isinstance(obj, dict) and "plan" in obj:
        obj = obj["plan"]
    if not isinstance(obj, dict):
        raise UsageError(f"plan {path} must be a grid -> user -> count mapping")
    return obj


def _cmd_mechanism(args) -> None:
    ds = parse_dataset(args.data, args.u)
    params = MechanismParams(
        bound_u=args.u,
        epsilon=args.eps,
        gamma=args.gamma,
        strategy=args.strategy,
        capacity=args.capacity,
        quantile_mode=args.quantile_mode,
    )
    plan = _load_plan(args.plan) if args.plan else None
    if plan is not None and args.mech != "clip":
        raise UsageError("--plan only applies to the clip mechanism")
    grids = [args.grid] if args.grid else ds.grids()
    root = RngStream(args.seed)
    rows = []
    for g in grids:
        sub = root.split(f"grid:{g}")
        if args.mech == "clip" and plan is not None:
            out = clip_release(ds, g, {u: int(c) for u, c in plan.get(g, {}).items()}, params, sub)
        else:
            out = release(ds, g, args.mech, params, sub)
        rows.append(
            {
                "grid": out.grid,
                "mechanism": out.mechanism,
                "noisy_mean": out.noisy_mean,
                "noise_scale_mean": out.noise_scale_mean,
                "noisy_variance": out.noisy_variance,
                "noise_scale_var": out.noise_scale_var,
                "interval_a": out.interval[0] if out.interval else None,
                "interval_b": out.interval[1] if out.interval else None,
                "arrays": out.arrays,
                "degenerate_ranks": out.degenerate_ranks,
            }
        )
    _emit(
        args,
        rows,
        [
            "grid",
            "mechanism",
            "noisy_mean",
            "noise_scale_mean",
            "noisy_variance",
            "noise_scale_var",
            "interval_a",
            "interval_b",
            "arrays",
            "degenerate_ranks",
        ],
    )


def _cmd_clip_user(args) -> None:
    occ = parse_occupancy(args.occupancy)
    res = clip_user(occ, args.u, args.eps, args.protect_min_grid)
    rows = [
        {"record": "summary", "k_factor": res.k_factor, "error_cap": res.error_cap}
    ]
    for s in res.trace:
        rows.append(
            {
                "record": "suppression",
                "stage": s.stage,
                "user": s.user,
                "grid": s.grid,
                "error": s.error,
            }
        )
    for g in occ.grids():
        rows.append(
            {
                "record": "grid",
                "grid": g,
                "initial": res.initial_errors[g].total,
                "final": res.per_grid_errors[g].total,
            }
        )
    json_obj = {
        "k_factor": res.k_factor,
        "error_cap": res.error_cap,
        "trace": [
            {"stage": s.stage, "user": s.user, "grid": s.grid, "error": s.error}
            for s in res.trace
        ],
        "initial_errors": {g: res.initial_errors[g].total for g in occ.grids()},
        "per_grid_errors": {g: res.per_grid_errors[g].total for g in occ.grids()},
        "plan": {g: res.plan.retained[g] for g in occ.grids()},
    }
    _emit(
        args,
        rows,
        ["record", "stage", "user", "grid", "error", "k_factor", "error_cap", "initial", "final"],
        json_obj,
    )


def _cmd_synth(args) -> None:
    params = SynthParams(
        grids=args.grids,
        users=args.users,
        bound_u=args.u,
        geometric_q=args.q,
        heavy_gamma=args.heavy_gamma,
    )
    root = RngStream(args.seed)
    occ = generate_occupancy(params, root)
    if args.values:
        model = ValueModel(mean=args.mu, variance=args.sigma2, bound_u=args.u)
        ds = generate_values(occ, model, root)
        rows = [
            {"user": u, "grid": g, "value": v}
            for g in ds.grids()
            for u in ds.users_in(g)
            for v in ds.values(g, u)
        ]
        rows.sort(key=lambda r: (r["user"], r["grid"]))
        _emit(args, rows, ["user", "grid", "value"])
        return
    rows = [
        {"user": u, "grid": g, "count": occ.count(g, u)}
        for g in occ.grids()
        for u in occ.users_in(g)
    ]
    rows.sort(key=lambda r: (r["user"], r["grid"]))
    _emit(args, rows, ["user", "grid", "count"])


def _cmd_montecarlo(args) -> None:
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
        protect_min_error_grid=not args.no_protect,
        threads=args.threads,
    )
    points = (
        monte_carlo_privacy(params, config)
        if args.mode == "privacy"
        else monte_carlo_error(params, config)
    )
    rows = [
        {"epsilon": p.epsilon, "value": p.value, "label": p.label} for p in points
    ]
    _emit(args, rows, ["epsilon", "value", "label"])


def _cmd_mae(args) -> None:
    ds = parse_dataset(args.data, args.u)
    config = ExperimentConfig(
        epsilons=tuple(_parse_eps_grid(args.eps)),
        seed=args.seed,
        trials=1,
        mechanism=args.mech,
        mae_draws=args.draws,
        threads=args.threads,
    )
    points = mae_eval(
        ds,
        args.grid,
        config,
        gamma=args.gamma,
        strategy=args.strategy,
        capacity=args.capacity,
        quantile_mode=args.quantile_mode,
    )
    rows = [
        {"epsilon": p.epsilon, "value": p.value, "label": p.label} for p in points
    ]
    _emit(args, rows, ["epsilon", "value", "label"])


def _cmd_scaling(args) -> None:
    checks = check_scaling_laws(
        _parse_int_list(args.counts), _parse_int_list(args.lambdas), bound_u=args.u
    )
    rows = [
        {
            "law": c.law,
            "mode": c.mode,
            "lam": c.lam,
            "passed": c.passed,
            "detail": c.detail,
        }
        for c in checks
    ]
    _emit(args, rows, ["law", "mode", "lam", "passed", "detail"])


def _add_common(sp, randomized: bool) -> None:
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", default="-", help="output path, - for stdout")
    sp.add_argument("--config", default=None, help="KEY=VALUE defaults file")
    if randomized:
        sp.add_argument("--seed", type=int, default=None, help="rng seed (required)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="griddp",
        description="user-level DP releases over grid-partitioned data",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    table = {}

    sp = sub.add_parser("stats", help="per-grid sample statistics")
    sp.add_argument("--data", required=True)
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--grid", default=None)
    sp.set_defaults(handler=_cmd_stats)
    table["stats"] = sp

    sp = sub.add_parser("sensitivity", help="mean/variance sensitivities")
    sp.add_argument("--counts", required=True)
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--retained", default=None)
    sp.set_defaults(handler=_cmd_sensitivity)
    table["sensitivity"] = sp

    sp = sub.add_parser("bias", help="worst-case clipping bias")
    sp.add_argument("--counts", required=True)
    sp.add_argument("--retained", required=True)
    sp.add_argument("--u", type=float, required=True)
    sp.set_defaults(handler=_cmd_bias)
    table["bias"] = sp

    sp = sub.add_parser("mechanism", help="private release of grid statistics")
    sp.add_argument("--data", required=True)
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--mech", choices=MECHANISM_CHOICES, required=True)
    sp.add_argument("--grid", default=None)
    sp.add_argument("--strategy", choices=(STRATEGY_WRAP, STRATEGY_BEST), default=STRATEGY_BEST)
    sp.add_argument("--capacity", type=int, default=None)
    sp.add_argument("--gamma", type=float, default=0.2)
    sp.add_argument(
        "--quantile-mode", choices=(QUANTILE_FIXED, QUANTILE_OPTIMIZED), default=QUANTILE_FIXED
    )
    sp.add_argument("--plan", default=None, help="JSON retention plan (clip only)")
    sp.set_defaults(handler=_cmd_mechanism)
    table["mechanism"] = sp

    sp = sub.add_parser("clip-user", help="iterative user suppression")
    sp.add_argument("--occupancy", required=True)
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--protect-min-grid", action="store_true")
    sp.set_defaults(handler=_cmd_clip_user)
    table["clip-user"] = sp

    sp = sub.add_parser("synth", help="synthetic occupancy or dataset")
    sp.add_argument("--grids", type=int, default=12)
    sp.add_argument("--users", type=int, default=4095)
    sp.add_argument("--u", type=float, default=65.0)
    sp.add_argument("--q", type=float, default=0.01)
    sp.add_argument("--heavy-gamma", type=float, default=0.0)
    sp.add_argument("--values", action="store_true", help="emit sample values")
    sp.add_argument("--mu", type=float, default=20.66769)
    sp.add_argument("--sigma2", type=float, default=115.135)
    sp.set_defaults(handler=_cmd_synth)
    table["synth"] = sp

    sp = sub.add_parser("montecarlo", help="privacy/error curves on synthetic draws")
    sp.add_argument("--mode", choices=("privacy", "error"), required=True)
    sp.add_argument("--eps", required=True, help="lo:hi:step or comma list")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--grids", type=int, default=12)
    sp.add_argument("--users", type=int, default=4095)
    sp.add_argument("--u", type=float, default=65.0)
    sp.add_argument("--q", type=float, default=0.01)
    sp.add_argument("--heavy-gamma", type=float, default=0.0)
    sp.add_argument("--no-protect", action="store_true")
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(handler=_cmd_montecarlo)
    table["montecarlo"] = sp

    sp = sub.add_parser("mae", help="mean absolute error curve for one grid")
    sp.add_argument("--data", required=True)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--eps", required=True, help="lo:hi:step or comma list")
    sp.add_argument("--mech", choices=MECHANISM_CHOICES, default="baseline")
    sp.add_argument("--draws", type=int, default=10_000)
    sp.add_argument("--strategy", choices=(STRATEGY_WRAP, STRATEGY_BEST), default=STRATEGY_BEST)
    sp.add_argument("--capacity", type=int, default=None)
    sp.add_argument("--gamma", type=float, default=0.2)
    sp.add_argument(
        "--quantile-mode", choices=(QUANTILE_FIXED, QUANTILE_OPTIMIZED), default=QUANTILE_FIXED
    )
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(handler=_cmd_mae)
    table["mae"] = sp

    sp = sub.add_parser("scaling", help="grouping scaling-law checks")
    sp.add_argument("--counts", required=True)
    sp.add_argument("--lambdas", required=True)
    sp.add_argument("--u", type=float, default=1.0)
    sp.set_defaults(handler=_cmd_scaling)
    table["scaling"] = sp

    for name, sp in table.items():
        _add_common(sp, name in RANDOMIZED)
    return parser, table


def cli_main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, table = _build_parser()
    try:
        # Config files supply defaults, so they must be loaded pre-parse.
        if "--config" in argv:
            idx = argv.index("--config")
            if idx + 1 >= len(argv):
                parser.error("--config needs a path")
            mapping = _load_config(argv[idx + 1])
            for sp in table.values():
                sp.set_defaults(**mapping)
        args = parser.parse_args(argv)
        if args.command in RANDOMIZED and args.seed is None:
            raise UsageError("--seed is required (on the command line or via --config)")
        args.handler(args)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GridDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
