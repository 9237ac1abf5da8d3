"""Command-line front end.

Subcommands ``estimate``, ``fig1``, ``fig2``, ``cutoff`` and ``simulate``.
Tables are written as CSV (``#``-prefixed config echo, then a header row)
or as a single JSON document. Exit codes: 0 success, 1 invalid input,
2 infeasible observables (abort).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from . import __version__, keyrate, montecarlo
from .b92model import ProtocolParams, depolarizing_loss_channel, observables
from .estimator import BoundInput, bound_from_observables, phase_bound

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2

FIG1_COLUMNS = ["overlap_sq", "est_ph_ratio", "actual_ph_ratio", "bit_ratio"]
FIG2_COLUMNS = ["L", "p", "best_G", "best_overlap_sq", "row_type"]
CUTOFF_COLUMNS = ["L", "gamma_mode", "p_cutoff"]
ESTIMATE_COLUMNS = ["alpha2", "overlap_sq", "gamma", "loss", "err_rate", "fil_rate", "ph_bound", "ratio", "feasible"]


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _json_value(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return float(f"{v:.12g}") if math.isfinite(v) else None


def render(columns: Sequence[str], rows: Sequence[Sequence], config: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        doc = {
            "version": __version__,
            "config": {k: _json_value(v) if not isinstance(v, list) else v for k, v in config.items()},
            "columns": list(columns),
            "rows": [[_json_value(v) for v in row] for row in rows],
        }
        return json.dumps(doc, indent=1) + "\n"
    out = io.StringIO()
    out.write(f"# b92qkd {__version__}\n")
    for k, v in config.items():
        out.write(f"# {k}={v if isinstance(v, list) else fmt(v)}\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")
    return out.getvalue()


def emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _unit(name: str, v: float | None, closed: bool = True) -> None:
    if v is None:
        return
    ok = 0.0 <= v <= 1.0 if closed else 0.0 < v < 1.0
    if not ok or math.isnan(v):
        raise InputError(f"--{name} must lie in {'[0, 1]' if closed else '(0, 1)'}, got {v}")


def resolve_params(args) -> ProtocolParams:
    if (args.alpha2 is None) == (args.overlap2 is None):
        raise InputError("give exactly one of --alpha2 or --overlap2")
    try:
        if args.alpha2 is not None:
            return ProtocolParams.from_alpha2(args.alpha2, gamma_mode=args.gamma_mode)
        return ProtocolParams.from_overlap2(args.overlap2, gamma_mode=args.gamma_mode)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*items)))


# ---- estimate ------------------------------------------------------------


def cmd_estimate(args) -> int:
    params = resolve_params(args)
    _unit("loss", args.loss)
    _unit("p", args.p)
    config = {"subcommand": "estimate", "alpha2": params.alpha2, "gamma_mode": args.gamma_mode, "gamma": params.gamma}
    if args.channel is not None:
        if args.err_rate is not None or args.fil_rate is not None:
            raise InputError("--channel derives the rates; do not also give --err-rate/--fil-rate")
        if args.p is None:
            raise InputError("--channel depol needs --p")
        loss = args.loss or 0.0
        obs = observables(depolarizing_loss_channel(loss, args.p, args.convention), params)
        config.update(channel=args.channel, p=args.p, loss=loss, convention=args.convention)
        bound = bound_from_observables(obs, params)
        loss_v, err, fil = obs.loss_L, obs.err_rate, obs.fil_rate
    else:
        if args.loss is None or args.err_rate is None or args.fil_rate is None:
            raise InputError("give --loss, --err-rate and --fil-rate, or --channel depol with --p")
        try:
            inp = BoundInput(args.loss, args.err_rate, args.fil_rate, params)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        config.update(loss=args.loss, err_rate=args.err_rate, fil_rate=args.fil_rate)
        bound = phase_bound(inp)
        loss_v, err, fil = args.loss, args.err_rate, args.fil_rate
    row = [params.alpha2, params.overlap2, params.gamma, loss_v, err, fil, bound.ph_rate_bound, bound.ratio, bound.feasible]
    emit(render(ESTIMATE_COLUMNS, [row], config, args.format), args.out)
    return EXIT_OK if bound.feasible else EXIT_INFEASIBLE


# ---- fig1 ----------------------------------------------------------------


def fig1_row(overlap2: float, L: float, p: float, gamma_mode: str, convention: str) -> list:
    pt = keyrate.evaluate_overlap(overlap2, L, p, gamma_mode, convention)
    # uncapped nbar_ph/n_fil; the cap at 1/2 only matters for the key rate
    est = pt.bound.uncapped_ratio if pt.bound.feasible else pt.bound.ratio
    return [overlap2, est, pt.obs.ph_ratio, pt.obs.bit_ratio]


def fig1_table(L: float, p: float, gamma_mode: str, grid: Sequence[float], convention: str = "p/3", jobs: int = 1):
    items = [(float(o2), L, p, gamma_mode, convention) for o2 in grid]
    return _map(fig1_row, items, jobs)


def cmd_fig1(args) -> int:
    _unit("loss", args.loss)
    _unit("p", args.p)
    if args.points < 2:
        raise InputError("--points must be at least 2")
    grid = np.linspace(args.overlap2_min, args.overlap2_max, args.points)
    _unit("overlap2-min", args.overlap2_min, closed=False)
    _unit("overlap2-max", args.overlap2_max, closed=False)
    rows = fig1_table(args.loss, args.p, args.gamma_mode, grid, args.convention, args.jobs)
    config = {
        "subcommand": "fig1",
        "p": args.p,
        "loss": args.loss,
        "gamma_mode": args.gamma_mode,
        "convention": args.convention,
        "overlap2_min": args.overlap2_min,
        "overlap2_max": args.overlap2_max,
        "points": args.points,
    }
    emit(render(FIG1_COLUMNS, rows, config, args.format), args.out)
    return EXIT_OK


# ---- fig2 / cutoff -------------------------------------------------------


def fig2_point(L: float, p: float, gamma_mode: str, convention: str) -> list:
    opt = keyrate.optimize_overlap(L, p, gamma_mode, convention=convention)
    return [L, p, opt.best_G, opt.best_overlap_sq, "point"]


def cutoff_value(L: float, gamma_mode: str, convention: str) -> float:
    return keyrate.find_cutoff(L, gamma_mode, convention=convention)


def cmd_fig2(args) -> int:
    losses = args.loss_list
    for L in losses:
        _unit("loss", L)
        if L >= 1.0:
            raise InputError("--loss values must be below 1")
    if args.points < 2:
        raise InputError("--points must be at least 2")
    _unit("p-max", args.p_max)
    ps = np.linspace(0.0, args.p_max, args.points)
    items = [(L, float(p), args.gamma_mode, args.convention) for L in losses for p in ps]
    points = _map(fig2_point, items, args.jobs)
    cuts = _map(cutoff_value, [(L, args.gamma_mode, args.convention) for L in losses], args.jobs)
    rows = []
    for i, L in enumerate(losses):
        rows.extend(points[i * len(ps) : (i + 1) * len(ps)])
        p_star = cuts[i]
        opt = keyrate.optimize_overlap(L, p_star, args.gamma_mode, convention=args.convention)
        rows.append([L, p_star, opt.best_G, opt.best_overlap_sq, "cutoff"])
    config = {
        "subcommand": "fig2",
        "loss": [fmt(L) for L in losses],
        "gamma_mode": args.gamma_mode,
        "convention": args.convention,
        "p_max": args.p_max,
        "points": args.points,
    }
    emit(render(FIG2_COLUMNS, rows, config, args.format), args.out)
    return EXIT_OK


def cmd_cutoff(args) -> int:
    for L in args.loss_list:
        _unit("loss", L)
    cuts = _map(cutoff_value, [(L, args.gamma_mode, args.convention) for L in args.loss_list], args.jobs)
    rows = [[L, args.gamma_mode, c] for L, c in zip(args.loss_list, cuts)]
    config = {
        "subcommand": "cutoff",
        "loss": [fmt(L) for L in args.loss_list],
        "gamma_mode": args.gamma_mode,
        "convention": args.convention,
        "tolerance": keyrate.CUTOFF_TOL,
    }
    emit(render(CUTOFF_COLUMNS, rows, config, args.format), args.out)
    return EXIT_OK


# ---- simulate ------------------------------------------------------------


def simulation_summary(records, params: ProtocolParams, obs) -> dict:
    N = records[0].N
    names = {"loss": "lost", "err_rate": "n_err", "fil_rate": "n_fil", "bit_rate": "n_bit", "ph_rate": "n_ph"}
    analytic = {"loss": obs.loss_L, "err_rate": obs.err_rate, "fil_rate": obs.fil_rate, "bit_rate": obs.bit_rate, "ph_rate": obs.ph_rate}
    summary = {"trials": len(records), "N": N, "rates": {}}
    for key, count in names.items():
        vals = np.array([r.loss if key == "loss" else r.rate(count) for r in records])
        ref = analytic[key]
        n_eff = 2 * N if key == "loss" else N
        se = math.sqrt(max(ref * (1 - ref), 1e-300) / n_eff)
        summary["rates"][key] = {
            "mean": float(vals.mean()),
            "analytic": ref,
            "z_of_mean": float((vals.mean() - ref) / (se / math.sqrt(len(vals)))) if ref > 0 else 0.0,
        }
    eps_names = sorted(records[0].epsilons)
    summary["deviation_quantiles"] = {
        name: [float(q) for q in np.nanquantile([r.epsilons[name] for r in records], [0.5, 0.9])] for name in eps_names
    }
    cov = montecarlo.coverage_from_records(records, params)
    summary["coverage"] = {"under_fraction": cov.under_fraction, "abort_fraction": cov.abort_fraction, "mean_slack": cov.mean_slack}
    return summary


def cmd_simulate(args) -> int:
    params = resolve_params(args)
    _unit("loss", args.loss)
    _unit("p", args.p)
    if args.n < 1:
        raise InputError("--n must be positive")
    if args.trials < 1:
        raise InputError("--trials must be positive")
    if not (0 <= args.seed < 2**64):
        raise InputError("--seed must be a 64-bit unsigned integer")
    channel = depolarizing_loss_channel(args.loss, args.p, args.convention)
    records = montecarlo.run_trials(params, channel, args.n, args.trials, args.seed, args.mode)
    text = "".join(r.to_json() + "\n" for r in records)
    try:
        emit(text, args.out)
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc}") from exc
    summary = simulation_summary(records, params, observables(channel, params))
    summary["config"] = {"alpha2": params.alpha2, "gamma": params.gamma, "loss": args.loss, "p": args.p, "seed": args.seed, "mode": args.mode}
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    stream.write(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


# ---- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--gamma-mode", choices=["beta", "one"], default="beta")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--convention", choices=["p/3", "unweighted"], default="p/3", help="depolarizing channel weighting")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    state = _Parser(add_help=False)
    state.add_argument("--alpha2", type=float)
    state.add_argument("--overlap2", type=float)

    parser = _Parser(prog="b92qkd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"b92qkd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", parents=[common, state], help="phase-error bound from observed rates")
    p.add_argument("--loss", type=float)
    p.add_argument("--err-rate", type=float)
    p.add_argument("--fil-rate", type=float)
    p.add_argument("--channel", choices=["depol"])
    p.add_argument("--p", type=float)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("fig1", parents=[common], help="estimated vs actual phase-error ratio over overlap^2")
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--loss", type=float, default=0.0)
    p.add_argument("--points", type=int, default=99)
    p.add_argument("--overlap2-min", type=float, default=0.01)
    p.add_argument("--overlap2-max", type=float, default=0.99)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", parents=[common], help="optimized key gain over p, per loss")
    p.add_argument("--loss", dest="loss_list", type=_float_list, default=[0.0, 0.2, 0.5])
    p.add_argument("--p-max", type=float, default=0.04)
    p.add_argument("--points", type=int, default=41)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("cutoff", parents=[common], help="largest p with positive key gain")
    p.add_argument("--loss", dest="loss_list", type=_float_list, default=[0.0, 0.2, 0.5])
    p.set_defaults(func=cmd_cutoff)

    p = sub.add_parser("simulate", parents=[common, state], help="Monte Carlo trials as JSON lines")
    p.add_argument("--loss", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["operational", "gedanken"], default="operational")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be positive")
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"b92qkd {args.command}: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
