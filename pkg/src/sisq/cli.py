"""Command-line front end: every computation, cross-method comparison, and
plot-ready export in one tool.

Commands
    stationary       equilibrium of the restart-at-one chain
    qsd              quasi-stationary distribution, lambda1, mean absorption time
    extinction-time  mean extinction time by any of the four routes
    compare          qsd-vs-clt convergence table over an n-grid
    simulate         exact trajectories and conditioned ensembles

Model parameters are given as --n with exactly one of --lambda or --r0;
--gamma defaults to 1.  Machine-readable output goes to --output (default
stdout), diagnostics to stderr, and every command is deterministic given
its full flag set.  CSV cells use shortest round-trip decimal formatting;
JSON documents are a single object carrying schema_version.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from sisq.chain import ModelParams
from sisq.clt import endemic_normal, expected_time_clt, q1_normal_approx
from sisq.sim import (
    SeedSpec,
    conditioned_ensemble,
    extinction_time_samples,
    simulate,
    simulate_restarted,
)
from sisq.spectral import expected_time_qsd, quasi_stationary_distribution
from sisq.stationary import (
    exact_expected_extinction_time,
    log_expected_extinction_time,
    stationary_distribution,
)

SCHEMA_VERSION = 1

__all__ = ["main"]


def _fmt_cell(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_csv(path: str, header: list, rows: list) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt_cell(c) for c in row) for row in rows)
    _write_text(path, "\n".join(lines) + "\n")


def _write_json(path: str, obj: dict) -> None:
    _write_text(path, json.dumps(obj, indent=2) + "\n")


def _params_json(p: ModelParams) -> dict:
    return {"n": p.n, "lambda": p.lam, "gamma": p.gamma, "r0": p.r0}


def _add_model_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--n", type=int, required=True, help="population size")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--lambda", dest="lam", type=float, help="infection rate")
    grp.add_argument("--r0", type=float, help="basic reproduction number (implies lambda = r0*gamma)")
    sp.add_argument("--gamma", type=float, default=1.0, help="recovery rate (default 1)")


def _add_output_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--output", default="-", help="output path ('-' for stdout)")


def _params_from_args(args) -> ModelParams:
    lam = args.lam if args.lam is not None else args.r0 * args.gamma
    return ModelParams(n=args.n, lam=lam, gamma=args.gamma)


def _cmd_stationary(args) -> int:
    p = _params_from_args(args)
    pi = stationary_distribution(p)
    if args.format == "csv":
        rows = [(k + 1, pi[k]) for k in range(p.n)]
        _write_csv(args.output, ["state", "pi_hat"], rows)
    else:
        _write_json(args.output, {
            "schema_version": SCHEMA_VERSION,
            "command": "stationary",
            "params": _params_json(p),
            "state": list(range(1, p.n + 1)),
            "pi_hat": [float(x) for x in pi],
        })
    return 0


def _cmd_qsd(args) -> int:
    p = _params_from_args(args)
    r = quasi_stationary_distribution(p)
    et = expected_time_qsd(p)
    log_et = math.log(et)
    if args.format == "csv":
        header = ["state", "q_tilde", "lambda1", "expected_time_qsd",
                  "log_expected_time_qsd"]
        rows = [(k + 1, r.qsd[k], r.lambda1, et, log_et) for k in range(p.n)]
        _write_csv(args.output, header, rows)
    else:
        _write_json(args.output, {
            "schema_version": SCHEMA_VERSION,
            "command": "qsd",
            "params": _params_json(p),
            "state": list(range(1, p.n + 1)),
            "q_tilde": [float(x) for x in r.qsd],
            "lambda1": r.lambda1,
            "expected_time_qsd": et,
            "log_expected_time_qsd": log_et,
        })
    return 0


def _extinction_record(p: ModelParams, method: str, args) -> dict:
    rec = {"method": method, "value": None, "log_value": None,
           "se": None, "replicates": None}
    if method == "exact":
        rec["log_value"] = log_expected_extinction_time(p)
        try:
            rec["value"] = exact_expected_extinction_time(p)
        except OverflowError:
            pass
    elif method == "qsd":
        rec["value"] = expected_time_qsd(p)
        rec["log_value"] = math.log(rec["value"])
    elif method == "clt":
        lv = expected_time_clt(p)
        rec["log_value"] = lv.log
        try:
            rec["value"] = lv.value
        except OverflowError:
            pass
    elif method == "simulate":
        if args.seed is None:
            raise ValueError("--method simulate requires --seed")
        init = quasi_stationary_distribution(p).qsd
        res = extinction_time_samples(
            p, args.replicates, SeedSpec(args.seed), init, workers=args.workers
        )
        rec["value"] = res.mean
        rec["log_value"] = math.log(res.mean)
        rec["se"] = res.standard_error
        rec["replicates"] = res.replicates
    else:
        raise ValueError(f"unknown method {method!r}")
    return rec


def _cmd_extinction_time(args) -> int:
    p = _params_from_args(args)
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    if not methods:
        raise ValueError("no method given")
    records = [_extinction_record(p, m, args) for m in methods]
    if args.format == "csv":
        header = ["method", "n", "lambda", "gamma", "r0", "value",
                  "log_value", "se", "replicates"]
        rows = [(r["method"], p.n, p.lam, p.gamma, p.r0, r["value"],
                 r["log_value"], r["se"], r["replicates"]) for r in records]
        _write_csv(args.output, header, rows)
    else:
        _write_json(args.output, {
            "schema_version": SCHEMA_VERSION,
            "command": "extinction-time",
            "params": _params_json(p),
            "results": records,
        })
    return 0


def _cmd_compare(args) -> int:
    grid = [int(x) for x in args.n_grid.split(",") if x.strip()]
    if not grid:
        raise ValueError("empty n-grid")
    gamma = args.gamma
    lam = args.lam if args.lam is not None else args.r0 * gamma
    rows = []
    for n in grid:
        p = ModelParams(n=n, lam=lam, gamma=gamma)
        q1_qsd = float(quasi_stationary_distribution(p).qsd[0])
        rows.append(("qsd", n, p.r0, q1_qsd, -math.log(gamma * q1_qsd)))
        q1_clt = q1_normal_approx(p)
        rows.append(("clt", n, p.r0, math.exp(q1_clt.log),
                     -math.log(gamma) - q1_clt.log))
    if args.format == "csv":
        _write_csv(args.output, ["method", "n", "r0", "q1", "log_ET"], rows)
    else:
        _write_json(args.output, {
            "schema_version": SCHEMA_VERSION,
            "command": "compare",
            "gamma": gamma,
            "lambda": lam,
            "rows": [
                {"method": m, "n": n, "r0": r0, "q1": q1, "log_ET": log_et}
                for (m, n, r0, q1, log_et) in rows
            ],
        })
    return 0


def _trajectory_output(args, tr) -> None:
    if args.format == "csv":
        rows = list(zip(tr.times, tr.states, tr.restart_flags))
        rows = [(float(t), int(s), bool(f)) for t, s, f in rows]
        _write_csv(args.output, ["time", "state", "restart_flag"], rows)
    else:
        _write_json(args.output, {
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "mode": args.mode,
            "params": _params_json(_params_from_args(args)),
            "t_end": tr.t_end,
            "final_state": tr.final_state,
            "n_events": tr.n_events,
            "n_restarts": tr.n_restarts,
            "log_truncated": tr.log_truncated,
            "time": [float(t) for t in tr.times],
            "state": [int(s) for s in tr.states],
            "restart_flag": [int(f) for f in tr.restart_flags],
        })


def _cmd_simulate(args) -> int:
    p = _params_from_args(args)
    seed = SeedSpec(args.seed)
    if args.mode in ("plain", "restarted"):
        if args.t_max is None:
            raise ValueError(f"--mode {args.mode} requires --t-max")
        if args.mode == "plain":
            tr = simulate(p, args.y0, args.t_max, seed)
        else:
            tr = simulate_restarted(p, args.t_max, seed)
        _trajectory_output(args, tr)
        return 0

    t_snap = args.t_snap if args.t_snap is not None else args.t_max
    if t_snap is None:
        raise ValueError("--mode ensemble requires --t-snap (or --t-max)")
    res = conditioned_ensemble(
        p, args.replicates, t_snap, seed, y0=args.y0, workers=args.workers
    )
    if res.survivors == 0:
        raise ValueError(
            f"no replicate survived to t={t_snap}; "
            "nothing to report (try a shorter t-snap or more replicates)"
        )
    counts = res.histogram()
    occupied = np.nonzero(counts)[0]
    supercrit = p.r0 > 1
    summ = endemic_normal(p) if supercrit else None
    normal = {
        "mu_n": summ.mu_n if supercrit else None,
        "sigma2_n": summ.sigma2_n if supercrit else None,
    }
    meta = {
        "schema_version": SCHEMA_VERSION,
        **normal,
        "t_snap": res.t_snap,
        "replicates": res.replicates,
        "survivors": res.survivors,
        "survival_fraction": res.survival_fraction,
    }
    if args.format == "csv":
        if args.output == "-":
            raise ValueError(
                "ensemble CSV needs --output so the normal-curve JSON sidecar "
                "has a destination"
            )
        rows = [(int(k + 1), int(counts[k]), res.survivors) for k in occupied]
        _write_csv(args.output, ["state", "count", "survivors"], rows)
        _write_json(str(Path(args.output).with_suffix(".normal.json")), meta)
    else:
        _write_json(args.output, {
            "command": "simulate",
            "mode": "ensemble",
            "params": _params_json(p),
            "state": [int(k + 1) for k in occupied],
            "count": [int(counts[k]) for k in occupied],
            **meta,
        })
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sisq",
        description="Quasi-stationary analysis of the SIS epidemic birth-death chain.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stationary", help="equilibrium of the restarted chain")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.set_defaults(fn=_cmd_stationary)

    sp = sub.add_parser("qsd", help="quasi-stationary distribution and lambda1")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.set_defaults(fn=_cmd_qsd)

    sp = sub.add_parser("extinction-time", help="mean extinction time by method")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.add_argument(
        "--method", default="exact",
        help="comma-separated subset of exact,qsd,clt,simulate (default exact)",
    )
    sp.add_argument("--seed", type=int, help="root seed (simulate method)")
    sp.add_argument("--replicates", type=int, default=10000)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(fn=_cmd_extinction_time)

    sp = sub.add_parser("compare", help="qsd vs clt over an n-grid")
    sp.add_argument("--n-grid", required=True, help="comma-separated n values")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--lambda", dest="lam", type=float)
    grp.add_argument("--r0", type=float)
    sp.add_argument("--gamma", type=float, default=1.0)
    _add_output_args(sp)
    sp.set_defaults(fn=_cmd_compare)

    sp = sub.add_parser("simulate", help="exact trajectories and ensembles")
    _add_model_args(sp)
    _add_output_args(sp)
    sp.add_argument("--mode", choices=("plain", "restarted", "ensemble"),
                    default="plain")
    sp.add_argument("--seed", type=int, required=True, help="root seed")
    sp.add_argument("--y0", type=int, default=1, help="initial state (default 1)")
    sp.add_argument("--t-max", type=float, default=None, help="horizon (trajectory modes)")
    sp.add_argument("--t-snap", type=float, default=None,
                    help="snapshot time (ensemble; falls back to --t-max)")
    sp.add_argument("--replicates", type=int, default=10000)
    sp.add_argument("--workers", type=int, default=None,
                    help="replicate-parallel process count (results unchanged)")
    sp.set_defaults(fn=_cmd_simulate)

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OverflowError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
