"""Command-line front end.

Subcommands: solve, eval, plot-data, verify, sweep, simulate, asymptote.
Parameter files use the flat ``key = value`` format of ``model``; numeric
output is serialized with repr, which round-trips every IEEE double.
Errors exit with status 2 and a machine-parsable JSON record on stderr;
verification commands exit 1 when a check fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings

import numpy as np

from . import asymptotics, simulate, verify
from .errors import AssumptionWarning, ParamsFileError, RegimeStopError
from .model import ModelParams, dump_params_text, load_params_file, payoff, validate
from .solver import ViSolution, eval_value, solve

__all__ = ["main"]


def _write_output(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error_exit(exc) -> int:
    record = {"error": type(exc).__name__, "message": str(exc)}
    field = getattr(exc, "field", None)
    if field is not None:
        record["field"] = field
    sys.stderr.write(json.dumps(record) + "\n")
    return 2


def _load_and_validate(args):
    params = load_params_file(args.params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AssumptionWarning)
        validate(params, permissive=args.permissive)
    notes = [str(w.message) for w in caught if issubclass(w.category, AssumptionWarning)]
    return params, notes


def _params_dict(params: ModelParams) -> dict:
    return dataclasses.asdict(params)


def _solution_record(params: ModelParams, sol: ViSolution, notes) -> dict:
    roots = sol.roots
    return {
        "params": _params_dict(params),
        "k_tilde": params.k_tilde,
        "warnings": notes,
        "roots": {
            "beta_la": roots.beta_la,
            "beta_lb": roots.beta_lb,
            "beta_ua": roots.beta_ua,
            "beta_ub": roots.beta_ub,
            "zeta_plus_l0": roots.zeta_l0.zeta_plus,
            "zeta_plus_l1": roots.zeta_l1.zeta_plus,
            "zeta_minus_u0": roots.zeta_u0.zeta_minus,
            "zeta_minus_u1": roots.zeta_u1.zeta_minus,
        },
        "particular": dataclasses.asdict(sol.part),
        "pq": dataclasses.asdict(sol.pq),
        "xstar": sol.xstar,
        "coefficients": {
            "AL0": sol.al[0], "AL1": sol.al[1],
            "BL0": sol.bl[0], "BL1": sol.bl[1],
            "AU0": sol.au[0], "AU1": sol.au[1],
            "BU0": sol.bu[0], "BU1": sol.bu[1],
        },
    }


def _record_to_text(record: dict, params: ModelParams) -> str:
    # params echo block first, in the exact file format, then flat key = repr
    lines = ["# params"]
    lines.append(dump_params_text(params).rstrip("\n"))
    for section in ("k_tilde", "xstar"):
        lines.append(f"{section} = {record[section]!r}")
    for section in ("roots", "particular", "pq", "coefficients"):
        lines.append(f"# {section}")
        for key, value in record[section].items():
            lines.append(f"{key} = {value!r}")
    if record.get("warnings"):
        for note in record["warnings"]:
            lines.append(f"# warning: {note}")
    return "\n".join(lines) + "\n"


def _emit_record(record: dict, params: ModelParams, args) -> None:
    if args.format == "text":
        _write_output(_record_to_text(record, params), args.out)
    else:
        _write_output(json.dumps(record, indent=2) + "\n", args.out)


def _parse_grid(spec: str):
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise ParamsFileError("grid", f"expected 'lo:hi:count', got {spec!r}") from None
    if not (0.0 < lo < hi) or n < 2:
        raise ParamsFileError("grid", "need 0 < lo < hi and count >= 2")
    return np.linspace(lo, hi, n)


def _value_table(params, sol, grid, mark_threshold: bool) -> str:
    xs = np.asarray(grid, dtype=float)
    if mark_threshold and not np.any(np.isclose(xs, sol.xstar, rtol=1e-15)):
        xs = np.sort(np.append(xs, sol.xstar))
    v0 = eval_value(sol, 0, xs)
    v1 = eval_value(sol, 1, xs)
    pi = payoff(params, xs)
    lines = []
    if mark_threshold:
        lines.append(f"# xstar = {sol.xstar!r}")
    lines.append("x,v0,v1,pi")
    for row in zip(xs, v0, v1, pi):
        lines.append(",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def _cmd_solve(args) -> int:
    params, notes = _load_and_validate(args)
    sol = solve(params, permissive=args.permissive)
    _emit_record(_solution_record(params, sol, notes), params, args)
    return 0


def _cmd_eval(args) -> int:
    params, _ = _load_and_validate(args)
    sol = solve(params, permissive=args.permissive)
    _write_output(_value_table(params, sol, _parse_grid(args.grid), False), args.out)
    return 0


def _cmd_plot_data(args) -> int:
    params, _ = _load_and_validate(args)
    sol = solve(params, permissive=args.permissive)
    _write_output(_value_table(params, sol, _parse_grid(args.grid), True), args.out)
    return 0


def _cmd_verify(args) -> int:
    params, notes = _load_and_validate(args)
    sol = solve(params, permissive=args.permissive)
    report = verify.check_boundary_conditions(
        sol, grid_points=args.grid_points, window=args.window
    )
    gaps = verify.pasting_check(sol)
    record = {
        "params": _params_dict(params),
        "warnings": notes,
        "xstar": report.xstar,
        "passed": bool(report.passed),
        "margin_below": report.margin_below,
        "margin_above": report.margin_above,
        "tail_ratio": report.tail_ratio,
        "tail_ratio_limit": report.tail_ratio_limit,
        "grid_points": report.grid_points,
        "window": report.window,
        "max_pasting_gap": float(gaps.max()),
    }
    _write_output(json.dumps(record, indent=2) + "\n", args.out)
    return 0 if report.passed and gaps.max() < verify.PASTING_TOL else 1


def _parse_float_list(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _cmd_sweep(args) -> int:
    config = verify.SweepConfig(
        r=args.r,
        alpha=args.alpha,
        bigK=args.bigK,
        bigI=args.bigI,
        mu_values=_parse_float_list(args.mu_values),
        scale_values=_parse_float_list(args.scale_values),
        grid_points=args.grid_points,
        window=args.window,
        workers=args.workers,
    )
    result = verify.remark_sweep(config)
    lines = ["mu0,mu1,sigma0,sigma1,lambda0,lambda1,eta,reason"]
    for failure in result.failures:
        p = failure.params
        lines.append(
            f"{p.mu0!r},{p.mu1!r},{p.sigma0!r},{p.sigma1!r},"
            f"{p.lambda0!r},{p.lambda1!r},{p.eta!r},{failure.reason}"
        )
    if args.out:
        _write_output("\n".join(lines) + "\n", args.out)
    sys.stdout.write(result.summary + "\n")
    return 0 if result.passed == result.total else 1


def _cmd_simulate(args) -> int:
    params, notes = _load_and_validate(args)
    sol = solve(params, permissive=args.permissive)
    threshold = sol.xstar if args.threshold is None else args.threshold
    config = simulate.SimConfig(
        paths=args.paths,
        threshold=threshold,
        seed=args.seed,
        x0=args.x0,
        regime0=args.regime0,
        horizon=args.horizon,
        tail_tol=args.tail_tol,
    )
    est = simulate.estimate_value(params, config)
    reference = eval_value(sol, args.regime0, args.x0)
    z = (est.mean - reference) / est.std_error if est.std_error > 0 else float("nan")
    record = {
        "params": _params_dict(params),
        "warnings": notes,
        "threshold": threshold,
        "xstar": sol.xstar,
        "x0": args.x0,
        "regime0": args.regime0,
        "paths": est.paths,
        "seed": args.seed,
        "horizon": config.resolved_horizon(params),
        "mc_mean": est.mean,
        "mc_std_error": est.std_error,
        "reference_value": reference,
        "z_score": z,
    }
    _write_output(json.dumps(record, indent=2) + "\n", args.out)
    return 0


def _cmd_asymptote(args) -> int:
    params, _ = _load_and_validate(args)
    single = asymptotics.SingleDiffusionParams.from_model_params(params)
    if args.limit == "eta":
        res = asymptotics.threshold_eta_limit(single)
    else:
        res = asymptotics.threshold_lambda0_limit(single)
    record = {
        "limit": res.limit,
        "xstar_inf": res.xstar_inf,
        "lower_bound": res.lower_bound,
        "exponents": res.exponents,
    }
    if args.convergence:
        values = _parse_float_list(args.convergence)
        _, rows = asymptotics.convergence_table(single, args.limit, values)
        record["convergence"] = [
            {"value": v, "xstar": xs, "rel_error": err} for v, xs, err in rows
        ]
    _write_output(json.dumps(record, indent=2) + "\n", args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regimestop",
        description="Threshold solver, verifier and Monte Carlo engine for "
        "constrained stopping of a two-regime switching GBM",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", required=True, help="flat key = value parameter file")
    common.add_argument("--permissive", action="store_true",
                        help="downgrade the r > max(mu) check to a warning")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("json", "text"), default="json")

    p_solve = sub.add_parser("solve", parents=[common, fmt],
                             help="roots, coefficients and the threshold x*")
    p_solve.set_defaults(func=_cmd_solve)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--grid", default="0.01:3:300", help="lo:hi:count state grid")

    p_eval = sub.add_parser("eval", parents=[common, grid],
                            help="tabulate x, v0, v1, pi on a grid (CSV)")
    p_eval.set_defaults(func=_cmd_eval)

    p_plot = sub.add_parser("plot-data", parents=[common, grid],
                            help="CSV table with the threshold row marked")
    p_plot.set_defaults(func=_cmd_plot_data)

    p_verify = sub.add_parser("verify", parents=[common],
                              help="check the threshold inequalities numerically")
    p_verify.add_argument("--grid-points", type=int, default=10_000)
    p_verify.add_argument("--window", type=float, default=1e-6)
    p_verify.set_defaults(func=_cmd_verify)

    p_sweep = sub.add_parser("sweep", help="boundary check over a parameter grid")
    p_sweep.add_argument("--r", type=float, default=0.1)
    p_sweep.add_argument("--alpha", type=float, default=1.0)
    p_sweep.add_argument("--bigK", type=float, default=0.9)
    p_sweep.add_argument("--bigI", type=float, default=0.1)
    p_sweep.add_argument("--mu-values", default="-10,-5,-2,-1,-0.5,0,0.05,0.099")
    p_sweep.add_argument("--scale-values", default="0.1,1,2,5")
    p_sweep.add_argument("--grid-points", type=int, default=10_000)
    p_sweep.add_argument("--window", type=float, default=1e-6)
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="Monte Carlo estimate under a threshold policy")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--paths", type=int, default=100_000)
    p_sim.add_argument("--threshold", type=float, default=None,
                       help="stopping level (default: solver x*)")
    p_sim.add_argument("--x0", type=float, default=1.0)
    p_sim.add_argument("--regime0", type=int, choices=(0, 1), default=1)
    p_sim.add_argument("--horizon", type=float, default=None)
    p_sim.add_argument("--tail-tol", type=float, default=1e-5)
    p_sim.set_defaults(func=_cmd_simulate)

    p_asym = sub.add_parser("asymptote", parents=[common],
                            help="closed-form limiting threshold (symmetric regimes)")
    p_asym.add_argument("--limit", choices=("eta", "lambda0"), required=True)
    p_asym.add_argument("--convergence", default=None,
                        help="comma list of parameter values to compare the "
                        "general solver against the limit")
    p_asym.set_defaults(func=_cmd_asymptote)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RegimeStopError as exc:
        return _error_exit(exc)
    except OSError as exc:
        return _error_exit(exc)


if __name__ == "__main__":
    sys.exit(main())
