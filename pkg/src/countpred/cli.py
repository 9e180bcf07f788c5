"""Command-line surface.

Subcommands: fit, predict, forecast, sweep, simulate, exact-props,
reallocate.  Single objects print as JSON, tables as CSV with a leading
``#`` meta line; both carry the library version, the seed when
randomness is involved, and the resolved configuration.  Exit codes:
0 success, 1 usage, 2 data problems, 3 numerical failures.  Errors are
one machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .data import DailySeries, load_adjustments, parse_ecdc_csv
from .errors import (
    AdjustmentError,
    DataError,
    DesignError,
    DiagnosticsError,
    DivergenceError,
    DomainError,
    HorizonError,
    MomentFailure,
    NonConvergenceError,
    SingularityError,
)
from .forecast import (
    cumulative_forecast,
    reallocate_adjustments,
    sensitivity_sweep,
)
from .glm import (
    DesignSpec,
    build_design,
    design_row,
    fit,
    rate_and_variance,
    region_regression,
    residual_diagnostics,
)
from .overdispersion import estimate_xi, fit_overdispersed, region_overdispersed
from .regions import (
    exact_region_properties,
    pmf_poisson,
    region_nonrandomized,
    region_normal_known,
    region_smallest,
    region_sqrt_known,
)
from .simulate import SimConfig, result_to_csv, run_experiment

_USAGE_ERRORS = (DomainError, HorizonError)
_DATA_ERRORS = (DataError, AdjustmentError, DesignError, FileNotFoundError,
                PermissionError, IsADirectoryError)
_NUMERICAL_ERRORS = (SingularityError, DivergenceError, NonConvergenceError,
                     MomentFailure, DiagnosticsError)


class _Parser(argparse.ArgumentParser):
    """argparse with single-line errors and exit code 1 for usage problems."""

    def error(self, message):
        print(f"error: usage: {message}", file=sys.stderr)
        raise SystemExit(1)


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _meta(args: argparse.Namespace, seed=None) -> dict:
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("command", "func")}
    return {"version": __version__, "seed": seed, "config": config}


def _meta_csv_line(args: argparse.Namespace, seed=None) -> str:
    return "# " + json.dumps(_meta(args, seed), default=str)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _dump_json(payload: dict, out_path) -> None:
    _emit(json.dumps(payload, indent=2, default=_json_default), out_path)


def _xi_json(xi: float):
    return "inf" if math.isinf(xi) else xi


def _load_series(args) -> DailySeries:
    series = parse_ecdc_csv(args.data, args.country)
    if args.adjustments:
        series = series.with_adjustments(load_adjustments(args.adjustments))
    start = getattr(args, "start_daynum", None)
    cutoff = getattr(args, "cutoff_daynum", None)
    if start is not None or cutoff is not None:
        series = series.truncated(cutoff if cutoff is not None else series.last_daynum(),
                                  start)
    if getattr(args, "apply_adjustments", False):
        series = reallocate_adjustments(series)
    return series


def _design_from_args(args) -> DesignSpec:
    return DesignSpec(poly_order=args.order,
                      include_day_factor=args.day_factor,
                      standardize=not args.no_standardize)


def _fit_series(series: DailySeries, design: DesignSpec):
    w = np.array(series.daynums(), dtype=np.float64)
    labels = [r.weekday for r in series.records] if design.include_day_factor else None
    X, spec = build_design(w, labels, design)
    return fit(X, np.array(series.counts()), design=spec)


def _raw_theta(theta: np.ndarray, spec: DesignSpec) -> list[float]:
    """Map coefficients from the standardized columns back to raw ones."""
    if not spec.standardize or spec.column_means is None:
        return [float(v) for v in theta]
    means = np.asarray(spec.column_means)
    sds = np.asarray(spec.column_sds)
    raw = theta / sds
    raw[0] = theta[0] - float(np.sum(theta[1:] * means[1:] / sds[1:]))
    return [float(v) for v in raw]


def _region_payload(region) -> dict:
    return {
        "lower": region.realized_lo,
        "upper": region.realized_hi,
        "core": [region.core_lo, region.core_hi],
        "boundary": list(region.boundary),
        "boundary_prob": region.boundary_prob,
        "level": region.level,
        "length": region.length,
    }


# ---------------------------------------------------------------- fit


def _cmd_fit(args) -> int:
    series = _load_series(args)
    design = _design_from_args(args)
    w = np.array(series.daynums(), dtype=np.float64)
    y = np.array(series.counts())
    labels = [r.weekday for r in series.records]

    table = []
    max_order = args.max_order if args.max_order is not None else args.order
    for order in range(1, max_order + 1):
        row = {"order": order}
        for tag, with_day in (("nd", False), ("d", True)):
            try:
                X, spec = build_design(
                    w, labels if with_day else None,
                    DesignSpec(poly_order=order, include_day_factor=with_day,
                               standardize=not args.no_standardize))
                f = fit(X, y, design=spec)
                row[f"aic_{tag}"] = f.aic
                row[f"xi_{tag}"] = _xi_json(estimate_xi(f))
            except _NUMERICAL_ERRORS as exc:
                row[f"aic_{tag}"] = None
                row[f"xi_{tag}"] = None
                row[f"error_{tag}"] = str(exc)
        table.append(row)

    chosen = _fit_series(series, design)
    xi = estimate_xi(chosen)
    payload = {
        "meta": _meta(args),
        "country": series.country,
        "daynum_range": [series.first_daynum(), series.last_daynum()],
        "order": args.order,
        "day_factor": args.day_factor,
        "theta_standardized": [float(v) for v in chosen.theta],
        "theta_raw": _raw_theta(chosen.theta, chosen.design),
        "loglik": chosen.loglik,
        "aic": chosen.aic,
        "xi_hat": _xi_json(xi),
        "converged": chosen.converged,
        "iterations": chosen.iterations,
        "aic_table": table,
    }
    try:
        diag = residual_diagnostics(chosen, args.bins)
        payload["diagnostics"] = {
            "table": diag.table.tolist(),
            "statistic": diag.statistic,
            "df": diag.df,
            "p_value": diag.p_value,
            "bin_edges": list(diag.bin_edges),
        }
    except (DiagnosticsError, DomainError) as exc:
        payload["diagnostics"] = {"error": str(exc)}
    if args.residuals_csv:
        lines = [_meta_csv_line(args), "daynum,observed,fitted,residual"]
        for rec, lam, res in zip(series.records, chosen.fitted_rates,
                                 chosen.residuals):
            lines.append(f"{rec.daynum},{rec.count},{lam!r},{res!r}")
        _emit("\n".join(lines), args.residuals_csv)
    _dump_json(payload, args.out)
    return 0


# ------------------------------------------------------------- predict


def _cmd_predict(args) -> int:
    series = _load_series(args)
    design = _design_from_args(args)
    base = _fit_series(series, design)
    over = fit_overdispersed(base) if args.variant == "overdispersed" else None

    daynums = []
    if args.daynum:
        for part in args.daynum.split(","):
            daynums.append(int(part))
    if not daynums:
        raise DomainError("predict needs --daynum")
    rows = []
    from .data import weekday_of_daynum
    for daynum in daynums:
        label = weekday_of_daynum(daynum) if design.include_day_factor else None
        x0 = design_row(float(daynum), label, base.design)
        lam0, vhat = rate_and_variance(base, x0)
        if args.variant == "overdispersed":
            region = region_overdispersed(over, x0, args.alpha)
        else:
            region = region_regression(base, x0, args.alpha, args.variant, args.u)
        row = {"daynum": daynum, "rate": lam0, "variance_factor": vhat,
               "variant": args.variant}
        row.update(_region_payload(region))
        rows.append(row)
    payload = {"meta": _meta(args), "predictions": rows}
    if over is not None:
        payload["xi_hat"] = _xi_json(over.xi)
    _dump_json(payload, args.out)
    return 0


# ------------------------------------------------------------ forecast


def _cmd_forecast(args) -> int:
    series = _load_series(args)
    design = _design_from_args(args)
    base = _fit_series(series, design)
    fitted = fit_overdispersed(base) if args.overdispersed else base
    result = cumulative_forecast(fitted, series, args.target_daynum, args.alpha,
                                 allow_long_horizon=args.allow_long_horizon)
    payload = {
        "meta": _meta(args),
        "country": series.country,
        "cutoff_daynum": series.last_daynum(),
        "target_daynum": args.target_daynum,
        "s_current": result.s_current,
        "horizon_days": result.horizon_days,
        "alpha": args.alpha,
        "alpha_star": result.alpha_star,
        "model_tag": result.model_tag,
        "xi_hat": _xi_json(fitted.xi) if args.overdispersed else None,
        "point": result.point_cumulative,
        "interval": list(result.interval_cumulative),
        "per_day": [{"daynum": d.daynum, "point": d.point,
                     "lower": d.lower, "upper": d.upper}
                    for d in result.per_day],
    }
    if args.per_day_csv:
        lines = [_meta_csv_line(args), "daynum,point,lower,upper"]
        for d in result.per_day:
            lines.append(f"{d.daynum},{d.point!r},{d.lower},{d.upper}")
        _emit("\n".join(lines), args.per_day_csv)
    _dump_json(payload, args.out)
    return 0


# --------------------------------------------------------------- sweep


def _parse_cutoffs(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            pieces = part.split(":")
            if len(pieces) not in (2, 3):
                raise DomainError(f"bad cutoff range {part!r}")
            start, stop = int(pieces[0]), int(pieces[1])
            step = int(pieces[2]) if len(pieces) == 3 else 1
            out.extend(range(start, stop + 1, step))
        elif part:
            out.append(int(part))
    if not out:
        raise DomainError("no cutoffs given")
    return out


def _cmd_sweep(args) -> int:
    series = _load_series(args)
    design = _design_from_args(args)
    rows = sensitivity_sweep(series, design, args.target_daynum, args.alpha,
                             _parse_cutoffs(args.cutoffs),
                             overdispersed=args.overdispersed)
    lines = [_meta_csv_line(args),
             "cutoff_daynum,s_current,xi_hat,point,lower,upper,error"]
    for row in rows:
        if row.result is None:
            err = (row.error or "").replace(",", ";").replace("\n", " ")
            lines.append(f"{row.cutoff_daynum},{row.s_current},,,,,{err}")
        else:
            xi = "" if row.xi is None else (
                "inf" if math.isinf(row.xi) else repr(row.xi))
            lo, hi = row.result.interval_cumulative
            lines.append(f"{row.cutoff_daynum},{row.s_current},{xi},"
                         f"{row.result.point_cumulative},{lo},{hi},")
    _emit("\n".join(lines), args.out)
    return 0


# ------------------------------------------------------------ simulate


def _parse_w_dist(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if parts[0] == "uniform":
        if len(parts) == 1:
            return ("uniform", 0.0, 1.0)
        if len(parts) == 3:
            return ("uniform", float(parts[1]), float(parts[2]))
    if parts[0] == "normal" and len(parts) == 3:
        return ("normal", float(parts[1]), float(parts[2]))
    raise DomainError(f"bad covariate law {text!r}; use uniform[,lo,hi] or normal,mu,sd")


def _cmd_simulate(args) -> int:
    theta = tuple(float(v) for v in args.theta.split(",")) if args.theta else None
    w_dist = _parse_w_dist(args.w_dist) if args.w_dist else None
    config = SimConfig(
        scenario=args.scenario,
        n=args.n,
        replications=args.reps,
        alpha=args.alpha,
        seed=args.seed,
        lam=getattr(args, "lam", None),
        case=args.case,
        poly_order=args.order,
        theta=theta,
        w_dist=w_dist,
        workers=args.workers,
    )
    result = run_experiment(config)
    _emit(result_to_csv(result), args.out)
    return 0


# ---------------------------------------------------------- exact-props


def _parse_grid(text: str) -> list[float]:
    values: list[float] = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            pieces = part.split(":")
            if len(pieces) not in (2, 3):
                raise DomainError(f"bad grid range {part!r}")
            start, stop = float(pieces[0]), float(pieces[1])
            step = float(pieces[2]) if len(pieces) == 3 else 1.0
            if step <= 0:
                raise DomainError("grid step must be positive")
            v = start
            while v <= stop + 1e-9:
                values.append(round(v, 10))
                v += step
        elif part:
            values.append(float(part))
    if not values:
        raise DomainError("empty lambda grid")
    return values


def _cmd_exact_props(args) -> int:
    lines = [_meta_csv_line(args),
             "lambda,Gam0R_coverage,Gam0R_length,Gam0N_coverage,Gam0N_length,"
             "Gam1_coverage,Gam1_length,Gam2_coverage,Gam2_length"]
    for lam in _parse_grid(args.lambda_grid):
        randomized = region_smallest(pmf_poisson(lam), args.alpha, 0.0)
        cells = []
        for region in (randomized, region_nonrandomized(randomized),
                       region_normal_known(lam, args.alpha),
                       region_sqrt_known(lam, args.alpha)):
            cov, length = exact_region_properties(region, lam)
            cells += [repr(cov), repr(length)]
        lines.append(",".join([repr(lam)] + cells))
    _emit("\n".join(lines), args.out)
    return 0


# ----------------------------------------------------------- reallocate


def _cmd_reallocate(args) -> int:
    series = _load_series(args)
    if not series.adjustments:
        raise DomainError("reallocate needs --adjustments with at least one entry")
    adjusted = reallocate_adjustments(series)
    lines = [_meta_csv_line(args),
             "dateRep,daynum,weekday,count_original,count_adjusted"]
    for before, after in zip(series.records, adjusted.records):
        lines.append(f"{before.date.day:02d}/{before.date.month:02d}/"
                     f"{before.date.year},{before.daynum},{before.weekday},"
                     f"{before.count},{after.count}")
    _emit("\n".join(lines), args.out)
    return 0


# ---------------------------------------------------------------- main


def _add_data_args(p: argparse.ArgumentParser, need_cutoff: bool = True) -> None:
    p.add_argument("--data", required=True, help="ECDC-layout CSV path")
    p.add_argument("--country", required=True,
                   help="country name or geo id to filter on")
    p.add_argument("--adjustments", help="JSON file of {daynum, amount} entries")
    p.add_argument("--apply-adjustments", action="store_true",
                   help="re-allocate adjustments before fitting")
    p.add_argument("--start-daynum", type=int, default=None)
    if need_cutoff:
        p.add_argument("--cutoff-daynum", type=int, default=None,
                       help="drop observations after this day")


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--order", type=int, default=5, help="polynomial order")
    p.add_argument("--day-factor", action="store_true",
                   help="include weekday dummies (Monday baseline)")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="countpred",
                     description="Prediction regions and forecasts for counts")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the count regression and report AIC/xi")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--max-order", type=int, default=None,
                   help="highest order in the AIC table (default: --order)")
    p.add_argument("--bins", type=int, default=6)
    p.add_argument("--residuals-csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="prediction region at given days")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--daynum", required=True,
                   help="comma-separated day numbers to predict at")
    p.add_argument("--variant", default="normal",
                   choices=["smallest-plugin", "normal", "sqrt", "overdispersed"])
    p.add_argument("--u", type=float, default=0.0,
                   help="randomizer for the smallest-cardinality variant")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("forecast", help="cumulative forecast to a target day")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--target-daynum", type=int, required=True)
    p.add_argument("--overdispersed", action="store_true")
    p.add_argument("--allow-long-horizon", action="store_true")
    p.add_argument("--per-day-csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("sweep", help="forecast sensitivity across cutoffs")
    _add_data_args(p, need_cutoff=False)
    _add_model_args(p)
    p.add_argument("--target-daynum", type=int, required=True)
    p.add_argument("--cutoffs", required=True,
                   help="comma list and/or start:stop[:step] ranges")
    p.add_argument("--overdispersed", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo coverage/length study")
    p.add_argument("--scenario", required=True, choices=["intercept", "regression"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--case", type=int, default=None, choices=[1, 2, 3, 4])
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--theta", default=None, help="comma-separated coefficients")
    p.add_argument("--w-dist", default=None,
                   help="uniform[,lo,hi] or normal,mu,sd")
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=20200315)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("exact-props",
                       help="exact coverage/length of the known-rate regions")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--lambda-grid", required=True,
                   help="comma list and/or start:stop[:step] ranges")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_exact_props)

    p = sub.add_parser("reallocate", help="apply adjustment re-allocation")
    _add_data_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_reallocate)

    return parser


def cli_dispatch(argv) -> int:
    """Run one command line; returns the exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: usage: {_one_line(exc)}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"error: data: {_one_line(exc)}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"error: numerical: {_one_line(exc)}", file=sys.stderr)
        return 3


def _one_line(exc: BaseException) -> str:
    return str(exc).replace("\n", " ")


def main(argv=None) -> int:
    return cli_dispatch(sys.argv[1:] if argv is None else argv)
