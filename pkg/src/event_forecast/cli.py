"""Command-line interface: ``event-forecast <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data or validation error,
4 numerical failure.  Diagnostics go to stderr as ``error[<code>]: ...``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from . import prediction as pr
from .coverage import (SimFactors, curves_csv, estimate_v1, lambda_asymptotic,
                       match_distributions, run_coverage_study, weibull_with_quantile)
from .data import BUILTINS, builtin
from .distributions import LlsFamily
from .estimator import WithinSamplePredictor, check_dataset
from .exceptions import EventForecastError

SCHEMA = 1
THREADS_ENV = "EVENT_FORECAST_THREADS"


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _sig(x: float, digits: int = 4) -> str:
    return f"{x:.{digits}g}"


def worker_count() -> int:
    """Worker cap from the environment (the engines here run in one process)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _emit(payload: dict, fmt: str, table: str, rows: list[dict] | None, out) -> None:
    if fmt == "json":
        out.write(json.dumps({"schema": SCHEMA, **payload}, indent=2) + "\n")
    elif fmt == "csv":
        rows = rows or []
        w = csv.DictWriter(out, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    else:
        out.write(table)


def _fit_record(est: WithinSamplePredictor) -> dict:
    p = est.params_
    rec = {"family": est.family_.value, "mu": p.mu, "sigma": p.sigma,
           "loglik": est.fit_.loglik, "n": est.dataset_.n, "events": est.dataset_.n_events,
           "cohorts": len(est.dataset_.cohorts), "converged": est.fit_.converged}
    if est.family_ is LlsFamily.SEV:
        rec.update(eta=p.eta, beta=p.beta)
    return rec


def cmd_fit(args, out) -> int:
    est = WithinSamplePredictor(family=args.family, methods="plugin").fit(check_dataset(args.data))
    rec = _fit_record(est)
    lines = [f"{k:>10}  {_sig(v) if isinstance(v, float) else v}" for k, v in rec.items()]
    _emit({"command": "fit", "data": args.data, "fit": rec}, args.format,
          "\n".join(lines) + "\n", [rec], out)
    return 0


def _bounds_table(bounds: pr.BoundSet, methods, alphas, sides) -> str:
    order = sorted(((a, s) for a in alphas for s in sides),
                   key=lambda k: (k[1] == "upper", -k[0] if k[1] == "upper" else k[0]))
    head = ["confidence", "side"] + list(methods)
    rows = []
    for a, s in order:
        row = [f"{100 * (1 - a):g}%", s]
        for m in methods:
            v = bounds.get(m, a, s)
            row.append("NA" if v is None else str(v))
        rows.append(row)
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    fmt = lambda r: "  ".join(c.rjust(w) for c, w in zip(r, widths))
    return "\n".join([fmt(head)] + [fmt(r) for r in rows]) + "\n"


def cmd_predict(args, out) -> int:
    if (args.window is None) == (args.tw is None):
        raise UsageError("give exactly one of --window or --tw")
    alphas = tuple(args.alpha)
    est = WithinSamplePredictor(family=args.family, methods=args.method, alphas=alphas,
                                n_bootstrap=args.bootstrap, random_state=args.seed,
                                scheme=args.scheme)
    est.fit(check_dataset(args.data))
    sides = pr.SIDES if args.sides == "both" else (args.sides,)
    bounds = est.predict(delta=args.window, t_w=args.tw, sides=args.sides)
    p_hat = est.conditional_probs(delta=args.window, t_w=args.tw)
    if args.dump_replicates:
        if est.bootstrap_ is None:
            raise UsageError("--dump-replicates needs a bootstrap method")
        task = pr.PredictionTask(delta=args.window, t_w=args.tw)
        with open(args.dump_replicates, "w", encoding="utf-8", newline="") as fh:
            fh.write(est.bootstrap_.to_csv(task.window_ends(est.dataset_)))
    payload = {
        "command": "predict", "data": args.data, "fit": _fit_record(est),
        "window": {"delta": args.window, "t_w": args.tw},
        "at_risk": [int(w) for w in est.dataset_.at_risk],
        "p_hat": [float(p) for p in p_hat],
        "bounds": bounds.records(),
    }
    if est.bootstrap_ is not None:
        run = est.bootstrap_
        payload["bootstrap"] = {"B": run.B, "seed": est.seed_, "scheme": run.scheme,
                                "regenerated": run.regenerated_count, "failures": run.failures}
    fit = payload["fit"]
    head = [f"family {fit['family']}: mu={_sig(fit['mu'])} sigma={_sig(fit['sigma'])}"]
    if "beta" in fit:
        head.append(f"beta={_sig(fit['beta'])} eta={_sig(fit['eta'])}")
    head.append("p_hat=" + ",".join(_sig(p) for p in payload["p_hat"]))
    table = " ".join(head) + "\n" + _bounds_table(bounds, est.methods_, alphas, sides)
    rows = []
    for b in bounds:
        rows.append({"method": b.method, "alpha": b.alpha, "confidence": 1 - b.alpha,
                     "side": b.side, "bound": "NA" if b.value is None else b.value,
                     "calibrated_level": "" if b.calibrated_level is None else repr(b.calibrated_level),
                     "na_reason": b.na_reason or ""})
    _emit(payload, args.format, table, rows, out)
    return 0


def cmd_simulate(args, out) -> int:
    methods = tuple(m.strip() for m in args.methods.split(","))
    buf = io.StringIO()
    header = True
    results = []
    for pf1 in args.pf1:
        for er in args.er:
            for d in args.d:
                for beta in args.beta:
                    f = SimFactors(p_f1=pf1, expected_events=er, d=d, beta=beta,
                                   alphas=tuple(args.alpha), N=args.n_sim, B=args.bootstrap,
                                   master_seed=args.seed, methods=methods,
                                   na_policy=args.na_policy)
                    res = run_coverage_study(f)
                    buf.write(res.to_csv(header=header))
                    header = False
                    results.append(res)
    if args.format == "json":
        payload = {"command": "simulate", "studies": [
            {"p_f1": r.factors.p_f1, "expected_events": r.factors.expected_events,
             "d": r.factors.d, "beta": r.factors.beta, "n": r.factors.n,
             "excluded": r.n_excluded, "failed": r.n_failed,
             "rows": [row.__dict__ for row in r.rows]} for r in results]}
        out.write(json.dumps({"schema": SCHEMA, **payload}, indent=2) + "\n")
    else:
        out.write(buf.getvalue())
    return 0


def cmd_compare_dist(args, out) -> int:
    base = weibull_with_quantile(args.beta, args.q_low, args.t_low)
    matched = match_distributions(base, args.q_low, args.pf1)
    t_max = args.t_max if args.t_max is not None else float(
        np.exp(base.mu + base.sigma * LlsFamily.SEV.std_ppf(0.999)))
    t = np.geomspace(args.t_low / 10.0, t_max, args.points)
    if args.format == "json":
        payload = {"command": "compare-dist",
                   "params": {f.value: {"mu": p.mu, "sigma": p.sigma} for f, p in matched.items()},
                   "curves": list(csv.DictReader(io.StringIO(curves_csv(matched, t))))}
        out.write(json.dumps({"schema": SCHEMA, **payload}, indent=2) + "\n")
    else:
        out.write(curves_csv(matched, t))
    return 0


def cmd_asymptotics(args, out) -> int:
    v1s = list(args.v1 or [])
    est = None
    if args.pf1 is not None:
        f = SimFactors(p_f1=args.pf1, expected_events=args.er, d=args.d, beta=args.beta,
                       N=1, B=1, master_seed=args.seed)
        est = estimate_v1(f, M=args.n_fits)
        v1s.append(est.v1)
    if not v1s:
        raise UsageError("give --v1 values or model factors (--pf1, --er, --d, --beta)")
    rows = [{"v1": v, "alpha": a, "lambda": lambda_asymptotic(v, a)} for v in v1s for a in args.alpha]
    if args.format == "json":
        payload = {"command": "asymptotics", "rows": rows}
        if est is not None:
            payload["v1_estimate"] = {"v1": est.v1, "se": est.se, "M": est.M}
        out.write(json.dumps({"schema": SCHEMA, **payload}, indent=2) + "\n")
    elif args.format == "csv":
        _emit({}, "csv", "", rows, out)
    else:
        lines = [f"{'v1':>10}  {'alpha':>6}  {'lambda':>8}"]
        lines += [f"{_sig(r['v1']):>10}  {r['alpha']:>6g}  {r['lambda']:>8.4f}" for r in rows]
        out.write("\n".join(lines) + "\n")
    return 0


def cmd_datasets(args, out) -> int:
    rows = []
    for name in sorted(BUILTINS):
        d = builtin(name)
        rows.append({"name": name, "cohorts": len(d.cohorts), "n": d.n, "events": d.n_events})
    table = "\n".join(f"{r['name']:<16} cohorts={r['cohorts']:<3} n={r['n']:<6} events={r['events']}"
                      for r in rows) + "\n"
    _emit({"command": "datasets", "datasets": rows}, args.format, table, rows, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="event-forecast",
                                description="Prediction bounds for future event counts "
                                            "from censored lifetime data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    families = [f.value for f in LlsFamily]

    def common(sp, formats=("table", "json", "csv"), default="table"):
        sp.add_argument("--format", choices=formats, default=default)

    sp = sub.add_parser("fit", help="maximum likelihood fit")
    sp.add_argument("--data", required=True, help="CSV path or builtin dataset name")
    sp.add_argument("--family", choices=families, default="weibull")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="prediction bounds for a future window")
    sp.add_argument("--data", required=True, help="CSV path or builtin dataset name")
    sp.add_argument("--family", choices=families, default="weibull")
    sp.add_argument("--method", default="all", help="comma list of plugin,calibration,direct,gpq or 'all'")
    sp.add_argument("--alpha", type=_floats, default=[0.05, 0.10])
    sp.add_argument("--window", type=float, help="window length after each cohort's censoring time")
    sp.add_argument("--tw", type=_floats, help="explicit window end (one, or one per cohort)")
    sp.add_argument("--sides", choices=("both", "lower", "upper"), default="both")
    sp.add_argument("--bootstrap", type=int, default=10_000, help="bootstrap size B")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scheme", choices=("type1", "inspection"), default="type1")
    sp.add_argument("--dump-replicates", metavar="PATH", help="write bootstrap replicates as CSV")
    common(sp)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("simulate", help="Monte Carlo coverage study (CSV)")
    sp.add_argument("--pf1", type=_floats, required=True)
    sp.add_argument("--er", type=_floats, required=True)
    sp.add_argument("--d", type=_floats, required=True)
    sp.add_argument("--beta", type=_floats, default=[2.0])
    sp.add_argument("--alpha", type=_floats, default=[0.05, 0.10])
    sp.add_argument("--n-sim", type=int, default=1000, help="Monte Carlo samples N (full scale 5000)")
    sp.add_argument("--bootstrap", type=int, default=500, help="bootstrap size B (full scale 5000)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--methods", default=",".join(pr.METHODS))
    sp.add_argument("--na-policy", choices=("raw", "trivial"), default="raw")
    common(sp, ("csv", "json"), "csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare-dist", help="quantile-matched cdf curves (CSV)")
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--pf1", type=float, default=0.05, help="upper matching quantile")
    sp.add_argument("--q-low", type=float, default=0.01)
    sp.add_argument("--t-low", type=float, default=1.0, help="time at the q-low quantile")
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--points", type=int, default=200)
    common(sp, ("csv", "json"), "csv")
    sp.set_defaults(func=cmd_compare_dist)

    sp = sub.add_parser("asymptotics", help="limiting plug-in coverage table")
    sp.add_argument("--v1", type=_floats)
    sp.add_argument("--alpha", type=_floats, default=[0.05, 0.10])
    sp.add_argument("--pf1", type=float)
    sp.add_argument("--er", type=float, default=45.0)
    sp.add_argument("--d", type=float, default=0.2)
    sp.add_argument("--beta", type=float, default=2.0)
    sp.add_argument("--n-fits", type=int, default=4000)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_asymptotics)

    sp = sub.add_parser("datasets", help="list builtin datasets")
    common(sp)
    sp.set_defaults(func=cmd_datasets)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        worker_count()
        return args.func(args, out)
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except EventForecastError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 3
    except FloatingPointError as exc:
        print(f"error[numeric]: {exc}", file=sys.stderr)
        return 4


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
