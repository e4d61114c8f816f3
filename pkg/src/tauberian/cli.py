"""Command-line front end.

    tauberian rates eval|invert|schedule ...
    tauberian operator profile|decay|scan --op FILE ...
    tauberian certify (--op FILE | --sequence NAME) ...
    tauberian kernel-selftest ...

Exit codes: 0 success/certified, 2 invalid input, 3 spectral singularity,
4 violated/failed identities, 5 pre-asymptotic, 6 failed hypothesis.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import analysis, kernels, operators as ops, rates
from .errors import DomainError, HypothesisFailure, SingularityError, TauberianError
from .serialize import dumps, load_operator, parse_list, parse_rate, parse_real

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SINGULAR = 3
EXIT_VIOLATED = 4
EXIT_PRE_ASYMPTOTIC = 5
EXIT_HYPOTHESIS = 6

_VERDICT_EXIT = {analysis.CERTIFIED: EXIT_OK, analysis.VIOLATED: EXIT_VIOLATED,
                 analysis.PRE_ASYMPTOTIC: EXIT_PRE_ASYMPTOTIC}


def _window(text: str) -> tuple:
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"window must look like a:b, got {text!r}")
    return int(a), int(b)


def _emit(args, rows: list[dict], header: list[str]) -> None:
    if getattr(args, "format", "csv") == "json":
        text = dumps(rows)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row[h]) for h in header])
        text = buf.getvalue()
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else v


def _derived(args, m):
    if args.kind == "m":
        return None
    if args.kind == "mlog":
        return rates.mlog(m)
    return rates.mk(m, args.k)


# ---------------------------------------------------------------- rates

def cmd_rates(args) -> int:
    m = parse_rate(args.rate)
    rows = []
    if args.action == "eval":
        d = _derived(args, m)
        for eps in parse_list(args.eps):
            val = rates.eval_rate(m, eps) if d is None else rates.derived_eval(d, eps)
            rows.append({"eps": eps, "value": float(val)})
        _emit(args, rows, ["eps", "value"])
    elif args.action == "invert":
        d = _derived(args, m) or rates.mlog(m)
        for y in parse_list(args.y):
            rows.append({"y": y, "eps": rates.invert_rate(d, y)})
        _emit(args, rows, ["y", "eps"])
    else:
        regime = "smooth" if args.kind in ("m", "mlog") else args.k
        ns = [int(v) for v in parse_list(args.n)]
        for n, eps in zip(ns, analysis.epsilon_schedule(m, regime, args.c, ns)):
            rows.append({"n": n, "eps_n": "pre-asymptotic" if eps is None else eps})
        _emit(args, rows, ["n", "eps_n"])
    return EXIT_OK


# ---------------------------------------------------------------- operator

def _theta_grid(args) -> np.ndarray:
    if getattr(args, "theta", None):
        return np.array(parse_list(args.theta))
    return ops.default_theta_grid(args.grid, args.theta_min, args.theta_max)


def cmd_operator(args) -> int:
    spec = load_operator(args.op)
    if args.action == "profile":
        rows = [{"theta": float(t), "resolvent_norm": ops.resolvent_norm(spec, float(t))}
                for t in _theta_grid(args)]
        _emit(args, rows, ["theta", "resolvent_norm"])
    elif args.action == "decay":
        orbit = ops.orbit_decay(spec, args.n_max)
        rows = [{"n": int(n), "d_n": float(d)} for n, d in zip(orbit.n, orbit.values)]
        _emit(args, rows, ["n", "d_n"])
        if orbit.divergent:
            print("warning: orbit diverges (operator not power-bounded)", file=sys.stderr)
    else:
        grid = _theta_grid(args) if args.theta else analysis.scan_grid(args.grid)
        flagged = ops.singularity_scan(spec, grid, args.threshold)
        at_one, away = analysis.split_flags(grid, flagged)
        rows = [{"theta": t, "attached_to_one": t in at_one} for t in sorted(flagged)]
        _emit(args, rows, ["theta", "attached_to_one"])
    return EXIT_OK


# ---------------------------------------------------------------- certify

_SEQUENCES = {
    "ones": kernels.Sequence.constant,
    "alternating": kernels.Sequence.alternating,
    "impulse": kernels.Sequence.impulse,
}


def _parse_sequence(text: str) -> kernels.Sequence:
    name, _, param = text.partition(":")
    if name == "geometric":
        return kernels.Sequence.geometric(complex(param.replace("i", "j")) if param else 0.5)
    if name in _SEQUENCES:
        return _SEQUENCES[name]()
    raise TauberianError(f"unknown sequence {text!r}; choose from ones, alternating, impulse, geometric:MU")


def _report_paths(out: str) -> tuple:
    path = Path(out)
    base = path.with_suffix("") if path.suffix in (".json", ".csv") else path
    return base.with_suffix(".json"), base.with_suffix(".csv")


def cmd_certify(args) -> int:
    target = load_operator(args.op) if args.op else _parse_sequence(args.sequence)
    grid = ops.default_theta_grid(args.grid, args.theta_min, args.theta_max)
    try:
        report = analysis.certify_decay(target, c=args.c, calib_window=args.calib, valid_window=args.valid,
                                        grid=grid, threshold=args.threshold)
    except HypothesisFailure as exc:
        print(f"hypothesis failed: {exc.hypothesis}")
        return EXIT_HYPOTHESIS
    report.config = {"c": args.c, "calib": list(args.calib), "valid": list(args.valid), "grid": args.grid,
                     "theta_min": args.theta_min, "theta_max": args.theta_max, "threshold": args.threshold,
                     "slope_window": list(analysis.DEFAULT_SLOPE_WINDOW),
                     "target": args.op or args.sequence}
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        json_path, csv_path = _report_paths(args.out)
        json_path.write_text(dumps(report.to_dict()))
        csv_path.write_text(report.to_csv())
    exp = report.empirical_exponent
    print(f"verdict: {report.verdict}")
    print(f"fitted_C: {_cell(report.fitted_C)}")
    print(f"empirical_exponent: {'n/a' if exp is None else format(exp.exponent, '.6f')}")
    return _VERDICT_EXIT[report.verdict]


# ---------------------------------------------------------------- kernel self test

def cmd_kernel_selftest(args) -> int:
    eps_list = parse_list(args.eps)
    for e in eps_list:
        if not 0 < e <= rates.PI / 2:
            raise DomainError(f"eps must lie in (0, pi/2], got {e!r}")
    identities = [args.identity] if args.identity else None
    result = kernels.self_test(eps_list, identities, args.n, args.k, args.recon_terms)
    report = {"eps": eps_list, "identities": result,
              "config": {"recon_terms": args.recon_terms, "n": args.n, "k": args.k}}
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [name for name, r in result.items() if not r["ok"]]
    if failed:
        print("failed identities: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VIOLATED
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tauberian", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="evaluate, invert and schedule rate functions")
    p.add_argument("action", choices=["eval", "invert", "schedule"])
    p.add_argument("--rate", required=True, help="poly:C,alpha | exp:alpha | const:v | JSON | @file")
    p.add_argument("--kind", choices=["m", "mlog", "mk"], default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--eps", default="pi")
    p.add_argument("--y", default="1")
    p.add_argument("--n", default="1000")
    p.add_argument("--c", type=float, default=analysis.DEFAULT_C)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("operator", help="resolvent profile, orbit decay, singularity scan")
    p.add_argument("action", choices=["profile", "decay", "scan"])
    p.add_argument("--op", required=True, help="operator JSON file")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--theta", help="explicit comma-separated angles")
    p.add_argument("--theta-min", type=float, default=1e-4)
    p.add_argument("--theta-max", type=float, default=rates.PI)
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=analysis.SCAN_THRESHOLD)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_operator)

    p = sub.add_parser("certify", help="calibrate-then-validate decay certificate")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--op", help="operator JSON file")
    src.add_argument("--sequence", help="ones | alternating | impulse | geometric:MU")
    p.add_argument("--c", type=float, default=analysis.DEFAULT_C)
    p.add_argument("--calib", type=_window, default=analysis.DEFAULT_CALIB)
    p.add_argument("--valid", type=_window, default=analysis.DEFAULT_VALID)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--theta-min", type=float, default=1e-4)
    p.add_argument("--theta-max", type=float, default=rates.PI)
    p.add_argument("--threshold", type=float, default=analysis.SCAN_THRESHOLD)
    p.add_argument("--out", help="report path; writes PATH.json and PATH.csv")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("kernel-selftest", help="check the kernel identities")
    p.add_argument("--eps", default="pi/8,pi/4,pi/2")
    p.add_argument("--identity", choices=kernels.SELFTEST_IDENTITIES)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--recon-terms", type=int, default=10_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "kind", "unset") is None:
        args.kind = "m" if args.action == "eval" else "mlog"
    try:
        return args.func(args)
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (TauberianError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
