"""Command-line front end.

Subcommands: fit, grenander, test, simulate, tables, limits.  Results go
to stdout (or --out); the resolved configuration is echoed to stderr
first, so stdout stays byte-identical for a fixed seed whatever the
worker count.  Exit codes: 0 success, 2 validation/usage error, 1
computation error.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import asdict

from . import coxfit
from .bootstrap import bootstrap_critical_value
from .data import load_csv, write_csv
from .estimators import breslow, grenander
from .exceptions import FitError, ParseError
from .gof import TestConfig
from .harness import reference_tables
from .limits import ArgmaxMCConfig, estimate_constants
from .scenarios import AltABaseline, AltBBaseline, Scenario, WeibullBaseline, sample
from .weibull import fit_weibull

THREADS_ENV = "MONOHAZ_THREADS"


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _echo_config(name: str, config: dict) -> None:
    print(f"# {name} config: {json.dumps(config, sort_keys=True)}", file=sys.stderr)


def _open_input(path: str):
    return sys.stdin if path == "-" else open(path, "r")


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _parse_scenario(args) -> Scenario:
    kind, _, params = args.scenario.partition(":")
    vals = [float(v) for v in params.split(",")] if params else []
    if kind == "weibull" and len(vals) == 2:
        baseline = WeibullBaseline(*vals)
    elif kind == "alta" and len(vals) == 1:
        baseline = AltABaseline(vals[0])
    elif kind == "altb" and len(vals) == 1:
        baseline = AltBBaseline(vals[0])
    else:
        raise ValueError(
            "scenario must be weibull:MU,NU or alta:C or altb:C, got "
            + repr(args.scenario)
        )
    return Scenario(
        baseline=baseline,
        beta=tuple(args.beta),
        censor_tau=args.tau,
        window=(args.eps, args.M),
        n=args.n,
    )


def _cmd_fit(args) -> int:
    data = load_csv(_open_input(args.csv))
    _echo_config("fit", {"csv": args.csv, "n": data.n, "d": data.dim})
    cox = coxfit.fit(data)
    theta = fit_weibull(data, beta_init=cox.beta_hat)
    report = {
        "cox": {
            "beta_hat": list(map(float, cox.beta_hat)),
            "loglik": cox.loglik,
            "gradient_norm": cox.gradient_norm,
            "iterations": cox.iterations,
            "converged": cox.converged,
        },
        "weibull": theta.to_dict(),
    }
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _cmd_grenander(args) -> int:
    data = load_csv(_open_input(args.csv))
    _echo_config(
        "grenander",
        {"csv": args.csv, "eps": args.eps, "M": args.M, "n": data.n},
    )
    beta_hat = coxfit.fit(data).beta_hat
    est = grenander(breslow(data, beta_hat), (args.eps, args.M))
    buf = io.StringIO()
    est.to_csv(buf)
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_test(args) -> int:
    data = load_csv(_open_input(args.csv))
    cfg = TestConfig(
        window=(args.eps, args.M), p=args.p, split_ratio=args.split,
        alpha=args.alpha, B=args.B,
    )
    _echo_config(
        "test",
        {"csv": args.csv, "stat": args.stat, "seed": args.seed,
         "threads": args.threads, **cfg.to_dict()},
    )
    report = bootstrap_critical_value(
        data, cfg, args.stat, seed=args.seed, workers=args.threads
    )
    payload = report.to_dict()
    payload["n"] = data.n
    payload.update(cfg.to_dict())
    if args.boot_out:
        _emit(
            "replicate,value\n"
            + "".join(f"{j},{v!r}\n" for j, v in enumerate(report.boot_values)),
            args.boot_out,
        )
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _cmd_simulate(args) -> int:
    scenario = _parse_scenario(args)
    _echo_config(
        "simulate", {"scenario": scenario.to_dict(), "seed": args.seed}
    )
    data = sample(scenario, args.seed)
    buf = io.StringIO()
    write_csv(data, buf)
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_tables(args) -> int:
    _echo_config(
        "tables",
        {"scale": args.scale, "out": args.out, "seed": args.seed,
         "threads": args.threads, "n_list": args.n_list,
         "outer_reps": args.N, "B": args.B},
    )
    written = reference_tables(
        args.scale, args.out, workers=args.threads, master_seed=args.seed,
        n_list=args.n_list, outer_reps=args.N, B=args.B,
    )
    for path in written:
        print(path)
    return 0


def _cmd_limits(args) -> int:
    cfg = ArgmaxMCConfig(
        half_width=args.half_width, step=args.step, reps=args.reps,
        a_max=args.a_max, a_step=args.a_step,
    )
    _echo_config("limits", {"p": args.p, "seed": args.seed, **asdict(cfg)})
    consts = estimate_constants(args.p, cfg, args.seed)
    _emit(
        "p,e_abs_x0_p,e_stderr,k_p,k_stderr\n"
        "%.17g,%.17g,%.17g,%.17g,%.17g\n"
        % (consts.p, consts.e_abs_x0_p, consts.e_stderr, consts.k_p,
           consts.k_stderr),
        args.out,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monohaz",
        description="Monotone baseline hazard estimation and Weibull "
        "goodness-of-fit testing for the Cox model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="Cox partial-likelihood and Weibull fits")
    p.add_argument("csv", help="dataset CSV path, or - for stdin")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("grenander", help="monotone hazard estimate as CSV")
    p.add_argument("csv")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_grenander)

    p = sub.add_parser("test", help="bootstrap goodness-of-fit test")
    p.add_argument("csv")
    p.add_argument("--stat", choices=("T", "LR", "S"), default="T")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--B", type=int, default=199)
    p.add_argument("--split", type=float, default=1.0,
                   help="split ratio; 1 fits everything on the full sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--boot-out", default=None,
                   help="optional CSV dump of the bootstrap values")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    p.add_argument("--scenario", required=True,
                   help="weibull:MU,NU or alta:C or altb:C")
    p.add_argument("--beta", type=float, nargs="+", default=[0.5])
    p.add_argument("--tau", type=float, default=float("inf"))
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tables", help="run the reference scenario grid")
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--n-list", type=int, nargs="+", default=None, dest="n_list")
    p.add_argument("--N", type=int, default=None, help="outer replications")
    p.add_argument("--B", type=int, default=None, help="bootstrap replications")
    p.set_defaults(func=_cmd_tables)

    p = sub.add_parser("limits", help="Monte-Carlo limit constants")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--reps", type=int, default=200_000)
    p.add_argument("--half-width", type=float, default=6.0)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--a-max", type=float, default=4.0)
    p.add_argument("--a-step", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_limits)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = _default_threads()
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FitError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
