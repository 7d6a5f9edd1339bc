"""``mlab`` command line.

Exit status: 0 when every verdict passes, 2 when one fails, 1 on errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import _env  # noqa: F401
from .config import ConfigError, bundled_configs, full_schema
from .report import ExperimentError
from .runner import load_config, run
from .scenarios import REGISTRY

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _krange(text: str) -> list[int]:
    try:
        a, b = text.split(":")
        lo, hi = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B with integers, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return [lo, hi]


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _q(text: str):
    if text in ("inf", "infinity"):
        return "inf"
    return float(text)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", help="directory for <name>.report.json and <name>.tables.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", help="report name (default: the scenario name)")


def _torus_args(p: argparse.ArgumentParser, n=1024, period=256.0):
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n", type=int, default=n, help="points per axis (power of two)")
    p.add_argument("--period", type=float, default=period)
    p.add_argument("--symbol", choices=["continuum", "discrete"], default="continuum")


def _theta_args(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--theta-sweep", action="store_true",
                   help="theta_j = pi/2 - 2^-j over --j-range (the default)")
    g.add_argument("--theta", type=_floats, help="explicit comma-separated angles")
    p.add_argument("--j-range", type=_krange, default=[2, 10])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mlab", description="spectral multiplier experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run a config file or a bundled config by name")
    p.add_argument("config")
    p.add_argument("--out", help="override the config's output directory")
    p.add_argument("--seed", type=int, help="override the config's seed")
    p.add_argument("--no-write", action="store_true", help="do not write report files")
    p.add_argument("--json", action="store_true", help="print the full report to stdout")

    sub.add_parser("list", help="list scenarios and bundled configs")
    p = sub.add_parser("schema", help="print the config JSON schema")

    p = sub.add_parser("norm", help="one function-space norm")
    p.add_argument("--kind", required=True, choices=["besov", "mihlin", "einf", "eunif", "classical"])
    p.add_argument("--f", dest="expr", required=True, help="infix expression in x")
    p.add_argument("--domain", choices=["real", "positive"], default="real")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--q", type=_q, default=None, help="1, 2, ... or inf (besov only)")
    p.add_argument("--origin", type=float, default=-32.0)
    p.add_argument("--step", type=float, default=1 / 64)
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--k-range", type=_krange, default=[-8, 8])
    p.add_argument("--order", type=int, default=2, help="derivative order (classical only)")
    p.add_argument("--allow-fd", action="store_true")
    _common(p)

    pois = sub.add_parser("poisson", help="rotated Poisson kernel sweeps").add_subparsers(
        dest="pcmd", required=True)
    p = pois.add_parser("c4")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.5)
    _theta_args(p)
    _common(p)
    p = pois.add_parser("hormander")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k-range", type=_krange, default=[-8, 8])
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0)
    _theta_args(p)
    _common(p)
    p = pois.add_parser("dini")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.5)
    _theta_args(p)
    _common(p)

    ops = sub.add_parser("operators", help="torus operator estimates").add_subparsers(
        dest="ocmd", required=True)
    p = ops.add_parser("opnorm")
    p.add_argument("--f", dest="expr", required=True)
    p.add_argument("--domain", choices=["real", "positive"], default="real")
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--mean-zero", action="store_true")
    _torus_args(p)
    _common(p)
    p = ops.add_parser("gamma")
    p.add_argument("--family", choices=["wave", "semigroup"], default="wave")
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--beta", type=float, default=0.6)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--k-range", type=_krange, default=[-8, 8])
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--gaussian", action="store_true")
    _torus_args(p)
    _common(p)
    p = ops.add_parser("pl-ratio")
    p.add_argument("--p", type=_floats, default=[2.0, 4.0])
    p.add_argument("--samples", type=int, default=100)
    _torus_args(p)
    _common(p)
    p = ops.add_parser("resolvent")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--angles", type=_floats, default=[0.75, 1.5, 3.0])
    p.add_argument("--radii", type=_floats, default=[0.01, 1.0, 100.0])
    _torus_args(p)
    _common(p)
    return ap


def _theta_params(a) -> dict:
    if a.theta:
        return {"thetas": a.theta}
    return {"j_min": a.j_range[0], "j_max": a.j_range[1]}


def _torus_params(a) -> dict:
    return {"d": a.d, "n": a.n, "period": a.period, "symbol": a.symbol}


def adhoc_config(a) -> dict:
    """Translate a norm/poisson/operators invocation into a config dict."""
    if a.cmd == "norm":
        scen, params = "norm", {"kind": a.kind, "expr": a.expr, "domain": a.domain,
                                "alpha": a.alpha, "q": a.q, "origin": a.origin, "step": a.step,
                                "n": a.n, "k_range": a.k_range, "order": a.order,
                                "allow_fd": a.allow_fd}
    elif a.cmd == "poisson":
        if a.pcmd == "c4":
            scen, params = "c4-sweep", {"dims": [a.d], "delta": a.delta, "anchors": False,
                                        **_theta_params(a)}
        elif a.pcmd == "hormander":
            scen, params = "hormander-sweep", {"dims": [a.d], "k_range": a.k_range, "y": a.y,
                                               "t": a.t, **_theta_params(a)}
        else:
            scen, params = "dini", {"d": a.d, "epsilon": a.epsilon, "delta": a.delta,
                                    **_theta_params(a)}
    else:
        tp = _torus_params(a)
        if a.ocmd == "opnorm":
            scen, params = "opnorm", {**tp, "expr": a.expr, "domain": a.domain, "p": a.p,
                                      "mean_zero": a.mean_zero}
        elif a.ocmd == "gamma":
            scen, params = "gamma-estimate", {**tp, "family": a.family, "alpha": a.alpha,
                                              "beta": a.beta, "t": a.t, "theta": a.theta,
                                              "k_range": a.k_range, "p": a.p,
                                              "trials": a.trials, "gaussian": a.gaussian}
        elif a.ocmd == "pl-ratio":
            scen, params = "paley-littlewood", {**tp, "ps": a.p, "samples": a.samples}
        else:
            scen, params = "resolvent", {**tp, "theta": a.theta, "p": a.p, "angles": a.angles,
                                         "radii": a.radii}
    return {"scenario": scen, "name": a.name or scen, "seed": a.seed, "params": params}


def _print_verdicts(report, stream):
    for v in report.verdicts:
        status = "PASS" if v["passed"] else "FAIL"
        print(f"{status}  {v['name']}: {v['quantity']} = {v['value']!r}", file=stream)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "list":
            for name, sc in sorted(REGISTRY.items()):
                print(f"{name:20s} {sc.doc.splitlines()[0] if sc.doc else ''}")
            print("bundled configs:", ", ".join(bundled_configs()))
            return EXIT_PASS
        if args.cmd == "schema":
            print(json.dumps(full_schema(REGISTRY), indent=2))
            return EXIT_PASS
        if args.cmd == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            report = run(cfg, out_dir=args.out, write=not args.no_write)
            if args.json:
                print(report.to_json())
            else:
                _print_verdicts(report, sys.stdout)
                print(f"{report.name}: {'pass' if report.passed else 'FAIL'} "
                      f"({report.stamps['wall_seconds']} s)")
        else:
            cfg = load_config(adhoc_config(args))
            report = run(cfg, out_dir=args.out, write=args.out is not None)
            print(report.to_json())
    except (ConfigError, ExperimentError) as exc:
        print(f"mlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"mlab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
