"""Command line entry point: ``qmclab {run,verify,netcount,rkhs}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments as ex
from .integrands import _parse_threshold


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--d", type=int, default=None, help="dimension")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory (run) or CSV path; 'csv' or '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one figure experiment")
    run.add_argument("--experiment", required=True, help=", ".join(ex.EXPERIMENTS))
    run.add_argument("--seq", choices=["vdc", "halton", "sobol", "random"], default=None)
    run.add_argument("--N", type=int, default=None, help="largest sample size for traces")
    run.add_argument("--m-range", default=None, help="e.g. 1..100")
    run.add_argument("--alpha", default="2/3")
    run.add_argument("--theta", type=float, default=0.5, help="power-product exponent")
    run.add_argument("--weights", choices=["equal", "optimal"], default="optimal")
    run.add_argument("--n", dest="n_list", default=None, help="rkhs sample sizes, e.g. 16,32,...,256")
    run.add_argument("--certificate", action="store_true")
    run.add_argument("--no-plot-scripts", action="store_true")
    _add_common(run)

    ver = sub.add_parser("verify", help="cross-module oracle checks")
    ver.add_argument("--d", type=int, default=3)
    ver.add_argument("--m", type=int, default=10)
    ver.add_argument("--prefix-n", type=int, default=1 << 12)

    net = sub.add_parser("netcount", help="exact signed scaled errors for n = 2^m")
    net.add_argument("--m", default="1..100")
    net.add_argument("--alpha", default="2/3")
    _add_common(net)

    rk = sub.add_parser("rkhs", help="optimal-weight residuals and certificates")
    rk.add_argument("--points", choices=["sobol", "halton", "random"], default="sobol")
    rk.add_argument("--n", dest="n_list", default="16,32,...,256")
    rk.add_argument("--weights", choices=["equal", "optimal"], default="optimal")
    rk.add_argument("--certificate", action="store_true")
    _add_common(rk)
    return parser


def _emit(text: str, out: str | None):
    if out in (None, "-", "csv"):
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _log(msg: str):
    print(msg, file=sys.stderr, flush=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            if args.experiment not in ex.EXPERIMENTS:
                parser.error(f"unknown experiment {args.experiment!r}; choose from {', '.join(ex.EXPERIMENTS)}")
            cfg = ex.ExperimentConfig(
                experiment=args.experiment,
                out=Path(args.out or "results"),
                seq=args.seq,
                d=args.d,
                N=args.N,
                m_range=ex.parse_range(args.m_range) if args.m_range else None,
                alpha=args.alpha,
                theta=args.theta,
                weights=args.weights,
                n_list=ex.parse_n_list(args.n_list) if args.n_list else None,
                certificate=args.certificate,
                workers=args.workers,
                plot_scripts=not args.no_plot_scripts,
            )
            for path in ex.run(cfg, log=_log):
                print(path)
            return 0
        if args.command == "verify":
            report = ex.verify(d_max=args.d, m_max=args.m, prefix_n=args.prefix_n)
            ex.print_report(report)
            return 0 if report.ok else 1
        if args.command == "netcount":
            d = args.d or 2
            path = None if args.out in (None, "-", "csv") else Path(args.out)
            text = ex.run_netcount(d, ex.parse_range(args.m), _parse_threshold(args.alpha),
                                   path, args.workers, log=_log)
            if path is None:
                sys.stdout.write(text)
            return 0
        if args.command == "rkhs":
            text = ex.run_rkhs(args.points, args.d or 2, ex.parse_n_list(args.n_list),
                               args.weights, args.certificate)
            _emit(text, args.out)
            return 0
    except ex.InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
