"""Run every figure experiment at its default size into one results directory.

    python scripts/run_all_figures.py --out results --workers 4
"""

import argparse
import subprocess
import sys
from pathlib import Path

from qmclab import experiments as ex


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="results")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--render", action="store_true", help="execute the generated plot scripts")
    args = p.parse_args()
    out = Path(args.out)

    jobs = [
        ex.ExperimentConfig("fig1-vdc", out / "fig1"),
        ex.ExperimentConfig("fig2-product", out / "fig2"),
        ex.ExperimentConfig("fig3-indicator", out / "fig3"),
        ex.ExperimentConfig("fig4-simplex", out / "fig4"),
        ex.ExperimentConfig("fig5-bigm", out / "fig5", d=2, workers=args.workers),
        ex.ExperimentConfig("fig5-bigm", out / "fig5", d=3, workers=args.workers),
        ex.ExperimentConfig("fig5-bigm", out / "fig5", d=4, workers=args.workers),
    ]
    for d in (1, 2, 3):
        jobs.append(ex.ExperimentConfig("rkhs-rate", out / "rkhs", seq="sobol", d=d,
                                        n_list=(16, 32, 64, 128, 256), certificate=True))
    for cfg in jobs:
        print(f"== {cfg.experiment} -> {cfg.out}", flush=True)
        for path in ex.run(cfg, log=lambda msg: print("  " + msg, flush=True)):
            print(f"  wrote {path}")

    if args.render:
        for script in sorted(out.rglob("plot_*.py")):
            subprocess.run([sys.executable, script.name], cwd=script.parent, check=True)


if __name__ == "__main__":
    main()
