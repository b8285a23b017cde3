"""Long exact big-m runs: d=3 up to m=100 and d=4 up to m=50.

Rows are checkpointed per m, so an interrupted run resumes where it stopped.

    python scripts/bigm_long.py --d 3 --m 1..100 --workers 8
"""

import argparse
import time
from pathlib import Path

from qmclab import experiments as ex
from qmclab.integrands import _parse_threshold


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--m", default=None, help="range, default 1..100 (d<=3) or 1..50")
    p.add_argument("--alpha", default="2/3")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/fig5")
    args = p.parse_args()

    m_range = ex.parse_range(args.m) if args.m else ((1, 100) if args.d <= 3 else (1, 50))
    path = Path(args.out) / f"fig5_bigm_d{args.d}.csv"
    t0 = time.perf_counter()
    ex.run_netcount(args.d, m_range, _parse_threshold(args.alpha), path, args.workers, log=print)
    print(f"{path}: {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
