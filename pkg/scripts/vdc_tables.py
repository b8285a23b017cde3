"""Exact one-dimensional van der Corput tables at alpha = 2/3.

Prints, for each m, the largest n*delta_n over n <= 2^m, its mean, and the
share of n whose n*delta_n exceeds (1 - eps) h(m) for a few eps; then the
n_L bound ratios.
"""

import argparse
from fractions import Fraction

from qmclab import errorlab as el


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--m-max", type=int, default=14)
    p.add_argument("--eps", default="1/2,3/4,9/10")
    args = p.parse_args()
    eps = [Fraction(e) for e in args.eps.split(",")]
    alpha = Fraction(2, 3)

    counts = el.discrepancy_counts(alpha, 1 << args.m_max)
    print("m  max(n delta)  mean(n delta)  " + "  ".join(f"eps={e}" for e in eps))
    for m in range(1, args.m_max + 1):
        head = counts[: 1 << m]
        h = el.alternation_count(alpha, m)
        shares = [Fraction(sum(v > (1 - e) * h for v in head), len(head)) for e in eps]
        print(f"{m:<3d}{float(max(head)):>12.4f}{float(sum(head) / len(head)):>15.4f}  "
              + "  ".join(f"{float(s):>8.5f}" for s in shares))

    print("\nL  n_L  n|mu-1/2|  bitlen/8  ratio/log")
    for L in range(1, 13):
        r = el.n_L_bound(L)
        print(f"{L:<3d}{r.n:<10d}{float(r.lhs):>10.4f}{float(r.rhs):>9.3f}{r.log_ratio:>10.4f}")


if __name__ == "__main__":
    main()
