"""Running integration-error traces and the one-dimensional van der Corput results."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import integrands as itg
from .sequences import (
    default_direction_numbers,
    digital_net_numerators,
    halton_point,
    radical_inverse,
    sobol_generator_set,
)

EXACT_LIMIT = 1 << 22
HALTON_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


@dataclass(frozen=True)
class SequenceSpec:
    kind: str  # "vdc" | "halton" | "sobol"
    d: int = 1

    def __post_init__(self):
        if self.kind not in ("vdc", "halton", "sobol"):
            raise ValueError(f"unknown sequence {self.kind!r}")
        if self.kind == "vdc" and self.d != 1:
            raise ValueError("van der Corput is one dimensional")
        if self.kind == "halton" and self.d > len(HALTON_BASES):
            raise ValueError(f"halton supports d <= {len(HALTON_BASES)}")


def iter_points(seq: SequenceSpec, n: int) -> Iterator[tuple[Fraction, ...]]:
    """x_0, ..., x_{n-1} as exact fractions."""
    if seq.kind == "vdc":
        for i in range(n):
            yield (radical_inverse(i, 2),)
    elif seq.kind == "halton":
        bases = HALTON_BASES[: seq.d]
        for i in range(n):
            yield halton_point(i, bases)
    else:
        m = max(1, (n - 1).bit_length())
        gens = sobol_generator_set(default_direction_numbers(), seq.d, m)
        den = 1 << m
        for row in digital_net_numerators(gens, n):
            yield tuple(Fraction(int(v), den) for v in row)


# -- traces ------------------------------------------------------------------


class _Neumaier:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float):
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    @property
    def value(self) -> float:
        return self.s + self.c


@dataclass(frozen=True)
class ErrorTrace:
    """Per-n running sums and errors for n = 1..N.

    ``excess[n-1]`` is the signed scaled error n(mu_hat_n - mu) = S_n - n mu,
    exact (Fraction) whenever the sequence and integrand are exact.
    """

    n: np.ndarray
    sums: list
    mu: Fraction | float
    exact: bool

    @property
    def excess(self) -> list:
        return [s - k * self.mu for k, s in zip(self.n.tolist(), self.sums)]

    @property
    def mean(self) -> np.ndarray:
        return np.array([float(s) / k for k, s in zip(self.n.tolist(), self.sums)])

    @property
    def signed_error(self) -> np.ndarray:
        return np.array([float(e) for e in self.excess]) / self.n

    @property
    def scaled_error(self) -> np.ndarray:
        return np.abs(np.array([float(e) for e in self.excess]))

    @property
    def log_scaled_error(self) -> np.ndarray:
        """n |mu_hat - mu| / log n, NaN at n = 1."""
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.scaled_error / np.log(self.n)
        out[self.n == 1] = np.nan
        return out

    def __len__(self):
        return len(self.n)


def running_trace(seq: SequenceSpec, spec: itg.IntegrandSpec, N: int) -> ErrorTrace:
    if N < 1:
        raise ValueError("N must be >= 1")
    if seq.d != spec.d:
        raise ValueError(f"sequence dimension {seq.d} != integrand dimension {spec.d}")
    exact = spec.exact and N <= EXACT_LIMIT
    mu = itg.true_mean(spec)
    sums = []
    if exact:
        acc = Fraction(0)
        for x in iter_points(seq, N):
            acc += itg.evaluate(spec, x)
            sums.append(acc)
    else:
        # error of compensated summation is O(eps) per step, independent of N
        acc = _Neumaier()
        mu = float(mu)
        for x in iter_points(seq, N):
            acc.add(float(itg.evaluate(spec, x)))
            sums.append(acc.value)
    return ErrorTrace(np.arange(1, N + 1), sums, mu, exact)


def records(values: Sequence, start: int = 0) -> list[int]:
    """Positions where the value strictly exceeds every earlier one.

    NaN entries are skipped.  ``start`` offsets the returned positions.
    """
    out = []
    best = None
    for pos, v in enumerate(values):
        if isinstance(v, float) and math.isnan(v):
            continue
        if best is None or v > best:
            best = v
            out.append(pos + start)
    return out


def trace_records(trace: ErrorTrace, scaling: str = "n") -> list[int]:
    """Sample sizes n at which the scaled error sets a new record.

    ``scaling="n"`` uses n|mu_hat - mu| (exact when the trace is exact);
    ``scaling="log"`` divides by log n and starts at n = 2.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    if scaling == "n":
        vals = [abs(e) for e in trace.excess]
    elif scaling == "log":
        vals = trace.log_scaled_error.tolist()
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    return [int(trace.n[p]) for p in records(vals)]


def write_trace_csv(trace: ErrorTrace, fh, scaling: str = "n"):
    rec = set(trace_records(trace, scaling))
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "mean", "signed_error", "scaled_error", "log_scaled_error", "is_record"])
    mean, signed = trace.mean, trace.signed_error
    scaled, logs = trace.scaled_error, trace.log_scaled_error
    for k in range(len(trace)):
        n = int(trace.n[k])
        w.writerow([
            n,
            repr(float(mean[k])),
            repr(float(signed[k])),
            repr(float(scaled[k])),
            "" if n == 1 else repr(float(logs[k])),
            int(n in rec),
        ])


def trace_csv_text(trace: ErrorTrace, scaling: str = "n") -> str:
    buf = io.StringIO()
    write_trace_csv(trace, buf, scaling)
    return buf.getvalue()


# -- one-dimensional discrepancy ---------------------------------------------


def local_discrepancy(points: Sequence, alpha) -> Fraction:
    """(1/n) #{x_i < alpha} - alpha."""
    if not len(points):
        raise ValueError("empty point set")
    alpha = Fraction(alpha)
    below = sum(1 for x in points if Fraction(x) < alpha)
    return Fraction(below, len(points)) - alpha


def binary_digits(alpha, count: int) -> list[int]:
    """a_1..a_count with alpha = sum a_k 2^-k (terminating expansion for dyadics)."""
    alpha = Fraction(alpha)
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    out = []
    num, den = alpha.numerator, alpha.denominator
    for _ in range(count):
        num *= 2
        out.append(num // den)
        num %= den
    return out


def alternation_count(alpha, m: int) -> int:
    """h_alpha(m): digit changes a_k != a_{k+1} for 1 <= k <= m.

    ``alpha`` is a number in [0, 1) or a sequence of at least m + 1 bits.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if isinstance(alpha, (list, tuple)):
        bits = list(alpha)
        if len(bits) < m + 1:
            raise ValueError(f"need {m + 1} bits")
    else:
        bits = binary_digits(alpha, m + 1)
    return sum(bits[k] != bits[k + 1] for k in range(m))


def discrepancy_counts(alpha, N: int, seq: Iterable | None = None) -> list[Fraction]:
    """n delta_n(alpha) for n = 1..N (van der Corput unless ``seq`` given)."""
    alpha = Fraction(alpha)
    pts = seq if seq is not None else (radical_inverse(i, 2) for i in range(N))
    out, below = [], 0
    for n, x in enumerate(pts, start=1):
        if n > N:
            break
        below += Fraction(x) < alpha
        out.append(below - n * alpha)
    return out


def alternation_hit_fraction(m: int, eps, alpha=Fraction(2, 3), seq: Iterable | None = None) -> Fraction:
    """Share of 1 <= n <= 2^m with n delta_n(alpha) > (1 - eps) h_alpha(m)."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    N = 1 << m
    threshold = (1 - eps) * alternation_count(alpha, m)
    hits = sum(1 for v in discrepancy_counts(alpha, N, seq) if v > threshold)
    return Fraction(hits, N)


def vdc_prefix_sum(n: int) -> Fraction:
    """sum_{i<n} x_i for base-2 van der Corput, from per-bit ones counts.

    Digit k of x_i is bit k-1 of i, which runs in alternating blocks of
    2^(k-1) zeros and 2^(k-1) ones.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    total = Fraction(0)
    for k in range(1, (n - 1).bit_length() + 1):
        half = 1 << (k - 1)
        full = n >> k
        ones = half * full + max(n - (full << k) - half, 0)
        total += Fraction(ones, 1 << k)
    return total


def vdc_prefix_sum_direct(n: int) -> Fraction:
    return sum((radical_inverse(i, 2) for i in range(n)), Fraction(0))


def n_L(L: int) -> int:
    if L < 0:
        raise ValueError("L must be >= 0")
    return (4 ** (L + 1) - 1) // 3


@dataclass(frozen=True)
class NLBound:
    L: int
    n: int
    lhs: Fraction
    rhs: Fraction

    @property
    def passed(self) -> bool:
        return self.lhs >= self.rhs

    @property
    def log_ratio(self) -> float:
        return float(self.lhs) / math.log(self.n)


def n_L_bound(L: int) -> NLBound:
    """n_L |mu_hat - 1/2| against bitlen(n_L)/8 for f(x) = x."""
    if L < 1:
        raise ValueError("L must be >= 1")
    n = n_L(L)
    lhs = abs(vdc_prefix_sum(n) - Fraction(n, 2))
    return NLBound(L, n, lhs, Fraction(n.bit_length(), 8))
