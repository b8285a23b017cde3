"""Exact point counts of base-2 digital nets in origin-anchored dyadic boxes.

The number of the first 2^m net points in an elementary interval E(k, c)
is the number of solutions i in GF(2)^m of C i = a, where C stacks the
first k_j rows of generator matrix j and a holds the leading bits of c_j.
A box [0, a)^d splits into a Cartesian product of per-dimension elementary
intervals, so the box count is a sum of such solution counts.

Rows are Python ints (bit c = column c).  Augmented rows put the target
bit in bit 0 and the coefficients above it, so a reduced row equal to 1
reads "0 = 1".
"""

from __future__ import annotations

from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

from .sequences import DyadicRational, GeneratorSet


@dataclass(frozen=True)
class BitMatrix:
    rows: tuple[int, ...]
    cols: int

    def __post_init__(self):
        if any(not 0 <= r < 1 << self.cols for r in self.rows):
            raise ValueError("row wider than column count")

    @property
    def nrows(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class LinearSystemGF2:
    C: BitMatrix
    target: tuple[int, ...]

    def __post_init__(self):
        if len(self.target) != self.C.nrows:
            raise ValueError("target length must equal row count")


@dataclass(frozen=True)
class Interval1D:
    """[c / 2^k, (c + 1) / 2^k)."""

    k: int
    c: int


@dataclass(frozen=True)
class ScaledError:
    """Exact n(mu_hat - mu) = numerator / 2^exponent."""

    numerator: int
    exponent: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return f"{self.numerator}/2^{self.exponent}"


def dyadic_box_decomposition(a: DyadicRational) -> list[Interval1D]:
    """Split [0, a) into one elementary interval per set bit of a, left to right."""
    m = a.log2_denominator
    out = []
    for k in range(1, m + 1):
        if (a.numerator >> (m - k)) & 1:
            # prefix a_1..a_{k-1} followed by a 0 bit
            out.append(Interval1D(k, (a.numerator >> (m - k)) ^ 1))
    return out


def truncate_alpha(m: int, alpha: Fraction = Fraction(2, 3)) -> DyadicRational:
    """floor(2^m alpha) / 2^m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    alpha = Fraction(alpha)
    if not 0 <= alpha < 1:
        raise ValueError("alpha must be in [0, 1)")
    return DyadicRational((alpha.numerator << m) // alpha.denominator, m)


def assemble_system(gens: GeneratorSet, k: Sequence[int], c: Sequence[int]) -> LinearSystemGF2:
    if len(k) != gens.d or len(c) != gens.d:
        raise ValueError("interval dimension does not match generator set")
    rows, target = [], []
    for j, (kj, cj) in enumerate(zip(k, c)):
        if kj > gens.m:
            raise ValueError(f"k_{j}={kj} exceeds precision {gens.m}")
        if not 0 <= cj < 1 << kj:
            raise ValueError(f"c_{j}={cj} out of range for k_{j}={kj}")
        rows.extend(gens.rows[j][:kj])
        target.extend((cj >> (kj - 1 - r)) & 1 for r in range(kj))
    return LinearSystemGF2(BitMatrix(tuple(rows), gens.m), tuple(target))


def gf2_rank(rows: Sequence[int]) -> int:
    pivots: dict[int, int] = {}
    for v in rows:
        while v:
            lead = v.bit_length() - 1
            p = pivots.get(lead)
            if p is None:
                pivots[lead] = v
                break
            v ^= p
    return len(pivots)


def solve_count(system: LinearSystemGF2, m: int) -> int:
    """Number of i in GF(2)^m with C i = target: 0 or 2^(m - rank)."""
    if system.C.cols != m:
        raise ValueError("column count must equal m")
    pivots: dict[int, int] = {}
    for row, t in zip(system.C.rows, system.target):
        v = (row << 1) | t
        while v > 1:
            lead = v.bit_length() - 1
            p = pivots.get(lead)
            if p is None:
                pivots[lead] = v
                break
            v ^= p
        if v == 1:
            return 0
    return 1 << (m - len(pivots))


# -- box counting ------------------------------------------------------------


def _count_naive(gens: GeneratorSet, a: DyadicRational) -> int:
    pieces = dyadic_box_decomposition(a)
    total = 0
    for combo in product(pieces, repeat=gens.d):
        system = assemble_system(gens, [iv.k for iv in combo], [iv.c for iv in combo])
        total += solve_count(system, gens.m)
    return total


class _Eliminator:
    """Augmented echelon basis with undo, for depth-first tuple enumeration."""

    __slots__ = ("pivots", "log")

    def __init__(self):
        self.pivots: dict[int, int] = {}
        self.log: list[int] = []

    def push(self, aug: int) -> bool:
        """Insert an augmented row; False when the system became inconsistent."""
        v = aug
        pivots = self.pivots
        while v > 1:
            lead = v.bit_length() - 1
            p = pivots.get(lead)
            if p is None:
                pivots[lead] = v
                self.log.append(lead)
                return True
            v ^= p
        self.log.append(-1)
        return v == 0

    def pop(self):
        lead = self.log.pop()
        if lead >= 0:
            del self.pivots[lead]

    @property
    def rank(self) -> int:
        return len(self.pivots)


def _bit_schedule(a: DyadicRational, m: int) -> list[int]:
    """Leading bits a_1..a_K of a, K = highest set bit position (0 if a = 0)."""
    e = a.log2_denominator
    bits = [(a.numerator >> (e - k)) & 1 for k in range(1, e + 1)]
    while bits and bits[-1] == 0:
        bits.pop()
    if len(bits) > m:
        raise ValueError(f"box corner needs {len(bits)} bits but precision is {m}")
    return bits


def _dfs_dimension(gens, bits, j, elim, m) -> int:
    """Sum of solution counts over all interval choices in dimensions j..d-1."""
    rows = gens.rows[j]
    last = j == gens.d - 1
    total = 0
    pushed = 0
    for r, bit in enumerate(bits):
        row = rows[r] << 1
        if bit:
            # branch: interval at this bit, whose own digit is 0
            if elim.push(row):
                total += (1 << (m - elim.rank)) if last else _dfs_dimension(gens, bits, j + 1, elim, m)
            elim.pop()
        # continue along the prefix of a with digit equal to the bit
        pushed += 1
        if not elim.push(row | bit):
            break
    for _ in range(pushed):
        elim.pop()
    return total


def _count_shard(args) -> int:
    gens, bits, first_bits = args
    m = gens.m
    elim = _Eliminator()
    rows = gens.rows[0]
    total = 0
    # replay dimension 0 along the prefix, branching only at listed positions
    wanted = set(first_bits)
    stop = max(wanted)
    for r, bit in enumerate(bits):
        if r > stop:
            break
        row = rows[r] << 1
        if r in wanted:
            if elim.push(row):
                total += (1 << (m - elim.rank)) if gens.d == 1 else _dfs_dimension(gens, bits, 1, elim, m)
            elim.pop()
        if not elim.push(row | bit):
            break
    return total


def count_in_box(
    gens: GeneratorSet,
    a: DyadicRational,
    workers: int = 1,
    naive: bool = False,
    executor: Executor | None = None,
) -> int:
    """Exact number of the first 2^m points in [0, a)^d.

    The default path enumerates interval tuples depth first and shares the
    elimination of common row prefixes; ``naive=True`` solves every tuple
    from scratch.  With ``workers > 1`` the first-dimension intervals are
    sharded across processes; the integer sum does not depend on the split.
    """
    m = gens.m
    if a.log2_denominator > m and a.numerator % (1 << (a.log2_denominator - m)):
        raise ValueError("box corner finer than generator precision")
    if naive:
        if a.log2_denominator < m:
            a = DyadicRational(a.numerator << (m - a.log2_denominator), m)
        return _count_naive(gens, a)
    bits = _bit_schedule(a, m)
    set_positions = [r for r, b in enumerate(bits) if b]
    if not set_positions:
        return 0
    if workers <= 1:
        return _count_shard((gens, bits, set_positions))
    shards = [(gens, bits, set_positions[s::workers]) for s in range(workers)]
    shards = [s for s in shards if s[2]]
    if executor is not None:
        return sum(executor.map(_count_shard, shards))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_count_shard, shards))


def signed_scaled_error_exact(
    gens: GeneratorSet,
    alpha: Fraction = Fraction(2, 3),
    workers: int = 1,
    executor: Executor | None = None,
) -> tuple[DyadicRational, int, ScaledError]:
    """n(mu_hat(a_m) - mu(a_m)) for the box [0, a_m)^d with n = 2^m.

    Returns (a_m, count, error) where the error is
    count - A^d / 2^(m(d-1)) over the common denominator 2^(m(d-1)).
    """
    d, m = gens.d, gens.m
    a = truncate_alpha(m, alpha)
    count = count_in_box(gens, a, workers=workers, executor=executor)
    e = m * (d - 1)
    return a, count, ScaledError((count << e) - a.numerator**d, e)


def signed_scaled_error_untruncated(gens: GeneratorSet, alpha: Fraction = Fraction(2, 3)) -> Fraction:
    """n(mu_hat(alpha) - mu(alpha)) for [0, alpha)^d itself, exactly.

    Net points are multiples of 2^-m, so x < alpha iff x < ceil(2^m alpha) / 2^m
    and the untruncated box count is again a dyadic box count.
    """
    d, m = gens.d, gens.m
    alpha = Fraction(alpha)
    corner = -((-alpha.numerator << m) // alpha.denominator)
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    # every m-bit coordinate lies below alpha when alpha > 1 - 2^-m
    count = 1 << m if corner == 1 << m else count_in_box(gens, DyadicRational(corner, m))
    return count - (1 << m) * alpha**d


def truncation_bounds(d: int) -> tuple[Fraction, Fraction]:
    """Enclosure of the true-alpha scaled error minus the truncated one."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return -Fraction(2, 3) ** (d - 1) * d, Fraction(d)


def brute_force_count(numerators, m: int, a: DyadicRational) -> int:
    """Direct membership count of m-bit numerator rows in [0, a)^d."""
    shift = m - a.log2_denominator
    bound = a.numerator << shift if shift >= 0 else None
    if bound is None:
        raise ValueError("box corner finer than point precision")
    return sum(1 for row in numerators if all(int(v) < bound for v in row))

