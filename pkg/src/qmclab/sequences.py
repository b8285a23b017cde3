"""Exact van der Corput, Halton and Sobol' points, and (t,m,d)-net checks.

Base-2 coordinates are carried as :class:`DyadicRational`; other bases use
:class:`fractions.Fraction`.  Nothing here touches floating point.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

MAX_PRECISION = 128
DIRECTION_NUMBERS_ENV = "QMCLAB_DIRECTION_NUMBERS"


@total_ordering
@dataclass(frozen=True, eq=False)
class DyadicRational:
    """numerator / 2**log2_denominator, a value in [0, 1)."""

    numerator: int
    log2_denominator: int

    def __post_init__(self):
        if self.log2_denominator < 0 or self.numerator < 0:
            raise ValueError("negative numerator or exponent")
        if self.numerator >= 1 << self.log2_denominator:
            raise ValueError("dyadic value must lie in [0, 1)")

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.log2_denominator)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def _cmp_key(self, other):
        if isinstance(other, DyadicRational):
            return other.to_fraction()
        if isinstance(other, (int, Fraction)):
            return Fraction(other)
        return NotImplemented

    def __eq__(self, other):
        key = self._cmp_key(other)
        if key is NotImplemented:
            return NotImplemented
        return self.to_fraction() == key

    def __lt__(self, other):
        key = self._cmp_key(other)
        if key is NotImplemented:
            return NotImplemented
        return self.to_fraction() < key

    def __hash__(self):
        return hash(self.to_fraction())

    def __repr__(self):
        return f"DyadicRational({self.numerator}/2^{self.log2_denominator})"


def radical_inverse(i: int, b: int) -> Fraction:
    """Digit reversal of ``i`` in base ``b`` about the radix point."""
    if b < 2:
        raise ValueError(f"base must be >= 2, got {b}")
    if i < 0:
        raise ValueError(f"index must be nonnegative, got {i}")
    num, den = 0, 1
    while i:
        i, digit = divmod(i, b)
        num = num * b + digit
        den *= b
    return Fraction(num, den)


def van_der_corput_dyadic(i: int, m: int) -> DyadicRational:
    """Base-2 radical inverse of ``i < 2**m`` as a dyadic with exponent ``m``."""
    if not 0 <= i < 1 << m:
        raise ValueError(f"index {i} out of range for {m} bits")
    rev = int(format(i, f"0{m}b")[::-1], 2) if m else 0
    return DyadicRational(rev, m)


def _check_bases(bases: Sequence[int]):
    for b in bases:
        if b < 2:
            raise ValueError(f"base must be >= 2, got {b}")
    for b1, b2 in itertools.combinations(bases, 2):
        if math.gcd(b1, b2) != 1:
            raise ValueError(f"bases {b1} and {b2} are not coprime")


def halton_point(i: int, bases: Sequence[int]) -> tuple[Fraction, ...]:
    _check_bases(bases)
    return tuple(radical_inverse(i, b) for b in bases)


# -- direction numbers -------------------------------------------------------


@dataclass(frozen=True)
class DirectionNumberRecord:
    d: int
    s: int
    a: int
    m: tuple[int, ...]


class DirectionNumberError(ValueError):
    pass


def load_direction_numbers(lines: Iterable[str]) -> list[DirectionNumberRecord]:
    """Parse the Joe-Kuo text format: a header line, then ``d s a m_1 .. m_s``."""
    records = []
    for lineno, line in enumerate(lines, start=1):
        if lineno == 1:
            continue
        if not line.strip():
            continue
        try:
            fields = [int(tok) for tok in line.split()]
        except ValueError:
            raise DirectionNumberError(f"line {lineno}: non-integer field") from None
        if len(fields) < 4:
            raise DirectionNumberError(f"line {lineno}: too few fields")
        d, s, a, *ms = fields
        if s < 1 or len(ms) != s:
            raise DirectionNumberError(
                f"line {lineno}: degree {s} but {len(ms)} initial values"
            )
        if not 0 <= a < 1 << max(s - 1, 0):
            raise DirectionNumberError(f"line {lineno}: coefficient {a} out of range")
        for k, mk in enumerate(ms, start=1):
            if mk % 2 == 0:
                raise DirectionNumberError(f"line {lineno}: m_{k}={mk} is even")
            if not 0 < mk < 1 << k:
                raise DirectionNumberError(f"line {lineno}: m_{k}={mk} >= 2^{k}")
        records.append(DirectionNumberRecord(d, s, a, tuple(ms)))
    return records


def default_direction_numbers() -> list[DirectionNumberRecord]:
    """Shipped fixture, or the file named by ``$QMCLAB_DIRECTION_NUMBERS``."""
    path = os.environ.get(DIRECTION_NUMBERS_ENV)
    if path:
        with open(path) as fh:
            return load_direction_numbers(fh)
    text = resources.files("qmclab.data").joinpath("new-joe-kuo-6.50").read_text()
    return load_direction_numbers(text.splitlines())


# -- generator matrices ------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSet:
    """Per-dimension m x m bit matrices of a base-2 digital sequence.

    ``rows[j][r]`` is row r (0-based; row r gives digit 2^-(r+1)) of matrix j
    packed as an int whose bit c is the entry in column c.  Column c acts on
    bit c of the point index.  ``columns[j][c]`` is the same matrix packed by
    column with row 0 in the most significant of m bits, which is what point
    generation wants.
    """

    d: int
    m: int
    columns: tuple[tuple[int, ...], ...]
    t: int | None = None
    rows: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.columns) != self.d:
            raise ValueError("need one matrix per dimension")
        for cols in self.columns:
            if len(cols) != self.m or any(not 0 <= v < 1 << self.m for v in cols):
                raise ValueError("each matrix must be m x m over {0,1}")
        object.__setattr__(self, "rows", tuple(_transpose(c, self.m) for c in self.columns))

    def matrix(self, j: int) -> np.ndarray:
        """Dense 0/1 view of matrix j, indexed [row, column]."""
        out = np.zeros((self.m, self.m), dtype=np.uint8)
        for r, row in enumerate(self.rows[j]):
            for c in range(self.m):
                out[r, c] = (row >> c) & 1
        return out


def _transpose(columns: Sequence[int], m: int) -> tuple[int, ...]:
    rows = []
    for r in range(m):
        shift = m - 1 - r
        row = 0
        for c, col in enumerate(columns):
            if (col >> shift) & 1:
                row |= 1 << c
        rows.append(row)
    return tuple(rows)


def _direction_integers(rec: DirectionNumberRecord, m: int) -> list[int]:
    """m_1..m_m from the primitive-polynomial recurrence."""
    s, a = rec.s, rec.a
    ms = list(rec.m[:m])
    for k in range(s, m):
        new = ms[k - s] ^ (ms[k - s] << s)
        for q in range(1, s):
            if (a >> (s - 1 - q)) & 1:
                new ^= ms[k - q] << q
        ms.append(new)
    return ms


def sobol_generator_set(records: Sequence[DirectionNumberRecord], d: int, m: int) -> GeneratorSet:
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 1 <= m <= MAX_PRECISION:
        raise ValueError(f"precision must be in 1..{MAX_PRECISION}")
    by_dim = {rec.d: rec for rec in records}
    columns = [tuple(1 << (m - 1 - c) for c in range(m))]
    for j in range(2, d + 1):
        if j not in by_dim:
            raise KeyError(f"no direction numbers for dimension {j}")
        ms = _direction_integers(by_dim[j], m)
        # v_c = m_c / 2^c, scaled to m bits
        columns.append(tuple(mc << (m - c) for c, mc in enumerate(ms, start=1)))
    return GeneratorSet(d, m, tuple(columns))


def digital_point_numerators(i: int, gens: GeneratorSet) -> tuple[int, ...]:
    if not 0 <= i < 1 << gens.m:
        raise ValueError(f"index {i} out of range for precision {gens.m}")
    out = []
    for cols in gens.columns:
        acc, c, k = 0, 0, i
        while k:
            if k & 1:
                acc ^= cols[c]
            k >>= 1
            c += 1
        out.append(acc)
    return tuple(out)


def sobol_point(i: int, gens: GeneratorSet) -> tuple[DyadicRational, ...]:
    return tuple(DyadicRational(v, gens.m) for v in digital_point_numerators(i, gens))


def digital_net_numerators(gens: GeneratorSet, n: int) -> np.ndarray:
    """First n points as an (n, d) array of m-bit numerators, via Gray-code updates.

    Returned as Python ints in an object array when m > 63.
    """
    if n > 1 << gens.m:
        raise ValueError(f"n={n} exceeds 2^{gens.m}")
    dtype = np.uint64 if gens.m <= 63 else object
    out = np.zeros((n, gens.d), dtype=dtype)
    for j, cols in enumerate(gens.columns):
        for c, col in enumerate(cols):
            if (1 << c) >= n:
                break
            # bit c of i is set on the upper half of each block of 2^(c+1)
            idx = np.arange(n)
            mask = ((idx >> c) & 1).astype(bool)
            if dtype is object:
                out[mask, j] = [v ^ col for v in out[mask, j]]
            else:
                out[mask, j] ^= np.uint64(col)
    return out


# -- net property ------------------------------------------------------------


def compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative ints summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def _cell_index(x, k: int, b: int) -> int:
    if isinstance(x, DyadicRational) and b == 2:
        shift = x.log2_denominator - k
        return x.numerator >> shift if shift >= 0 else x.numerator << -shift
    q = x.to_fraction() if isinstance(x, DyadicRational) else Fraction(x)
    return (q.numerator * b**k) // q.denominator


def is_tmd_net(points: Sequence[Sequence], t: int, m: int, d: int, b: int = 2) -> bool:
    """Every elementary interval with |k| = m - t holds exactly b^t points.

    Coarser intervals are unions of these, so checking |k| = m - t suffices.
    """
    n = b**m
    if len(points) != n:
        raise ValueError(f"expected {n} points, got {len(points)}")
    if not 0 <= t <= m:
        raise ValueError("need 0 <= t <= m")
    if any(len(p) != d for p in points):
        raise ValueError("point dimension mismatch")
    level = m - t
    # digit expansions up to depth `level` per coordinate
    cells = np.array(
        [[_cell_index(x, level, b) for x in p] for p in points], dtype=object
    )
    if level < 64 and b**level < 2**62:
        cells = cells.astype(np.int64)
    for k in compositions(level, d):
        key = np.zeros(n, dtype=np.int64)
        for j, kj in enumerate(k):
            key = key * b**kj + cells[:, j] // b ** (level - kj)
        counts = np.bincount(key, minlength=b**level)
        if counts.shape[0] != b**level or np.any(counts != b**t):
            return False
    return True


def smallest_t(points: Sequence[Sequence], m: int, d: int, b: int = 2) -> int:
    for t in range(m + 1):
        if is_tmd_net(points, t, m, d, b):
            return t
    return m
