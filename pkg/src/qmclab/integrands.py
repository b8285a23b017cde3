"""Test integrands on [0,1)^d with exact evaluation and exact means.

Indicators use strict ``x < alpha`` to match half-open elementary intervals.
Irrational thresholds (e.g. sqrt(2) - 1) are stored as their 128-bit
binary truncation, so comparisons stay exact rational comparisons.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .sequences import DyadicRational

IRRATIONAL_BITS = 128

FAMILIES = (
    "linear",
    "box",
    "centered-product",
    "centered-indicator",
    "simplex",
    "power",
)


def sqrt2_minus_1(bits: int = IRRATIONAL_BITS) -> Fraction:
    """floor(2^bits (sqrt(2) - 1)) / 2^bits."""
    return Fraction(math.isqrt(2 << (2 * bits)) - (1 << bits), 1 << bits)


def _as_fraction(x) -> Fraction:
    if isinstance(x, DyadicRational):
        return x.to_fraction()
    return Fraction(x)


@dataclass(frozen=True)
class IntegrandSpec:
    family: str
    d: int
    alpha: tuple[Fraction, ...] = ()
    theta: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown integrand family {self.family!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.family in ("box", "centered-indicator"):
            if len(self.alpha) != self.d:
                raise ValueError(f"need {self.d} thresholds, got {len(self.alpha)}")
            if any(not 0 < a < 1 for a in self.alpha):
                raise ValueError("thresholds must lie in (0, 1)")
        if self.family == "simplex" and self.d != 2:
            raise ValueError("simplex indicator is two dimensional")
        if self.family == "linear" and self.d != 1:
            raise ValueError("linear integrand is one dimensional")
        if self.family == "power" and not (self.theta is not None and 0 < self.theta < 1):
            raise ValueError("power integrand needs theta in (0, 1)")

    @property
    def exact(self) -> bool:
        return self.family != "power"

    def __str__(self):
        if self.alpha:
            return f"{self.family}:" + ",".join(str(a) for a in self.alpha)
        if self.theta is not None:
            return f"{self.family}:{self.theta}"
        return self.family


def linear() -> IntegrandSpec:
    return IntegrandSpec("linear", 1)


def box(alpha: Sequence) -> IntegrandSpec:
    return IntegrandSpec("box", len(alpha), tuple(Fraction(a) for a in alpha))


def centered_product(d: int) -> IntegrandSpec:
    return IntegrandSpec("centered-product", d)


def centered_indicator(alpha: Sequence) -> IntegrandSpec:
    return IntegrandSpec("centered-indicator", len(alpha), tuple(Fraction(a) for a in alpha))


def simplex() -> IntegrandSpec:
    return IntegrandSpec("simplex", 2)


def power_product(d: int, theta: float) -> IntegrandSpec:
    return IntegrandSpec("power", d, theta=theta)


def evaluate(spec: IntegrandSpec, x: Sequence):
    """f(x); a Fraction for every family except the power product."""
    if len(x) != spec.d:
        raise ValueError(f"point has dimension {len(x)}, integrand {spec.d}")
    fam = spec.family
    if fam == "power":
        th = spec.theta
        return math.prod(float(_as_fraction(xj)) ** th - 1 / (1 + th) for xj in x)
    q = [_as_fraction(xj) for xj in x]
    if fam == "linear":
        return q[0]
    if fam == "box":
        return Fraction(int(all(qj < a for qj, a in zip(q, spec.alpha))))
    if fam == "centered-product":
        return math.prod((qj - Fraction(1, 2) for qj in q), start=Fraction(1))
    if fam == "centered-indicator":
        return math.prod(
            (int(qj < a) - a for qj, a in zip(q, spec.alpha)), start=Fraction(1)
        )
    if fam == "simplex":
        return Fraction(int(q[0] + q[1] < 1))
    raise AssertionError(fam)


def true_mean(spec: IntegrandSpec) -> Fraction:
    fam = spec.family
    if fam == "linear":
        return Fraction(1, 2)
    if fam == "box":
        return math.prod(spec.alpha, start=Fraction(1))
    if fam == "simplex":
        return Fraction(1, 2)
    # centered families: every factor integrates to zero
    return Fraction(0)


_SPEC_RE = re.compile(r"^(?P<fam>[a-z-]+)(?::(?P<args>.*))?$")


def _parse_threshold(tok: str) -> Fraction:
    tok = tok.strip()
    if tok in ("sqrt2-1", "sqrt(2)-1"):
        return sqrt2_minus_1()
    return Fraction(tok)


def parse_integrand(text: str, d: int | None = None) -> IntegrandSpec:
    """Parse CLI strings like ``box:2/3^3``, ``centered-indicator:2/3,3/5``,
    ``centered-product``, ``simplex``, ``power:0.5``, ``linear``.

    ``a^k`` repeats a threshold k times.  Families without thresholds take
    their dimension from ``d``.
    """
    m = _SPEC_RE.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse integrand {text!r}")
    fam, args = m["fam"], m["args"]
    if fam in ("box", "centered-indicator"):
        if not args:
            raise ValueError(f"{fam} needs thresholds")
        alpha = []
        for tok in args.split(","):
            base, _, rep = tok.partition("^")
            alpha.extend([_parse_threshold(base)] * (int(rep) if rep else 1))
        if d is not None and len(alpha) == 1 and d > 1:
            alpha = alpha * d
        return IntegrandSpec(fam, len(alpha), tuple(alpha))
    if fam == "power":
        return power_product(d or 2, float(args) if args else 0.5)
    if fam == "centered-product":
        return centered_product(d or 2)
    if fam == "simplex":
        return simplex()
    if fam == "linear":
        return linear()
    raise ValueError(f"unknown integrand family {fam!r}")
