"""Unanchored Sobolev kernel, worst-case errors, and the Roth-type lower bound.

Kernel per coordinate:
    k(x, y) = 4/3 + (x^2 + y^2 - x - y - |x - y|) / 2
            = 1 + psi(x, y),  psi(x, y) = 1/3 + (x^2 + y^2) / 2 - max(x, y)
where psi(x, y) = int_0^1 (t - 1{t > x}) (t - 1{t > y}) dt.

The fooling-function integrals are done in closed form per cell, in exact
rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .sequences import DyadicRational, compositions

WCE_TOL = 1e-12


class GramError(np.linalg.LinAlgError):
    pass


class CertificateError(AssertionError):
    def __init__(self, step: str, detail: str):
        super().__init__(f"{step}: {detail}")
        self.step = step


def _frac(x) -> Fraction:
    if isinstance(x, DyadicRational):
        return x.to_fraction()
    return Fraction(x)


def as_array(points) -> np.ndarray:
    arr = np.array([[float(v) for v in p] for p in points], dtype=float)
    return arr.reshape(len(points), -1) if len(points) else np.zeros((0, 0))


# -- kernel ------------------------------------------------------------------


def kernel(x: Sequence, y: Sequence):
    """K(x, y); exact Fraction when both arguments are rational."""
    if len(x) != len(y):
        raise ValueError("dimension mismatch")
    if all(isinstance(v, (int, Fraction, DyadicRational)) for v in (*x, *y)):
        out = Fraction(1)
        for a, b in zip(x, y):
            a, b = _frac(a), _frac(b)
            out *= Fraction(4, 3) + (a * a + b * b - a - b - abs(a - b)) / 2
        return out
    out = 1.0
    for a, b in zip(x, y):
        a, b = float(a), float(b)
        out *= 4 / 3 + (a * a + b * b - a - b - abs(a - b)) / 2
    return out


def psi_matrix(X: np.ndarray, Y: np.ndarray, j: int) -> np.ndarray:
    x = X[:, j][:, None]
    y = Y[:, j][None, :]
    return 1 / 3 + (x * x + y * y) / 2 - np.maximum(x, y)


def gram(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    Y = X if Y is None else Y
    out = np.ones((X.shape[0], Y.shape[0]))
    for j in range(X.shape[1]):
        out *= 1 + psi_matrix(X, Y, j)
    return out


def mixed_derivative_gram(X: np.ndarray) -> np.ndarray:
    """int prod_j (y_j - 1{y_j > x_ij})(y_j - 1{y_j > x_i'j}) dy for all i, i'."""
    out = np.ones((X.shape[0], X.shape[0]))
    for j in range(X.shape[1]):
        out *= psi_matrix(X, X, j)
    return out


def wce(points, weights) -> float:
    """|| 1 - sum_i a_i K(x_i, .) || in the unanchored space."""
    a = np.asarray(weights, dtype=float)
    if len(a) == 0:
        return 1.0
    X = as_array(points)
    if X.shape[0] != a.shape[0]:
        raise ValueError("need one weight per point")
    sq = 1 - 2 * a.sum() + a @ gram(X) @ a
    if sq < -WCE_TOL:
        raise ArithmeticError(f"negative squared norm {sq:.3e}")
    return math.sqrt(max(sq, 0.0))


def equal_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def optimal_weights(points) -> tuple[np.ndarray, float]:
    """Weights of the projection of 1 onto span{K(x_i, .)} and its residual r_n."""
    X = as_array(points)
    G = gram(X)
    try:
        factor = scipy.linalg.cho_factor(G, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        raise GramError(f"Gram matrix not positive definite (cond ~ {np.linalg.cond(G):.3e})") from None
    rcond = 1 / np.linalg.cond(G)
    if rcond < 1e-15:
        raise GramError(f"Gram matrix ill conditioned (cond ~ {1 / rcond:.3e})")
    a = scipy.linalg.cho_solve(factor, np.ones(len(G)))
    # residual^2 = 1 - 2 sum a + a'Ga with Ga = 1
    rsq = 1 - a.sum()
    if rsq < -WCE_TOL:
        raise ArithmeticError(f"negative residual {rsq:.3e}")
    return a, math.sqrt(max(rsq, 0.0))


def norm_sq_monte_carlo(points, weights, draws: int = 10**6, seed: int = 0, chunk: int = 50_000):
    """Estimate ||1 - sum a_i K(x_i, .)||^2 from the inner-product definition.

    For g = 1 - sum a_i K(x_i, .), the u-th term of the inner product is
    int (sum_i a_i prod_{j in u} (y_j - 1{y_j > x_ij}))^2 dy_u, since each
    kernel factor integrates to 1 over a coordinate.  All terms are averaged
    over the same uniform draws.  Returns (estimate, standard error).
    """
    X = as_array(points)
    a = np.asarray(weights, dtype=float)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    subsets = [u for r in range(1, d + 1) for u in itertools.combinations(range(d), r)]
    total = total_sq = 0.0
    done = 0
    while done < draws:
        b = min(chunk, draws - done)
        Y = rng.random((b, d))
        # deriv[s, i, j] = y_sj - 1{y_sj > x_ij}
        deriv = Y[:, None, :] - (Y[:, None, :] > X[None, :, :])
        vals = np.zeros(b)
        for u in subsets:
            prod = np.prod(deriv[:, :, list(u)], axis=2)
            vals += (prod @ a) ** 2
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += b
    mean = total / draws
    var = total_sq / draws - mean**2
    return (1 - a.sum()) ** 2 + mean, math.sqrt(max(var, 0.0) / draws)


# -- fooling function ----------------------------------------------------------


def u_eval(k: Sequence[int], c: Sequence[int], y: Sequence) -> int:
    """U_{k,c}(y): 0 off the cell, else -1 to the number of left-half coordinates."""
    sign = 1
    for kj, cj, yj in zip(k, c, y):
        s = _frac(yj) * 2**kj - cj
        if not 0 <= s < 1:
            return 0
        if s < Fraction(1, 2):
            sign = -sign
    return sign


def u_product_integral(k1, c1, k2, c2) -> Fraction:
    """Exact int U_{k1,c1} U_{k2,c2}, coordinate by coordinate."""
    out = Fraction(1)
    for a, ca, b, cb in zip(k1, c1, k2, c2):
        out *= _signed_half_overlap(a, ca, b, cb)
        if out == 0:
            return out
    return out


def _signed_half_overlap(ka, ca, kb, cb) -> Fraction:
    """int over [0,1) of s_a(y) s_b(y), s = -1/+1 on left/right cell halves."""
    lvl = max(ka, kb) + 1
    total = Fraction(0)
    # both functions are constant on the 2^lvl dyadic pieces
    lo_a, lo_b = ca << (lvl - ka), cb << (lvl - kb)
    span_a, span_b = 1 << (lvl - ka), 1 << (lvl - kb)
    start, stop = max(lo_a, lo_b), min(lo_a + span_a, lo_b + span_b)
    for p in range(start, stop):
        sa = -1 if p - lo_a < span_a // 2 else 1
        sb = -1 if p - lo_b < span_b // 2 else 1
        total += sa * sb
    return Fraction(total, 1 << lvl)


@dataclass(frozen=True)
class FoolingFunction:
    """h = sum over |k| = m and empty cells c of U_{k,c}.

    ``empty[k]`` is a boolean array of shape (2^k_1, ..., 2^k_d), True where
    the cell holds no point.
    """

    d: int
    m: int
    n: int
    empty: dict = field(repr=False)

    @property
    def k_vectors(self) -> list[tuple[int, ...]]:
        return list(self.empty)

    def cells(self, k) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in c) for c in np.argwhere(self.empty[k])]

    def __call__(self, y) -> int:
        total = 0
        for k, mask in self.empty.items():
            c = tuple(int(_frac(yj) * 2**kj) for yj, kj in zip(y, k))
            if mask[c]:
                total += u_eval(k, c, y)
        return total


def fooling_level(n: int) -> int:
    """Smallest m with 2^m >= 2n, so that 2n <= 2^m < 4n."""
    if n < 1:
        raise ValueError("need at least one point")
    return (2 * n - 1).bit_length()


def _cell_indices(points, level: int) -> np.ndarray:
    """floor(x_ij 2^level) exactly, shape (n, d)."""
    out = np.empty((len(points), len(points[0])), dtype=np.int64)
    for i, p in enumerate(points):
        for j, v in enumerate(p):
            q = _frac(v)
            if not 0 <= q < 1:
                raise ValueError("points must lie in [0, 1)")
            out[i, j] = (q.numerator << level) // q.denominator
    return out


def build_fooling(points, d: int) -> FoolingFunction:
    n = len(points)
    m = fooling_level(n)
    fine = _cell_indices(points, m)
    empty = {}
    for k in compositions(m, d):
        occupied = np.zeros(tuple(1 << kj for kj in k), dtype=bool)
        idx = tuple(fine[:, j] >> (m - kj) for j, kj in enumerate(k))
        occupied[idx] = True
        empty[k] = ~occupied
    return FoolingFunction(d, m, n, empty)


def h_l2_norm_sq(h: FoolingFunction) -> Fraction:
    """int h^2 = sum_k |P_k| 2^-m, by orthogonality of the U functions."""
    return Fraction(sum(int(mask.sum()) for mask in h.empty.values()), 1 << h.m)


def h_grid_norm_sq(h: FoolingFunction) -> Fraction:
    """int h^2 by summing h at the centres of the 2^(m+1)-per-axis grid."""
    side = 1 << (h.m + 1)
    total = 0
    for cell in itertools.product(range(side), repeat=h.d):
        y = [Fraction(2 * c + 1, 2 * side) for c in cell]
        total += h(y) ** 2
    return Fraction(total, side**h.d)


def _dim_factor(k: int, x: Fraction, cell: int) -> Fraction:
    """int over cell of s(y) (y - 1{y > x}) dy, s = -1/+1 on left/right half."""
    w = Fraction(1, 1 << k)
    lo = cell * w
    base = w * w / 4
    if x < lo or x >= lo + w:
        return base
    if x < lo + w / 2:
        return base - (x - lo)
    return base - (lo + w - x)


@dataclass(frozen=True)
class InnerProducts:
    per_point: list  # exact int h(y) prod_j (y_j - 1{y_j > x_ij}) dy
    per_point_k: list  # same, split by k-vector: per_point_k[i][k]
    nominal_cell: Fraction  # 4^-(m+d), the value of a cell no coordinate of x_i touches
    weighted: Fraction | float


def h_inner_products(h: FoolingFunction, points, weights=None) -> InnerProducts:
    """Exact per-point integrals of h against the mixed-derivative representer.

    A cell's integral factorises over coordinates.  A coordinate contributes
    w^2/4 (w = 2^-k_j) unless x_ij lies in that coordinate's interval, where
    the indicator adds a correction; so sum over empty cells is grouped by
    the subset S of coordinates whose interval contains x_ij.
    """
    d, m = h.d, h.m
    pts = [[_frac(v) for v in p] for p in points]
    fine = _cell_indices(points, m)
    nominal = Fraction(1, 4 ** (m + d))
    per_point, per_point_k = [], []
    subsets = [S for r in range(d + 1) for S in itertools.combinations(range(d), r)]
    for i, x in enumerate(pts):
        tot = Fraction(0)
        by_k = {}
        for k, mask in h.empty.items():
            own = [int(fine[i, j] >> (m - kj)) for j, kj in enumerate(k)]
            base = [Fraction(1, 4 ** (kj + 1)) for kj in k]
            delta = [_dim_factor(kj, x[j], own[j]) - base[j] for j, kj in enumerate(k)]
            val = Fraction(0)
            for S in subsets:
                if any(delta[j] == 0 for j in S):
                    continue
                sl = tuple(own[j] if j in S else slice(None) for j in range(d))
                cnt = int(np.sum(mask[sl]))
                if cnt == 0:
                    continue
                term = Fraction(cnt)
                for j in range(d):
                    term *= delta[j] if j in S else base[j]
                val += term
            by_k[k] = val
            tot += val
        per_point.append(tot)
        per_point_k.append(by_k)
    if weights is None:
        weights = [Fraction(1, len(pts))] * len(pts)
    weighted = sum((Fraction(float(a)) if not isinstance(a, Fraction) else a) * p
                   for a, p in zip(weights, per_point))
    return InnerProducts(per_point, per_point_k, nominal, weighted)


def h_inner_product_grid(h: FoolingFunction, x: Sequence) -> Fraction:
    """Independent check of one per-point integral by exact piecewise integration.

    The grid of 2^(m+1) pieces per axis, further split at x_j, makes h
    constant and each factor y - 1{y > x_j} linear on every box, so the
    midpoint rule per axis is exact.
    """
    side = 1 << (h.m + 1)
    x = [_frac(v) for v in x]
    axes = []
    for xj in x:
        pieces = []
        for c in range(side):
            lo, hi = Fraction(c, side), Fraction(c + 1, side)
            cuts = [lo] + ([xj] if lo < xj < hi else []) + [hi]
            for a, b in zip(cuts, cuts[1:]):
                mid = (a + b) / 2
                pieces.append((c, (b - a) * (mid - (1 if mid > xj else 0))))
        axes.append(pieces)
    total = Fraction(0)
    cache = {}
    for combo in itertools.product(*axes):
        cell = tuple(c for c, _ in combo)
        if cell not in cache:
            cache[cell] = h([Fraction(2 * c + 1, 2 * side) for c in cell])
        hv = cache[cell]
        if hv:
            term = Fraction(hv)
            for _, integ in combo:
                term *= integ
            total += term
    return total


# -- certificate -----------------------------------------------------------------


def minmax_floor(lam: float) -> float:
    """min over a of max(|1 - a|, lam a) for lam > 0."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return lam / (lam + 1)


@dataclass(frozen=True)
class BoundCertificate:
    n: int
    d: int
    m: int
    weight_sum: float
    wce: float
    floor_sum: float  # |1 - sum a_i|
    mixed_norm: float  # L2 norm of the top-order derivative part
    h_norm_sq: Fraction
    h_norm_sq_bound: int  # binom(m + d - 1, d - 1)
    inner: list  # exact per-point integrals against h
    weighted_inner: Fraction
    cs_bound: float  # |weighted_inner| / sqrt(h_norm_sq)
    per_k_floor: Fraction  # n / 4^(m+d)
    per_k_floor_holds: bool
    lam: float  # binom * n / 4^(m+d) / sqrt(h_norm_sq)
    minmax: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def certificate(points, weights, strict: bool = True, tol: float = WCE_TOL) -> BoundCertificate:
    """Evaluate and check each inequality of the lower-bound chain.

    Checks, in order: wce >= |1 - sum a|; wce >= mixed-derivative norm;
    int h^2 <= binom(m+d-1, d-1); per (point, k) integral >= n/4^(m+d);
    mixed norm >= |sum a_i <h, g_i>| / ||h||; wce >= lam/(lam+1).
    With ``strict`` the first failing check raises CertificateError.
    """
    X = as_array(points)
    n, d = X.shape
    a = np.asarray(weights, dtype=float)
    e = wce(points, a)
    A = float(a.sum())
    Dsq = float(a @ mixed_derivative_gram(X) @ a)
    D = math.sqrt(max(Dsq, 0.0))
    h = build_fooling(points, d)
    H = h_l2_norm_sq(h)
    binom = math.comb(h.m + d - 1, d - 1)
    ip = h_inner_products(h, points, [Fraction(float(v)) for v in a])
    per_k_floor = Fraction(n, 4 ** (h.m + d))
    per_k_ok = all(v >= per_k_floor for row in ip.per_point_k for v in row.values())
    cs = abs(float(ip.weighted)) / math.sqrt(H) if H else 0.0
    lam = binom * float(per_k_floor) / math.sqrt(H) if H else math.inf
    mm = minmax_floor(lam) if math.isfinite(lam) else 1.0
    checks = {
        "weight_sum_floor": e >= abs(1 - A) - tol,
        "mixed_norm": e >= D - tol,
        "h_norm_bound": H <= binom,
        "per_point_floor": per_k_ok,
        "cauchy_schwarz": D >= cs - tol,
        "minmax_floor": e >= mm - tol,
    }
    cert = BoundCertificate(
        n=n, d=d, m=h.m, weight_sum=A, wce=e, floor_sum=abs(1 - A), mixed_norm=D,
        h_norm_sq=H, h_norm_sq_bound=binom, inner=ip.per_point, weighted_inner=ip.weighted,
        cs_bound=cs, per_k_floor=per_k_floor, per_k_floor_holds=per_k_ok, lam=lam,
        minmax=mm, checks=checks,
    )
    if strict:
        for step, ok in checks.items():
            if not ok:
                raise CertificateError(step, f"failed for n={n}, d={d}, m={h.m}")
    return cert


def rate_trace(points_for_n, d: int, ns: Sequence[int]) -> list[tuple[int, float, float]]:
    """(n, r_n, r_n n / log(n)^((d-1)/2)) for prefixes of one sequence."""
    out = []
    for n in ns:
        if n > 512:
            raise ValueError("rate trace limited to n <= 512")
        _, r = optimal_weights(points_for_n(n))
        scale = n / math.log(n) ** ((d - 1) / 2) if d > 1 else n
        out.append((n, r, r * scale))
    return out
