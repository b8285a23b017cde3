"""Figure experiments: CSV writers, manifests, plot scripts and the verify suite."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import errorlab as el
from . import integrands as itg
from . import netcount as nc
from . import rkhs
from .sequences import (
    MAX_PRECISION,
    default_direction_numbers,
    digital_net_numerators,
    is_tmd_net,
    sobol_generator_set,
    sobol_point,
)

EXPERIMENTS = ("fig1-vdc", "fig2-product", "fig3-indicator", "fig4-simplex", "fig5-bigm", "rkhs-rate")

NETCOUNT_HEADER = [
    "d", "m", "A", "count", "signed_scaled_error_exact",
    "signed_scaled_error_float", "bound_lo", "bound_hi",
]


class InvariantError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    out: Path
    seq: str | None = None
    d: int | None = None
    N: int | None = None
    m_range: tuple[int, int] | None = None
    alpha: str = "2/3"
    theta: float = 0.5
    weights: str = "optimal"
    n_list: tuple[int, ...] | None = None
    certificate: bool = False
    workers: int = 1
    plot_scripts: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        self.out = Path(self.out)
        if self.m_range is not None:
            lo, hi = self.m_range
            if not 1 <= lo <= hi <= MAX_PRECISION:
                raise ValueError(f"m range must satisfy 1 <= lo <= hi <= {MAX_PRECISION}")
        if self.N is not None and self.N < 1:
            raise ValueError("N must be >= 1")
        if self.weights not in ("equal", "optimal"):
            raise ValueError("weights must be 'equal' or 'optimal'")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def parse_range(text: str) -> tuple[int, int]:
    """'1..100' or '7' -> inclusive bounds."""
    lo, sep, hi = text.partition("..")
    return (int(lo), int(hi)) if sep else (int(lo), int(lo))


def parse_n_list(text: str) -> tuple[int, ...]:
    """'16,32,...,256' doubles (or steps, for '8,16,24,...,64') up to the last value."""
    toks = [t.strip() for t in text.split(",") if t.strip()]
    out: list[int] = []
    for pos, tok in enumerate(toks):
        if tok != "...":
            out.append(int(tok))
            continue
        if len(out) < 2 or pos + 1 >= len(toks):
            raise ValueError(f"cannot expand {text!r}")
        a, b, stop = out[-2], out[-1], int(toks[pos + 1])
        nxt = (lambda v: 2 * v) if b == 2 * a else (lambda v: v + (b - a))
        v = nxt(b)
        while v < stop:
            out.append(v)
            v = nxt(v)
    return tuple(out)


# -- writers ---------------------------------------------------------------------


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _trace_files(cfg: ExperimentConfig) -> list[tuple[str, el.SequenceSpec, itg.IntegrandSpec, str]]:
    """(file stem, sequence, integrand, record scaling) for the trace experiments."""
    exp = cfg.experiment
    third = Fraction(2, 3)
    if exp == "fig1-vdc":
        vdc = el.SequenceSpec("vdc")
        return [
            ("fig1_vdc_linear", vdc, itg.linear(), "n"),
            ("fig1_vdc_indicator", vdc, itg.box([third]), "n"),
        ]
    d = cfg.d or 2
    sob, hal = el.SequenceSpec("sobol", d), el.SequenceSpec("halton", d)
    if exp == "fig2-product":
        return [
            ("fig2_halton_product", hal, itg.centered_product(d), "n"),
            ("fig2_sobol_product", sob, itg.centered_product(d), "n"),
        ]
    if exp == "fig3-indicator":
        halton_alpha = [third, Fraction(3, 5)] + [third] * (d - 2)
        badly = [itg.sqrt2_minus_1()] * d
        return [
            ("fig3_sobol_indicator", sob, itg.centered_indicator([third] * d), "log"),
            ("fig3_halton_indicator", hal, itg.centered_indicator(halton_alpha), "log"),
            ("fig3_sobol_badly_approximable", sob, itg.centered_indicator(badly), "log"),
            ("fig3_halton_badly_approximable", hal, itg.centered_indicator(badly), "log"),
            ("fig3_sobol_power", sob, itg.power_product(d, cfg.theta), "log"),
            ("fig3_halton_power", hal, itg.power_product(d, cfg.theta), "log"),
        ]
    if exp == "fig4-simplex":
        if d != 2:
            raise ValueError("the simplex indicator is two dimensional")
        return [
            ("fig4_sobol_simplex", sob, itg.simplex(), "log"),
            ("fig4_halton_simplex", hal, itg.simplex(), "log"),
        ]
    raise AssertionError(exp)


DEFAULT_N = {"fig1-vdc": 1 << 14, "fig2-product": 1 << 16, "fig3-indicator": 1 << 16, "fig4-simplex": 1 << 16}


def _check_trace(stem: str, trace: el.ErrorTrace):
    if stem == "fig1_vdc_linear":
        N = len(trace)
        for n in sorted({1, 4, 5, N} | {el.n_L(L) for L in range(12) if el.n_L(L) <= N}):
            if trace.sums[n - 1] != el.vdc_prefix_sum(n):
                raise InvariantError(f"prefix sum mismatch at n={n}")
        rec = set(el.trace_records(trace))
        for L in range(12):
            if el.n_L(L) <= N and el.n_L(L) not in rec:
                raise InvariantError(f"n_L={el.n_L(L)} is not a record")


def run_traces(cfg: ExperimentConfig) -> list[Path]:
    N = cfg.N or DEFAULT_N[cfg.experiment]
    files = []
    for stem, seq, spec, scaling in _trace_files(cfg):
        trace = el.running_trace(seq, spec, N)
        _check_trace(stem, trace)
        path = cfg.out / f"{stem}.csv"
        _write(path, el.trace_csv_text(trace, scaling))
        files.append(path)
    return files


def netcount_row(d: int, m: int, alpha: Fraction, workers: int = 1, executor=None) -> list[str]:
    gens = sobol_generator_set(default_direction_numbers(), d, m)
    a, count, err = nc.signed_scaled_error_exact(gens, alpha, workers=workers, executor=executor)
    lo, hi = nc.truncation_bounds(d)
    if d == 1 and err.numerator != 0:
        raise InvariantError(f"d=1 error must vanish, got {err} at m={m}")
    if m <= 14 and d <= 3:
        nums = digital_net_numerators(gens, 1 << m)
        if nc.brute_force_count(nums, m, a) != count:
            raise InvariantError(f"count mismatch against enumeration at d={d}, m={m}")
    return [str(d), str(m), str(a.numerator), str(count), str(err), repr(float(err)), str(lo), str(hi)]


def run_netcount(d: int, m_range: tuple[int, int], alpha: Fraction, path: Path | None,
                 workers: int = 1, log: Callable[[str], None] | None = None) -> str:
    """Write (or resume) the per-m CSV.  Rows already in ``path`` are kept."""
    done: dict[int, list[str]] = {}
    if path is not None and path.exists():
        with path.open() as fh:
            rows = list(csv.reader(fh))
        if rows and rows[0] == NETCOUNT_HEADER:
            for r in rows[1:]:
                if len(r) == len(NETCOUNT_HEADER) and r[0] == str(d):
                    m = int(r[1])
                    # a row for a different alpha is stale
                    if r[2] == str(nc.truncate_alpha(m, alpha).numerator):
                        done[m] = r
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(NETCOUNT_HEADER)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = path.open("w")
        fh.write(buf.getvalue())
    lo, hi = m_range
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for m in range(lo, hi + 1):
            if m in done:
                row = done[m]
            else:
                t0 = time.perf_counter()
                row = netcount_row(d, m, alpha, workers, pool)
                if log:
                    log(f"d={d} m={m} error={float(Fraction(*_parse_pow2(row[4]))):+.6f} ({time.perf_counter() - t0:.2f}s)")
            line = io.StringIO()
            csv.writer(line, lineterminator="\n").writerow(row)
            buf.write(line.getvalue())
            if path is not None:
                fh.write(line.getvalue())
                fh.flush()
    finally:
        if pool is not None:
            pool.shutdown()
        if path is not None:
            fh.close()
    return buf.getvalue()


def _parse_pow2(text: str) -> tuple[int, int]:
    num, _, exp = text.partition("/2^")
    return int(num), 1 << int(exp)


def _points(kind: str, d: int, n: int, seed: int = 0):
    if kind == "random":
        rng = np.random.default_rng(seed + 1000 * d + n)
        return [tuple(r) for r in rng.random((n, d))]
    if kind == "sobol" and d == 1:
        kind = "vdc"
    return list(el.iter_points(el.SequenceSpec(kind, d), n))


RKHS_HEADER = ["n", "d", "weights", "r_n", "r_n_normalized", "wce", "weight_sum"]
CERT_HEADER = ["m", "h_norm_sq", "h_norm_bound", "weighted_inner", "cs_bound",
               "mixed_norm", "lambda", "minmax_floor", "per_point_floor"]


def run_rkhs(kind: str, d: int, ns, weights: str, with_certificate: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RKHS_HEADER + (CERT_HEADER if with_certificate else []))
    for n in ns:
        pts = _points(kind, d, n)
        a_opt, r = rkhs.optimal_weights(pts)
        a = a_opt if weights == "optimal" else rkhs.equal_weights(n)
        e = rkhs.wce(pts, a)
        norm = n / math.log(n) ** ((d - 1) / 2) if d > 1 else n
        row = [n, d, weights, repr(r), repr(r * norm), repr(e), repr(float(a.sum()))]
        if with_certificate:
            c = rkhs.certificate(pts, a, strict=False)
            failed = [k for k, ok in c.checks.items() if not ok and k != "per_point_floor"]
            if failed:
                raise InvariantError(f"certificate step {failed[0]} failed at n={n}, d={d}")
            row += [c.m, str(c.h_norm_sq), c.h_norm_sq_bound, repr(float(c.weighted_inner)),
                    repr(c.cs_bound), repr(c.mixed_norm), repr(c.lam), repr(c.minmax),
                    int(c.per_k_floor_holds)]
        w.writerow(row)
    return buf.getvalue()


# -- plot scripts ----------------------------------------------------------------


_PLOT_TRACE = '''"""Render {stem}.csv (generated by qmclab)."""
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
df = pd.read_csv(here / "{stem}.csv")
col = "{column}"
fig, ax = plt.subplots(figsize=(8, 3))
ax.plot(df["n"], df[col], lw=0.4)
rec = df[df["is_record"] == 1]
ax.plot(rec["n"], rec[col], "o", mfc="none", ms=3)
ax.set_xlabel("n")
ax.set_ylabel(col)
fig.tight_layout()
fig.savefig(here / "{stem}.png", dpi=150)
'''

_PLOT_BIGM = '''"""Render {stem}.csv (generated by qmclab)."""
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
df = pd.read_csv(here / "{stem}.csv")
fig, ax = plt.subplots(figsize=(4, 3))
ax.plot(df["m"], df["signed_scaled_error_float"], ".-", lw=0.6)
ax.axhline(0, color="grey", lw=0.5)
ax.set_xlabel("m  (n = 2^m)")
ax.set_ylabel("n(mu_hat - mu)")
fig.tight_layout()
fig.savefig(here / "{stem}.png", dpi=150)
'''


def _plot_script(path: Path, template: str, **kw):
    _write(path.with_name(f"plot_{path.stem}.py"), template.format(stem=path.stem, **kw))


# -- run -------------------------------------------------------------------------


def _versions() -> dict:
    import scipy

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "qmclab": __version__}


def run(cfg: ExperimentConfig, log: Callable[[str], None] | None = None) -> list[Path]:
    t0 = time.perf_counter()
    cfg.out.mkdir(parents=True, exist_ok=True)
    exp = cfg.experiment
    if exp in DEFAULT_N:
        files = run_traces(cfg)
        if cfg.plot_scripts:
            for p in files:
                col = "scaled_error" if exp in ("fig1-vdc", "fig2-product") else "log_scaled_error"
                _plot_script(p, _PLOT_TRACE, column=col)
    elif exp == "fig5-bigm":
        d = cfg.d or 2
        m_range = cfg.m_range or ((1, 100) if d <= 3 else (1, 50))
        alpha = itg._parse_threshold(cfg.alpha)
        path = cfg.out / f"fig5_bigm_d{d}.csv"
        run_netcount(d, m_range, alpha, path, cfg.workers, log)
        files = [path]
        if cfg.plot_scripts:
            _plot_script(path, _PLOT_BIGM)
    else:
        d = cfg.d or 2
        ns = cfg.n_list or (16, 32, 64, 128, 256)
        path = cfg.out / f"rkhs_rate_{cfg.seq or 'sobol'}_d{d}_{cfg.weights}.csv"
        _write(path, run_rkhs(cfg.seq or "sobol", d, ns, cfg.weights, cfg.certificate))
        files = [path]
    manifest = {
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in asdict(cfg).items()},
        "files": [p.name for p in files],
        "versions": _versions(),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    # one manifest per output file set, so runs at several d can share a directory
    stem = exp if exp in DEFAULT_N else files[0].stem
    _write(cfg.out / f"manifest_{stem}.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return files


# -- verify ----------------------------------------------------------------------


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""
    known_defect: bool = False


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok or c.known_defect for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c.ok else ("KNOWN" if c.known_defect else "FAIL")
            out.append(f"[{tag}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        return out


def _guard(report: VerifyReport, name: str, fn: Callable[[], tuple[bool, str]], known_defect=False):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    report.checks.append(Check(name, ok, detail, known_defect and not ok))


def verify(d_max: int = 3, m_max: int = 10, prefix_n: int = 1 << 12) -> VerifyReport:
    report = VerifyReport()

    def counting():
        for d in range(1, d_max + 1):
            for m in range(1, m_max + 1):
                gens = sobol_generator_set(default_direction_numbers(), d, m)
                nums = digital_net_numerators(gens, 1 << m)
                for alpha in (Fraction(2, 3), Fraction(3, 5), Fraction(1, 2)):
                    a = nc.truncate_alpha(m, alpha)
                    got, want = nc.count_in_box(gens, a), nc.brute_force_count(nums, m, a)
                    if got != want:
                        return False, f"d={d} m={m} alpha={alpha}: {got} != {want}"
        return True, f"d<={d_max}, m<={m_max}"

    def prefix():
        acc = Fraction(0)
        for n in range(1, prefix_n + 1):
            acc += el.radical_inverse(n - 1, 2)
            if el.vdc_prefix_sum(n) != acc:
                return False, f"n={n}"
        return True, f"n<={prefix_n}"

    def nets():
        for m in range(1, min(m_max, 10) + 1):
            gens = sobol_generator_set(default_direction_numbers(), 2, m)
            pts = [sobol_point(i, gens) for i in range(1 << m)]
            if not is_tmd_net(pts, 0, m, 2):
                return False, f"d=2 first 2^{m} Sobol' points are not a (0,{m},2)-net"
            # the same certificate from GF(2) counts
            for kk in range(m + 1):
                for c1 in range(1 << kk):
                    for c2 in range(1 << (m - kk)):
                        s = nc.assemble_system(gens, (kk, m - kk), (c1, c2))
                        if nc.solve_count(s, m) != 1:
                            return False, f"solve_count disagrees at m={m}, k=({kk},{m - kk})"
        return True, "d=2, t=0"

    def chain():
        for kind in ("sobol", "halton", "random"):
            for d in (1, 2):
                for n in (8, 16, 32):
                    pts = _points(kind, d, n)
                    for a in (rkhs.equal_weights(n), rkhs.optimal_weights(pts)[0]):
                        c = rkhs.certificate(pts, a, strict=False)
                        bad = [k for k, ok in c.checks.items() if not ok and k != "per_point_floor"]
                        if bad:
                            return False, f"{kind} d={d} n={n}: {bad[0]}"
        return True, "sobol/halton/random, d<=2, n<=32"

    def per_point_floor():
        for d in (1, 2):
            pts = _points("sobol", d, 16)
            c = rkhs.certificate(pts, rkhs.equal_weights(16), strict=False)
            if not c.per_k_floor_holds:
                return False, f"d={d}: min per-point integral {float(min(c.inner)):.3e} < n/4^(m+d)"
        return True, ""

    _guard(report, "GF(2) counting vs enumeration", counting)
    _guard(report, "van der Corput prefix sum", prefix)
    _guard(report, "net certificates", nets)
    _guard(report, "lower-bound chain", chain)
    _guard(report, "per-cell floor n/4^(m+d)", per_point_floor, known_defect=True)
    return report


def print_report(report: VerifyReport, stream=None):
    for line in report.lines():
        print(line, file=stream or sys.stdout)
