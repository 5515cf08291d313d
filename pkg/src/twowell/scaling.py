"""Epsilon sweeps, exponent fits and the closed-form-versus-oracle harness."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, field

import numpy as np
from scipy.stats import linregress

from .compatibility import (
    EquicompatibleError,
    multiplier_p,
    quantifiers,
    quantifiers_oracle,
    sample_directions,
)
from .construction import CellSpec, choose_N, unit_cell
from .energy import cell_grid_energy
from .operators import project_compatible, project_compatible_oracle
from .reduction import build_field, exponent_kind
from .relaxation import ProblemData, optimal_fraction, optimal_fraction_grid

CSV_HEADER = ("epsilon", "N", "E_total", "E_elastic", "E_surface", "E0", "corrected", "flags")
FIT_MIN_N = 4
WINDOW_SLACK = 1e-9


def thread_count(default: int = 1) -> int:
    raw = os.environ.get("TWOWELL_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def predicted_exponent(data: ProblemData) -> str:
    q = quantifiers(data.op, data.a)
    theta, _ = optimal_fraction(data, q)
    if theta in (0.0, 1.0):
        return "trivial"
    if q.equicompatible:
        return "open"
    return exponent_kind(data)


# ------------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepRecord:
    epsilon: float
    N: int
    E_total: float
    E_elastic: float
    E_surface: float
    E0: float
    corrected: float
    flags: str = ""


def sweep_point(data: ProblemData, eps: float, tau: float = 0.4, path: str | None = None) -> SweepRecord:
    q = quantifiers(data.op, data.a)
    theta, e0 = optimal_fraction(data, q)
    if theta in (0.0, 1.0):
        # the constant field in the preferred well is optimal: no interfaces
        return SweepRecord(eps, 0, e0, e0, 0.0, e0, 0.0, "pure")
    if q.equicompatible:
        raise EquicompatibleError("equicompatible wells: no construction with a known exponent")
    N = choose_N(eps, exponent_kind(data, path))
    led = build_field(data, N, tau, path=path).ledger
    flags = "" if N >= FIT_MIN_N else "coarse"
    # corrected is assembled from the non-excess parts to avoid cancelling E_total - E0
    return SweepRecord(eps, N, led.total(eps), led.elastic, led.surface, e0, led.corrected(eps), flags)


def eps_grid(start: float, end: float, points: int) -> np.ndarray:
    if not (0 < start < 1 and 0 < end < 1):
        raise ValueError("epsilon values must lie in (0, 1)")
    if points < 2:
        raise ValueError("need at least two sweep points")
    return np.geomspace(start, end, points)


def sweep(data: ProblemData, eps_values, tau: float = 0.4, path: str | None = None,
          threads: int | None = None) -> list[SweepRecord]:
    eps_values = [float(e) for e in eps_values]
    threads = thread_count() if threads is None else threads
    if threads <= 1:
        return [sweep_point(data, e, tau, path) for e in eps_values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda e: sweep_point(data, e, tau, path), eps_values))


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_fmt(x) for x in astuple(r)])
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def read_csv(path) -> list[SweepRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {tuple(rows[0].keys())}")
    out = []
    for r in rows:
        out.append(SweepRecord(float(r["epsilon"]), int(r["N"]), float(r["E_total"]), float(r["E_elastic"]),
                               float(r["E_surface"]), float(r["E0"]), float(r["corrected"]), r["flags"]))
    return out


# --------------------------------------------------------------------- fits

@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    stderr: float
    window: tuple
    count: int


def _widen(window) -> tuple[float, float]:
    # geometric grids miss their nominal endpoints by a few ulps
    return window[0] * (1 - WINDOW_SLACK), window[1] * (1 + WINDOW_SLACK)


def fit_loglog(eps, values, window: tuple | None = None) -> FitResult:
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    m = np.ones(eps.shape, dtype=bool)
    if window is not None:
        lo, hi = _widen(window)
        m &= (eps >= lo) & (eps <= hi)
    m &= values > 0
    if np.count_nonzero(m) < 2:
        raise ValueError("fit window holds fewer than two positive points")
    x, y = np.log(eps[m]), np.log(values[m])
    if np.ptp(x) == 0:
        raise ValueError("fit window has a single epsilon")
    res = linregress(x, y)
    r2 = float(min(max(res.rvalue**2, 0.0), 1.0))
    return FitResult(float(res.slope), float(res.intercept), r2, float(res.stderr),
                     (float(eps[m].min()), float(eps[m].max())), int(np.count_nonzero(m)))


def fit_records(records, window: tuple | None = None, min_points: int = 5) -> FitResult:
    """Fit log(corrected) against log(epsilon) over the records with N >= 4."""
    recs = [r for r in records if r.N >= FIT_MIN_N and "pure" not in r.flags]
    if window is not None:
        lo, hi = _widen(window)
        recs = [r for r in recs if lo <= r.epsilon <= hi]
    if len(recs) < min_points:
        raise ValueError(f"fit window holds {len(recs)} records, need {min_points}")
    return fit_loglog([r.epsilon for r in recs], [r.corrected for r in recs])


# ------------------------------------------------------------------ oracles

def random_problem(op: str, rng: np.random.Generator, mixing: bool = False, tries: int = 1000) -> ProblemData:
    """Standard-normal wells and load; symmetrized for curl-curl."""
    for _ in range(tries):
        m = rng.standard_normal((3, 2, 2))
        if op == "curlcurl":
            m = 0.5 * (m + np.swapaxes(m, 1, 2))
        data = ProblemData.make(op, m[0], m[1], m[2])
        if not mixing:
            return data
        theta, _ = optimal_fraction(data)
        if 0.0 < theta < 1.0:
            return data
    raise RuntimeError("could not draw a mixing instance")


@dataclass
class OracleCheck:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


@dataclass
class OracleReport:
    checks: list = field(default_factory=list)

    def add(self, name, err, tol):
        for c in self.checks:
            if c.name == name:
                c.max_error = max(c.max_error, float(err))
                return
        self.checks.append(OracleCheck(name, float(err), tol))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {c.name}: max error {c.max_error:.3e} (tol {c.tolerance:.0e})"
                for c in self.checks]

    def as_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [{"name": c.name, "max_error": c.max_error, "tolerance": c.tolerance,
                            "passed": c.passed} for c in self.checks]}


QUANT_TOL = 1e-6
THETA_TOL = 1e-6
PROJ_TOL = 1e-10
EQUI_P_TOL = 1e-10
CELL_TOL = 1e-2


def check_instance(data: ProblemData, report: OracleReport, rng: np.random.Generator,
                   h_offset: float = 0.0) -> None:
    """Compare every closed form for one instance against its brute-force oracle."""
    op, a = data.op, data.a
    name = op.kind
    q = quantifiers(op, a)
    n2 = float(np.sum(a * a))
    if q.equicompatible:
        xis = sample_directions(op.d)
        worst = max(multiplier_p(op, a, x, q) for x in xis[:: max(1, len(xis) // 512)])
        report.add(f"{name}: p vanishes (equicompatible)", worst / max(n2, 1.0), EQUI_P_TOL)
        return
    h = q.h + h_offset
    g = n2 - h
    orc = quantifiers_oracle(op, a)
    report.add(f"{name}: h vs sphere sampling", abs(h - orc["h"]) / n2, QUANT_TOL)
    report.add(f"{name}: g vs sphere sampling", abs(g - orc["g"]) / n2, QUANT_TOL)
    theta, e0 = optimal_fraction(data, q) if h_offset == 0 else _fraction_with(data, h, g)
    t_grid, e_grid = optimal_fraction_grid(data, 10**6, q.h)
    report.add(f"{name}: theta vs grid search", abs(theta - t_grid), THETA_TOL)
    report.add(f"{name}: E0 vs grid search", abs(e0 - e_grid) / max(abs(e_grid), 1e-300), QUANT_TOL)
    xi = rng.standard_normal(op.d)
    p = project_compatible(op, xi, a)
    report.add(f"{name}: projection vs nullspace", float(np.max(np.abs(p - project_compatible_oracle(op, xi, a))))
               / math.sqrt(n2), PROJ_TOL)


def _fraction_with(data, h, g):
    lin = 2 * float(np.sum((data.F - data.a0) * data.a)) - h
    t = min(max(lin / (2 * g), 0.0), 1.0)
    r = data.F - data.a_theta(t)
    return t, float(np.sum(r * r)) + t * (1 - t) * h


def cell_quadrature_check(report: OracleReport, n: int = 2048) -> None:
    """Unit gradient cell (l = h = 1, theta = 1/2) against its closed-form remainder 1/16."""
    F = np.zeros((2, 2))
    a = np.outer([1.0, 0.0], [1.0, 0.0])
    cell, led = unit_cell(CellSpec(1.0, 1.0, 0.5, np.array([1.0, 0.0])), F, (np.zeros((2, 2)), a))
    e = cell_grid_energy(cell, F, (F - 0.5 * a, F + 0.5 * a), n)
    report.add("grid quadrature of the unit gradient cell", abs(e - led.compat) / led.compat, CELL_TOL)


def run_oracles(seed: int = 42, cases: int = 200, ops=("curl", "div", "curlcurl"),
                data: ProblemData | None = None, h_offset: float = 0.0, grid_n: int | None = None) -> OracleReport:
    rng = np.random.default_rng(seed)
    report = OracleReport()
    if data is not None:
        check_instance(data, report, rng, h_offset)
    else:
        for op in ops:
            for _ in range(cases):
                check_instance(random_problem(op, rng), report, rng, h_offset)
    if grid_n:
        cell_quadrature_check(report, grid_n)
    return report
