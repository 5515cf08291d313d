"""Excess energy, optimal volume fraction and compatible approximations.

At a fixed volume fraction theta the relaxed two-well energy density is

    |F - a_theta|^2 + theta (1 - theta) h(a),   a_theta = (1 - theta) a0 + theta a1,

a quadratic in theta with leading coefficient g(a) > 0.  Its minimizer over
[0, 1] is the optimal volume fraction and its minimum the excess energy E0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compatibility import CompatQuantifiers, LaminationSet, multiplier_p, optimal_directions, quantifiers
from .operators import DiffOp, as_matrix, as_op, direction, is_symmetric, project_compatible

SNAP_TOL = 1e-12


class DegenerateDataError(ValueError):
    """The two wells coincide."""


@dataclass(frozen=True)
class ProblemData:
    op: DiffOp
    F: np.ndarray
    a0: np.ndarray
    a1: np.ndarray

    def __post_init__(self):
        op = as_op(self.op)
        object.__setattr__(self, "op", op)
        for name in ("F", "a0", "a1"):
            m = as_matrix(getattr(self, name), op.d).copy()
            if op.symmetric:
                if not is_symmetric(m, 1e-10):
                    raise ValueError(f"{name} must be symmetric for curlcurl")
                m = 0.5 * (m + m.T)
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        scale = max(np.linalg.norm(self.a0), np.linalg.norm(self.a1), 1.0)
        if np.linalg.norm(self.a1 - self.a0) <= 1e-12 * scale:
            raise DegenerateDataError("wells must be distinct")

    @classmethod
    def make(cls, op, F, a0, a1, d: int | None = None) -> "ProblemData":
        F = np.asarray(F, dtype=float)
        if isinstance(op, str):
            op = DiffOp(op.lower(), F.shape[0] if d is None else d)
        return cls(op, F, np.asarray(a0, dtype=float), np.asarray(a1, dtype=float))

    @property
    def a(self) -> np.ndarray:
        return self.a1 - self.a0

    def a_theta(self, theta: float) -> np.ndarray:
        return (1 - theta) * self.a0 + theta * self.a1


@dataclass(frozen=True)
class TildeWells:
    a0: np.ndarray
    a1: np.ndarray
    xi: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class RelaxReport:
    theta_tilde: float
    E0_density: float
    regime: str  # "pure0", "mixing", "pure1"
    h: float
    g: float
    R: float  # half-margin of the pure-phase slab, h / (2|a|^2)
    theta_star: float  # projection coefficient <F - a0, a> / |a|^2
    quantifiers: CompatQuantifiers
    directions: LaminationSet
    tilde_wells: TildeWells | None


def _inner(x, y) -> float:
    return float(np.sum(x * y))


def envelope_at_fraction(data: ProblemData, theta: float, h: float | None = None) -> float:
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if h is None:
        h = quantifiers(data.op, data.a).h
    r = data.F - data.a_theta(theta)
    return _inner(r, r) + theta * (1 - theta) * h


def optimal_fraction(data: ProblemData, q: CompatQuantifiers | None = None) -> tuple[float, float]:
    """Closed-form minimizer of the envelope over [0, 1] and the minimum."""
    q = quantifiers(data.op, data.a) if q is None else q
    if q.g <= 0:
        raise ArithmeticError("leading coefficient g(a) must be positive")
    lin = 2 * _inner(data.F - data.a0, data.a) - q.h
    theta = lin / (2 * q.g)
    if theta <= SNAP_TOL:
        theta = 0.0
    elif theta >= 1 - SNAP_TOL:
        theta = 1.0
    return theta, envelope_at_fraction(data, theta, q.h)


def optimal_fraction_grid(data: ProblemData, n: int = 10**6, h: float | None = None) -> tuple[float, float]:
    """Grid-search oracle for the optimal fraction."""
    h = quantifiers(data.op, data.a).h if h is None else h
    theta = _grid(n)
    r0 = data.F - data.a0
    a = data.a
    c0 = _inner(r0, r0)
    c1 = h - 2 * _inner(r0, a)
    c2 = _inner(a, a) - h
    # envelope minus its constant term, in Horner form
    vals = theta * c2
    vals += c1
    vals *= theta
    i = int(np.argmin(vals))
    t = float(theta[i])
    return t, c0 + t * (c1 + t * c2)


_GRIDS: dict = {}


def _grid(n: int) -> np.ndarray:
    g = _GRIDS.get(n)
    if g is None:
        g = np.linspace(0.0, 1.0, n)
        g.setflags(write=False)
        _GRIDS.clear()
        _GRIDS[n] = g
    return g


def regime_of(theta: float) -> str:
    if theta == 0.0:
        return "pure0"
    if theta == 1.0:
        return "pure1"
    return "mixing"


def wave_vector(op, xi, pa: np.ndarray) -> np.ndarray:
    """b with P(xi)a = b x xi (curl, div) or b (.) xi (curlcurl)."""
    op = as_op(op)
    xi = direction(xi)
    if op.kind == "curlcurl":
        # P(xi)a = G(a xi) (.) xi with G(v) = 2v - (xi, v) xi; recover from pa xi
        v = pa @ xi  # = (b + (b, xi) xi) / 2
        return 2 * v - (v @ xi) * xi
    return pa @ xi


def compatible_approximation(data: ProblemData, xi_star, theta: float | None = None,
                             q: CompatQuantifiers | None = None, tol: float = 1e-8) -> TildeWells:
    """Wells F - theta P(xi*)a and F + (1 - theta) P(xi*)a, with b."""
    q = quantifiers(data.op, data.a) if q is None else q
    xi = direction(xi_star)
    p = multiplier_p(data.op, data.a, xi, q)
    if p > tol * max(1.0, q.g):
        raise ValueError(f"direction {xi} is not optimal: p = {p:.3e}")
    if theta is None:
        theta, _ = optimal_fraction(data, q)
    pa = project_compatible(data.op, xi, data.a)
    b = wave_vector(data.op, xi, pa)
    return TildeWells(data.F - theta * pa, data.F + (1 - theta) * pa, xi, b)


def relax(data: ProblemData, xi_star=None) -> RelaxReport:
    q = quantifiers(data.op, data.a)
    dirs = optimal_directions(data.op, data.a)
    theta, e0 = optimal_fraction(data, q)
    n2 = _inner(data.a, data.a)
    xi = dirs.witnesses[0] if xi_star is None else xi_star
    tw = compatible_approximation(data, xi, theta, q)
    return RelaxReport(
        theta_tilde=theta,
        E0_density=e0,
        regime=regime_of(theta),
        h=q.h,
        g=q.g,
        R=q.h / (2 * n2),
        theta_star=_inner(data.F - data.a0, data.a) / n2,
        quantifiers=q,
        directions=dirs,
        tilde_wells=tw,
    )
