"""Change of variables from general planar data to the canonical frame.

Canonical means: a gradient (curl-free) problem in which e1 is an optimal
lamination direction, or, for rank-one curl-curl differences, a curl-curl
problem with a1 - a0 = lam e1 x e1.  A ``Reduction`` keeps the map back to
the original frame as a linear map on matrices, so energies of canonical
fields can be measured in the original norm without resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compatibility import EquicompatibleError, multiplier_p, optimal_directions, quantifiers
from .construction import BranchField, assemble_chan_conti, assemble_grad, symmetrize_field
from .operators import DiffOp, direction, project_compatible, sym
from .relaxation import ProblemData, optimal_fraction, wave_vector

PATHS = ("curl", "div", "bridge", "chan_conti")

# quarter turn used to turn divergence-free fields into curl-free ones
QUARTER = np.array([[0.0, -1.0], [1.0, 0.0]])

CHECK_TOL = 1e-10


class PureRegimeError(ValueError):
    """Constant fields are optimal; there is nothing to construct."""


def frame(xi) -> np.ndarray:
    """Rotation R with R e1 = xi."""
    x = direction(xi)
    if x.shape != (2,):
        raise NotImplementedError("constructions are planar")
    return np.array([[x[0], -x[1]], [x[1], x[0]]])


@dataclass(frozen=True)
class Reduction:
    path: str
    original: ProblemData
    lifted: ProblemData  # gradient problem in the original frame (curl-curl data on the Chan-Conti path)
    canonical: ProblemData
    xi_star: np.ndarray
    R: np.ndarray
    theta_tilde: float
    E0_density: float

    def strain_to_original(self, m: np.ndarray) -> np.ndarray:
        """Linear map taking canonical strains to the original frame.

        Works on stacks of matrices.  On the bridge path the result is still
        the gradient field of the lifted problem; symmetrizing it gives the
        curl-curl strain.
        """
        R = self.R
        if self.path in ("curl", "bridge"):
            return m @ R.T
        if self.path == "div":
            return m @ R.T @ QUARTER
        return R @ sym(m) @ R.T

    def point_to_canonical(self, x) -> np.ndarray:
        """y = R^T x; the canonical unit square is the rotated original domain."""
        return np.asarray(x, dtype=float) @ self.R

    def point_to_original(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) @ self.R.T

    def displacement_to_original(self, v) -> np.ndarray:
        """Potential in the original frame, evaluated at the mapped point."""
        v = np.asarray(v, dtype=float)
        if self.path == "chan_conti":
            return v @ self.R.T
        return v

    def conditions(self) -> dict:
        """Residuals of the four requirements on the canonical data."""
        lifted, can = self.lifted, self.canonical
        q = quantifiers(can.op, can.a)
        c1 = multiplier_p(can.op, can.a, [1.0, 0.0], q)
        theta_c, e0_c = optimal_fraction(can)
        if self.original.op.symmetric and self.path == "bridge":
            c3 = max(float(np.max(np.abs(sym(lifted.a0) - self.original.a0))),
                     float(np.max(np.abs(sym(lifted.a1) - self.original.a1))))
        else:
            c3 = 0.0
        return {
            "C1": c1,
            "C2": abs(theta_c - self.theta_tilde),
            "C3": c3,
            "C4": abs(e0_c - self.E0_density),
            "C2_interior": 0.0 < theta_c < 1.0,
        }

    def satisfied(self, tol: float = CHECK_TOL) -> bool:
        c = self.conditions()
        scale = max(1.0, self.E0_density, float(np.sum(self.original.a**2)))
        return bool(c["C2_interior"] and c["C1"] <= tol * scale and c["C2"] <= tol
                    and c["C3"] <= tol * scale and c["C4"] <= tol * scale)


def _pick_path(data: ProblemData, path: str | None) -> str:
    kind = data.op.kind
    if kind == "curl":
        allowed = ("curl",)
    elif kind == "div":
        allowed = ("div",)
    else:
        allowed = ("bridge", "chan_conti")
    if path is None:
        if kind != "curlcurl":
            return allowed[0]
        return "chan_conti" if quantifiers(data.op, data.a).vanishing_order == 2 else "bridge"
    if path not in allowed:
        raise ValueError(f"path {path!r} does not apply to {kind} data; expected one of {allowed}")
    return path


def reduce_to_canonical(data: ProblemData, xi_star=None, path: str | None = None) -> Reduction:
    if data.op.d != 2:
        raise NotImplementedError("constructions are planar")
    q = quantifiers(data.op, data.a)
    if q.equicompatible:
        raise EquicompatibleError("every direction is optimal; the energy does not scale with epsilon")
    theta, e0 = optimal_fraction(data, q)
    if not 0.0 < theta < 1.0:
        raise PureRegimeError(f"optimal volume fraction is {theta}; constant fields suffice")
    path = _pick_path(data, path)
    xi = direction(optimal_directions(data.op, data.a).witnesses[0] if xi_star is None else xi_star)
    if path != "div" and multiplier_p(data.op, data.a, xi, q) > 1e-8 * max(1.0, q.g):
        raise ValueError(f"direction {xi} is not optimal")
    R = frame(xi)
    curl = DiffOp("curl", 2)

    if path == "curl":
        lifted = data
    elif path == "div":
        lifted = ProblemData(curl, data.F @ QUARTER.T, data.a0 @ QUARTER.T, data.a1 @ QUARTER.T)
        if multiplier_p(curl, lifted.a, xi) > 1e-8 * max(1.0, q.g):
            raise ValueError(f"direction {xi} is not optimal")
    elif path == "bridge":
        if q.definiteness == "indefinite":
            pa = project_compatible(data.op, xi, data.a)
            b = wave_vector(data.op, xi, pa)
            bx = np.outer(b, xi)
            at = data.a_theta(theta)
            lifted = ProblemData(curl, data.F, at - theta * bx, at + (1 - theta) * bx)
        else:
            lifted = ProblemData(curl, data.F, data.a0, data.a1)
    else:
        if q.vanishing_order != 2:
            raise ValueError("the Chan-Conti path needs a rank-one well difference")
        c = ProblemData(data.op, R.T @ data.F @ R, R.T @ data.a0 @ R, R.T @ data.a1 @ R)
        return Reduction(path, data, data, c, xi, R, theta, e0)

    canonical = ProblemData(curl, lifted.F @ R, lifted.a0 @ R, lifted.a1 @ R)
    return Reduction(path, data, lifted, canonical, xi, R, theta, e0)


def grad_branching(data: ProblemData, xi_star=None, N: int = 4, tau: float = 0.4,
                   path: str | None = None) -> BranchField:
    """Gradient branching for curl, div or (via the bridge) curl-curl data.

    For curl-curl data this returns the gradient field of the lifted problem;
    pass it through :func:`symmetrize_field` to get the curl-curl field.
    """
    if data.op.kind == "curlcurl":
        path = "bridge" if path is None else path
    red = reduce_to_canonical(data, xi_star, path)
    if red.path == "chan_conti":
        raise ValueError("use cc_branching for the Chan-Conti path")
    c = red.canonical
    return assemble_grad(c.F, (c.a0, c.a1), red.theta_tilde, N, tau,
                         phi=red.strain_to_original, reduction=red)


def cc_branching(data: ProblemData, xi_star=None, N: int = 4, tau: float = 0.4) -> BranchField:
    red = reduce_to_canonical(data, xi_star, "chan_conti")
    c = red.canonical
    return assemble_chan_conti(c.F, (c.a0, c.a1), red.theta_tilde, N, tau,
                               phi=red.strain_to_original, reduction=red)


def build_field(data: ProblemData, N: int, tau: float = 0.4, xi_star=None,
                path: str | None = None) -> BranchField:
    """Branching field for any planar mixing data, measured in the original norm."""
    path = _pick_path(data, path)
    if path == "chan_conti":
        return cc_branching(data, xi_star, N, tau)
    fld = grad_branching(data, xi_star, N, tau, path)
    return symmetrize_field(fld) if data.op.symmetric else fld


def exponent_kind(data: ProblemData, path: str | None = None) -> str:
    """'4/5' for the Chan-Conti path, '2/3' otherwise."""
    return "4/5" if _pick_path(data, path) == "chan_conti" else "2/3"
