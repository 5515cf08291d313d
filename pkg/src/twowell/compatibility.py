"""Compatibility quantifiers, optimal lamination directions, vanishing order.

For a well difference a and an operator A:

    g(a) = sup_xi |P(xi)a|^2        h(a) = inf_xi |a - P(xi)a|^2 = |a|^2 - g(a)

The optimal directions S(a) are the maximizers of |P(xi)a|^2, and the
multiplier p(xi) = g(a) - |P(xi)a|^2 vanishes exactly on S(a).  The order
to which p vanishes there (in powers of dist^2) is the vanishing order L.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .operators import DiffOp, _project, as_matrix, as_op, compatible_part_sq, direction, is_symmetric

EIG_TOL = 1e-10
EQUI_TOL = 1e-10
RANK_TOL = 1e-10


class EquicompatibleError(ValueError):
    """Every direction is optimal; there is no vanishing order to speak of."""


@dataclass(frozen=True)
class LaminationSet:
    kind: str  # "subsphere", "four_points" or "full_sphere"
    witnesses: tuple
    basis: np.ndarray | None = None  # orthonormal columns spanning U for "subsphere"

    def span(self) -> np.ndarray:
        """Orthonormal columns of the linear span used as the set W."""
        if self.kind == "subsphere":
            return self.basis
        if self.kind == "full_sphere":
            return np.eye(len(self.witnesses[0]))
        return None

    def subspaces(self) -> list[np.ndarray]:
        """The lines/subspaces whose union contains the set."""
        if self.kind == "four_points":
            seen = []
            for w in self.witnesses:
                if not any(abs(abs(w @ s[:, 0]) - 1) < 1e-12 for s in seen):
                    seen.append(np.asarray(w, dtype=float).reshape(-1, 1))
            return seen
        return [self.span()]

    def distance(self, xi) -> float:
        xi = direction(xi)
        return float(_set_distance(self, xi, np))


@dataclass(frozen=True)
class CompatQuantifiers:
    h: float
    g: float
    equicompatible: bool
    vanishing_order: int | None
    definiteness: str | None = None  # curlcurl only
    eigenvalues: np.ndarray | None = field(default=None, repr=False)


def _frob2(a) -> float:
    return float(np.sum(np.asarray(a) ** 2))


def _check(op: DiffOp, a):
    a = as_matrix(a, op.d)
    if op.symmetric and not is_symmetric(a):
        raise ValueError("curlcurl acts on symmetric matrices")
    if _frob2(a) == 0.0:
        raise ValueError("the wells coincide (a = 0)")
    return a


def _need_2d(op: DiffOp):
    if op.symmetric and op.d != 2:
        raise NotImplementedError("closed forms for curlcurl are available in d = 2 only; use the sampling oracle")


def _eigenspace(vals, vecs, target, tol):
    cols = vecs[:, np.abs(vals - target) <= tol]
    return cols


def _curlcurl_split(a):
    lam, vec = np.linalg.eigh(a)
    scale = np.sqrt(_frob2(a))
    tol = EIG_TOL * scale
    if lam[0] >= -tol:
        kind = "psd"
    elif lam[-1] <= tol:
        kind = "nsd"
    else:
        kind = "indefinite"
    return lam, vec, kind, tol


def quantifiers(op, a) -> CompatQuantifiers:
    op = as_op(op)
    a = _check(op, a)
    n2 = _frob2(a)
    if op.kind in ("curl", "div"):
        ata = a.T @ a
        lam = np.linalg.eigvalsh(ata)
        dev = ata - np.trace(ata) / op.d * np.eye(op.d)
        equi = bool(np.linalg.norm(dev) <= EQUI_TOL * n2)
        if op.kind == "curl":
            g = float(lam[-1])
            h = n2 - g
        else:
            h = float(lam[0])
            g = n2 - h
        return CompatQuantifiers(max(h, 0.0), g, equi, None if equi else 1, eigenvalues=lam)
    _need_2d(op)
    lam, _, kind, tol = _curlcurl_split(a)
    equi = bool(np.linalg.norm(a - np.trace(a) / 2 * np.eye(2)) <= EQUI_TOL * np.sqrt(n2))
    if kind == "psd":
        g = float(lam[-1] ** 2)
    elif kind == "nsd":
        g = float(lam[0] ** 2)
    else:
        g = float(lam[0] ** 2 + lam[-1] ** 2)
    h = max(n2 - g, 0.0)
    if equi:
        order = None
    else:
        small, big = sorted(np.abs(lam))
        order = 2 if small <= RANK_TOL * big else 1
    return CompatQuantifiers(h, g, equi, order, definiteness=kind, eigenvalues=lam)


def optimal_directions(op, a) -> LaminationSet:
    op = as_op(op)
    a = _check(op, a)
    d = op.d
    q = quantifiers(op, a)
    if q.equicompatible:
        return LaminationSet("full_sphere", tuple(np.eye(d)), np.eye(d))
    if op.kind in ("curl", "div"):
        lam, vec = np.linalg.eigh(a.T @ a)
        target = lam[-1] if op.kind == "curl" else lam[0]
        u = _eigenspace(lam, vec, target, EIG_TOL * _frob2(a))
        return LaminationSet("subsphere", tuple(u.T.copy()), u)
    lam, vec, kind, tol = _curlcurl_split(a)
    if kind != "indefinite":
        target = lam[-1] if kind == "psd" else lam[0]
        u = _eigenspace(lam, vec, target, tol)
        return LaminationSet("subsphere", tuple(u.T.copy()), u)
    lm, lp = lam[0], lam[-1]
    rm = np.sqrt(-lm / (lp - lm))
    rp = np.sqrt(lp / (lp - lm))
    xm, xp = vec[:, 0], vec[:, -1]
    w1 = rm * xm + rp * xp
    w2 = rm * xm - rp * xp
    return LaminationSet("four_points", (w1, -w1, w2, -w2))


def multiplier_p(op, a, xi, q: CompatQuantifiers | None = None) -> float:
    """p(xi) = |a - P(xi)a|^2 - h(a) = g(a) - |P(xi)a|^2, clamped at 0."""
    op = as_op(op)
    a = _check(op, a)
    if q is None:
        q = quantifiers(op, a)
    val = q.g - compatible_part_sq(op, xi, a)
    if val < -1e-10 * max(1.0, q.g):
        raise ArithmeticError(f"multiplier came out negative ({val:.3e}); quantifiers inconsistent")
    return max(val, 0.0)


# ---------------------------------------------------------------- oracles

def sample_directions(d: int, n: int | None = None, seed: int = 0) -> np.ndarray:
    """Directions covering the sphere modulo xi -> -xi (P is even in xi)."""
    if d == 2:
        n = 4096 if n is None else n
        phi = np.pi * np.arange(n) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if d == 3:
        n = 16384 if n is None else n
        # Fibonacci lattice on the upper hemisphere
        k = np.arange(n) + 0.5
        z = k / n
        r = np.sqrt(1 - z**2)
        phi = np.pi * (1 + 5**0.5) * k
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    n = 16384 if n is None else n
    x = np.random.default_rng(seed).standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _projections(kind, xis, a):
    axi = xis @ a.T  # rows are a xi
    if kind == "curl":
        return np.einsum("ni,nj->nij", axi, xis)
    if kind == "div":
        return a[None] - np.einsum("ni,nj->nij", axi, xis)
    b = 2 * axi - np.sum(axi * xis, axis=1, keepdims=True) * xis
    m = np.einsum("ni,nj->nij", b, xis)
    return 0.5 * (m + np.swapaxes(m, 1, 2))


def _compat_sq_many(kind, xis, a):
    p = _projections(kind, xis, a)
    return np.sum(p * p, axis=(1, 2))


def quantifiers_oracle(op, a, n: int | None = None, polish: bool = True) -> dict:
    """Brute-force h, g and a maximizing direction by sampling the sphere."""
    op = as_op(op)
    a = _check(op, a)
    d = op.d
    xis = sample_directions(d, n)
    vals = _compat_sq_many(op.kind, xis, a)
    i = int(np.argmax(vals))
    best, xi = float(vals[i]), xis[i]
    if polish:
        f = lambda x: -float(_compat_sq_many(op.kind, x[None], a)[0])
        if d == 2:
            step = np.pi / len(xis)
            phi0 = np.arctan2(xi[1], xi[0])
            res = minimize_scalar(
                lambda t: f(np.array([np.cos(t), np.sin(t)])),
                bounds=(phi0 - step, phi0 + step),
                method="bounded",
                options={"xatol": 1e-12},
            )
            cand = np.array([np.cos(res.x), np.sin(res.x)])
        else:
            res = minimize(lambda x: f(x / np.linalg.norm(x)), xi, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            cand = res.x / np.linalg.norm(res.x)
        val = -f(cand)
        if val >= best:
            best, xi = val, cand
    n2 = _frob2(a)
    return {"g": best, "h": n2 - best, "witness": xi, "samples": vals}


def wave_cone_distance_sq(op, a, n: int | None = None) -> float:
    """Sampled squared distance from a to the union of the kernels V(xi)."""
    op = as_op(op)
    a = _check(op, a)
    xis = sample_directions(op.d, n)
    p = _projections(op.kind, xis, a)
    r = a[None] - p
    return float(np.min(np.sum(r * r, axis=(1, 2))))


# ---------------------------------------------------------- vanishing order

@dataclass(frozen=True)
class OrderFit:
    order: float  # slope / 2
    slope: float
    r_squared: float
    rho: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)


def _set_distance(lam_set: LaminationSet, xi, lib):
    if lam_set.kind == "full_sphere":
        return 0 * xi[0]
    if lam_set.kind == "four_points":
        return min(lib.sqrt(_dot(xi - w, xi - w)) for w in lam_set.witnesses)
    u = lam_set.basis
    coeff = [_dot(u[:, k], xi) for k in range(u.shape[1])]
    proj = sum(c * u[:, k] for k, c in enumerate(coeff))
    nrm = lib.sqrt(_dot(proj, proj))
    if nrm == 0:
        return lib.sqrt(2 * (1 + 0 * xi[0]))
    diff = xi - proj / nrm
    return lib.sqrt(_dot(diff, diff))


def _dot(x, y):
    return sum(x[i] * y[i] for i in range(len(x)))


def _normal_direction(lam_set: LaminationSet, xi0: np.ndarray) -> np.ndarray:
    d = xi0.shape[0]
    if lam_set.kind == "four_points":
        return np.array([-xi0[1], xi0[0]])
    u = lam_set.basis
    comp = np.eye(d) - u @ u.T
    w, v = np.linalg.eigh(comp)
    return v[:, -1]


def vanishing_order_fit(op, a, rho_min: float = 1e-4, rho_max: float = 1e-1,
                        points: int = 25, dps: int = 50) -> OrderFit:
    """Fit the decay exponent of p near an optimal direction.

    Directions are moved off a witness along a normal to the optimal set,
    and p is evaluated in extended precision because near the zero set it
    falls far below double-precision cancellation error.
    """
    op = as_op(op)
    a = _check(op, a)
    q = quantifiers(op, a)
    if q.equicompatible:
        raise EquicompatibleError("p vanishes identically for equicompatible states")
    lam_set = optimal_directions(op, a)
    xi0 = np.asarray(lam_set.witnesses[0], dtype=float)
    nu = _normal_direction(lam_set, xi0)

    with mpmath.workdps(dps):
        mpf = mpmath.mpf
        A = np.array([[mpf(float(x)) for x in row] for row in a], dtype=object)
        X0 = np.array([mpf(float(x)) for x in xi0], dtype=object)
        NU = np.array([mpf(float(x)) for x in nu], dtype=object)
        mp_set = LaminationSet(
            lam_set.kind,
            tuple(np.array([mpf(float(x)) for x in w], dtype=object) for w in lam_set.witnesses),
            None if lam_set.basis is None
            else np.array([[mpf(float(x)) for x in row] for row in lam_set.basis], dtype=object),
        )

        def compat_sq(xi):
            p = _project(op.kind, xi, A)
            return sum(x * x for x in p.reshape(-1))

        g_ref = compat_sq(X0)
        rhos = np.geomspace(rho_min, rho_max, points)
        logs_d, logs_p, pvals = [], [], []
        for r in rhos:
            xi = X0 + mpf(float(r)) * NU
            xi = xi / mpmath.sqrt(_dot(xi, xi))
            p = g_ref - compat_sq(xi)
            dist = _set_distance(mp_set, xi, mpmath)
            pvals.append(float(p))
            if p > 0 and dist > 0:
                logs_d.append(float(mpmath.log(dist)))
                logs_p.append(float(mpmath.log(p)))
    pvals = np.array(pvals)
    if len(logs_p) < 3 or np.all(pvals < 1e-14 * max(q.g, 1e-300)):
        raise EquicompatibleError("multiplier is numerically zero near the optimal set")
    x, y = np.array(logs_d), np.array(logs_p)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / ss) if ss > 0 else 1.0
    return OrderFit(order=slope / 2, slope=float(slope), r_squared=r2, rho=rhos, p=pvals)
