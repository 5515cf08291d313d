"""Explicit branching microstructures on the unit square.

Everything here lives in a canonical frame: a gradient problem whose first
coordinate direction is an optimal lamination direction, or a curl-curl
problem whose well difference is lam * e1 x e1.  The reductions in
:mod:`twowell.reduction` map general data to this frame and back.

Each cell type knows its displacement, its phase, and an exact energy
ledger.  Inside a cell the mismatch u - chi is written as sum_k f_k(x) M_k
with scalar profiles f_k and constant matrices M_k, so for any linear map
phi on matrices

    int |phi(u - chi)|^2 = sum_kl G_kl <phi M_k, phi M_l>,   G_kl = int f_k f_l.

The profiles split into "D" terms (u minus the compatible-approximation
wells) and "T" terms (the approximation wells minus the true wells).  The
T-T block is the excess energy, D-D the compatible elastic remainder, and
D-T the cross term that the constructions are designed to cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import quad

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])

GAUSS_ORDER = 32


class AspectError(ValueError):
    pass


# ----------------------------------------------------------------- profiles

def sawtooth(theta: float, r: float, t):
    """2r-periodic zero-mean sawtooth with slope 1 - theta on |t| < theta r."""
    if r <= 0:
        raise ValueError("half-period must be positive")
    u = np.mod(np.asarray(t, dtype=float) / r + 1.0, 2.0) - 1.0
    out = np.where(u < -theta, -theta * (1 + u), np.where(u < theta, (1 - theta) * u, -theta * (u - 1)))
    return r * out


def _sawtooth_slope(theta, s, l):
    return np.where(np.abs(s) < theta * l, 1 - theta, -theta)


def cutoff(t):
    """1 on [0, 1/2], linear down to 0 on [1/2, 3/4], 0 beyond."""
    t = np.asarray(t, dtype=float)
    return np.clip(3 - 4 * t, 0.0, 1.0)


def _cutoff_slope(t):
    t = np.asarray(t, dtype=float)
    return np.where((t > 0.5) & (t < 0.75), -4.0, 0.0)


def smoothstep(t):
    t = np.asarray(t, dtype=float)
    return 3 * t**2 - 2 * t**3


def _smoothstep_d1(t):
    return 6 * t - 6 * t**2


def _smoothstep_d2(t):
    return 6 - 12 * t


# --------------------------------------------------------------------- cells

@dataclass(frozen=True)
class CellTerms:
    mats: tuple  # constant matrices M_k
    kinds: tuple  # "D" or "T" per matrix
    gram: np.ndarray  # G_kl = int f_k f_l over the cell
    length: float  # interface length inside the cell

    def parts(self, phi: Callable[[np.ndarray], np.ndarray]) -> dict:
        pm = [phi(m) for m in self.mats]
        hmat = np.array([[float(np.sum(x * y)) for y in pm] for x in pm])
        w = self.gram * hmat
        isd = np.array([k == "D" for k in self.kinds])
        ist = ~isd
        return {
            "compat": float(np.sum(w[np.ix_(isd, isd)])),
            "excess": float(np.sum(w[np.ix_(ist, ist)])),
            "cross": float(np.sum(w[np.ix_(isd, ist)])),
        }


@dataclass(frozen=True)
class GradCell:
    """Interior cell of the gradient construction on (-l, l) x (0, h).

    Two sheared phase-1 strips, each of width theta*l, move apart by l/2
    between the bottom and the top edge so that the top trace oscillates
    at twice the frequency of the bottom trace.
    """

    l: float
    h: float
    theta: float
    b: np.ndarray
    kind = "grad_interior"

    def __post_init__(self):
        if not (0 < self.l <= self.h * (1 + 1e-12) and self.h <= 1 + 1e-12):
            raise AspectError(f"interior cell needs 0 < l <= h <= 1, got l={self.l}, h={self.h}")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")

    @property
    def shear(self) -> float:
        return (1 - self.theta) * self.l / (2 * self.h)

    def region(self, s, t):
        th, l, gs = self.theta, self.l, self.shear
        c = [-th * l - gs * t, -gs * t, gs * t, th * l + gs * t]
        r = np.full(np.shape(s), 5, dtype=np.int8)
        for k in (3, 2, 1, 0):
            r = np.where(s < c[k], k + 1, r)
        return r

    def phase(self, s, t):
        r = self.region(s, t)
        return ((r == 2) | (r == 4)).astype(np.int8)

    def scalar(self, s, t):
        th, l, gs = self.theta, self.l, self.shear
        r = self.region(s, t)
        vals = [-th * (l + s), (1 - th) * s + gs * t, -th * s, (1 - th) * s - gs * t, -th * (s - l)]
        return np.select([r == k for k in range(1, 6)], vals)

    def scalar_grad(self, s, t):
        th, gs = self.theta, self.shear
        r = self.region(s, t)
        d1 = np.where((r == 2) | (r == 4), 1 - th, -th)
        d2 = np.where(r == 2, gs, np.where(r == 4, -gs, 0.0))
        return d1, d2

    def v(self, s, t):
        return self.scalar(s, t)[..., None] * self.b

    def grad(self, s, t):
        d1, d2 = self.scalar_grad(s, t)
        return d1[..., None, None] * np.outer(self.b, E1) + d2[..., None, None] * np.outer(self.b, E2)

    def terms(self, t0: np.ndarray, t1: np.ndarray) -> CellTerms:
        """t0, t1: the constant mismatches (tilde well minus well) of both phases."""
        th, l, h = self.theta, self.l, self.h
        e2m = self.shear * np.outer(self.b, E2)
        strip = th * l * h  # area of each sheared strip
        gram = np.array([
            [strip, 0.0, 0.0, strip],
            [0.0, strip, 0.0, strip],
            [0.0, 0.0, 2 * (1 - th) * l * h, 0.0],
            [strip, strip, 0.0, 2 * th * l * h],
        ])
        length = 4 * math.hypot(self.shear * h, h)
        return CellTerms((e2m, -e2m, t0, t1), ("D", "D", "T", "T"), gram, length)


@dataclass(frozen=True)
class CutoffCell:
    """Boundary-layer cell: the bottom sawtooth trace ramped down to zero."""

    l: float
    h: float
    theta: float
    b: np.ndarray
    kind: str = "grad_cutoff"

    def __post_init__(self):
        if not (0 < self.l <= 2 * self.h * (1 + 1e-12) and 2 * self.h <= 1 + 1e-12):
            raise AspectError(f"cut-off cell needs 0 < l <= 2h <= 1, got l={self.l}, h={self.h}")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")

    def region(self, s, t):
        return np.where(np.abs(s) < self.theta * self.l, 7, 6).astype(np.int8)

    def phase(self, s, t):
        return (np.abs(s) < self.theta * self.l).astype(np.int8)

    def scalar(self, s, t):
        return cutoff(t / self.h) * sawtooth(self.theta, self.l, s)

    def scalar_grad(self, s, t):
        d1 = cutoff(t / self.h) * _sawtooth_slope(self.theta, s, self.l)
        d2 = _cutoff_slope(t / self.h) / self.h * sawtooth(self.theta, self.l, s)
        return d1, d2

    def v(self, s, t):
        return self.scalar(s, t)[..., None] * self.b

    def grad(self, s, t):
        d1, d2 = self.scalar_grad(s, t)
        return d1[..., None, None] * np.outer(self.b, E1) + d2[..., None, None] * np.outer(self.b, E2)

    def terms(self, t0, t1) -> CellTerms:
        th, l, h = self.theta, self.l, self.h
        b1 = np.outer(self.b, E1)
        b2 = np.outer(self.b, E2)
        # profiles: (psi - 1) phi', psi' phi / h, 1_outer, 1_inner
        m = 0.75 * h * th * (1 - th) * l
        gram = np.array([
            [2 * h * l * th * (1 - th) / 3, 0.0, m, -m],
            [0.0, 8 * l**3 * th**2 * (1 - th) ** 2 / (3 * h), 0.0, 0.0],
            [m, 0.0, 2 * (1 - th) * l * h, 0.0],
            [-m, 0.0, 0.0, 2 * th * l * h],
        ])
        return CellTerms((b1, b2, t0, t1), ("D", "D", "T", "T"), gram, 2 * h)


@dataclass(frozen=True)
class ChanContiCell:
    """Interior cell for a well difference lam * e1 x e1 under curl-curl.

    The strip boundaries follow a smooth profile and the second displacement
    component is chosen so that the off-diagonal strain vanishes; the only
    mismatch left is the (2, 2) strain entry.
    """

    l: float
    h: float
    theta: float
    lam: float
    kind = "cc_interior"

    def __post_init__(self):
        if not (0 < self.l <= self.h * (1 + 1e-12) and self.h <= 1 + 1e-12):
            raise AspectError(f"interior cell needs 0 < l <= h <= 1, got l={self.l}, h={self.h}")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")

    @property
    def amplitude(self) -> float:
        return (1 - self.theta) * self.l / 2

    def _profile(self, t):
        tau = np.asarray(t, dtype=float) / self.h
        return smoothstep(tau), _smoothstep_d1(tau), _smoothstep_d2(tau)

    def region(self, s, t):
        th, l, al = self.theta, self.l, self.amplitude
        g, _, _ = self._profile(t)
        c = [-th * l - al * g, -al * g, al * g, th * l + al * g]
        r = np.full(np.shape(s), 5, dtype=np.int8)
        for k in (3, 2, 1, 0):
            r = np.where(s < c[k], k + 1, r)
        return r

    def phase(self, s, t):
        r = self.region(s, t)
        return ((r == 2) | (r == 4)).astype(np.int8)

    def v(self, s, t):
        th, l, al, h = self.theta, self.l, self.amplitude, self.h
        g, g1, _ = self._profile(t)
        r = self.region(s, t)
        v1 = np.select(
            [r == k for k in range(1, 6)],
            [-th * (l + s), (1 - th) * s + al * g, -th * s, (1 - th) * s - al * g, -th * (s - l)],
        )
        k = al / h * g1
        v2 = np.select(
            [r == 2, r == 3, r == 4],
            [-k * (th * l + al * g + s), -k * th * l, -k * (th * l + al * g - s)],
            0.0,
        )
        return self.lam * np.stack([v1, v2], axis=-1)

    def grad(self, s, t):
        th, l, al, h = self.theta, self.l, self.amplitude, self.h
        g, g1, g2 = self._profile(t)
        r = self.region(s, t)
        in1 = (r == 2) | (r == 4)
        d11 = np.where(in1, 1 - th, -th)
        k = al / h * g1
        d21 = np.where(r == 2, k, np.where(r == 4, -k, 0.0))  # d v1 / d x2
        d12 = -d21  # d v2 / d x1
        kk = al / h**2 * g2
        d22 = np.select(
            [r == 2, r == 3, r == 4],
            [-kk * (th * l + al * g + s) - k**2, -kk * th * l, -kk * (th * l + al * g - s) - k**2],
            0.0,
        )
        out = np.empty(np.shape(s) + (2, 2))
        out[..., 0, 0] = d11
        out[..., 0, 1] = d21
        out[..., 1, 0] = d12
        out[..., 1, 1] = d22
        return self.lam * out

    def _strain_moments(self):
        """int (e22)^2, int_{phase 0} e22 and int_{phase 1} e22 for lam = 1."""
        th, l, al, h = self.theta, self.l, self.amplitude, self.h
        x, w = np.polynomial.legendre.leggauss(GAUSS_ORDER)
        t = 0.5 * h * (x + 1)
        w = 0.5 * h * w
        g, g1, g2 = self._profile(t)
        A = al * g2 / h**2
        B = (al * g1 / h) ** 2
        wl = th * l
        # strips: e22 = -(A s + B) for s in (0, theta l); middle: e22 = -A theta l on width 2 al g
        strip_sq = A**2 * wl**3 / 3 + A * B * wl**2 + B**2 * wl
        mid_sq = (A * wl) ** 2 * 2 * al * g
        strip_int = -(A * wl**2 / 2 + B * wl)
        mid_int = -A * wl * 2 * al * g
        sq = float(w @ (2 * strip_sq + mid_sq))
        int0 = float(w @ mid_int)
        int1 = float(w @ (2 * strip_int))
        return sq, int0, int1

    def interface_length(self) -> float:
        al, h = self.amplitude, self.h
        val, _ = quad(lambda s: math.hypot(h, al * float(_smoothstep_d1(s))), 0.0, 1.0,
                      epsabs=1e-14, epsrel=1e-13, limit=200)
        return 4 * val

    def terms(self, t0, t1) -> CellTerms:
        th, l, h = self.theta, self.l, self.h
        sq, int0, int1 = self._strain_moments()
        m = self.lam * np.outer(E2, E2)
        gram = np.array([
            [sq, int0, int1],
            [int0, 2 * (1 - th) * l * h, 0.0],
            [int1, 0.0, 2 * th * l * h],
        ])
        return CellTerms((m, t0, t1), ("D", "T", "T"), gram, self.interface_length())


CELL_KINDS = ("grad_interior", "grad_cutoff", "cc_interior", "cc_cutoff")


@dataclass(frozen=True)
class CellSpec:
    l: float
    h: float
    theta: float
    b: np.ndarray  # wave vector; for curl-curl cells only b[0] = lam is used
    kind: str = "grad_interior"


@dataclass(frozen=True)
class CellLedger:
    excess: float
    compat: float
    cross: float
    surface: float

    @property
    def elastic(self) -> float:
        return self.excess + self.compat + 2 * self.cross


def make_cell(spec: CellSpec):
    b = np.asarray(spec.b, dtype=float)
    if spec.kind == "grad_interior":
        return GradCell(spec.l, spec.h, spec.theta, b)
    if spec.kind in ("grad_cutoff", "cc_cutoff"):
        return CutoffCell(spec.l, spec.h, spec.theta, b, spec.kind)
    if spec.kind == "cc_interior":
        return ChanContiCell(spec.l, spec.h, spec.theta, float(b[0]))
    raise ValueError(f"unknown cell kind {spec.kind!r}, expected one of {CELL_KINDS}")


def unit_cell(spec: CellSpec, F, wells, phi=None):
    """A single cell and its energy ledger for wells whose difference is compatible with e1.

    The approximating wells are F - theta b x e1 and F + (1 - theta) b x e1
    (b (.) e1 for curl-curl cells); ``phi`` defaults to the identity for
    gradient cells and to symmetrization for curl-curl cells.
    """
    cell = make_cell(spec)
    F = np.asarray(F, dtype=float)
    a0, a1 = (np.asarray(w, dtype=float) for w in wells)
    b = np.asarray(spec.b, dtype=float)
    cc = spec.kind.startswith("cc")
    if phi is None:
        phi = _sym if cc else _identity
    pa = np.outer(b, E1)
    if cc:
        pa = _sym(pa)
    t0 = F - spec.theta * pa - a0
    t1 = F + (1 - spec.theta) * pa - a1
    terms = cell.terms(t0, t1)
    parts = terms.parts(phi)
    jump = float(np.linalg.norm(phi(a1 - a0)))
    return cell, CellLedger(parts["excess"], parts["compat"], parts["cross"], jump * terms.length)


# -------------------------------------------------------------------- layout

@dataclass(frozen=True)
class Layout:
    """Layer table of the upper half square; the lower half is its mirror."""

    N: int
    tau: float
    j0: int
    half_width: np.ndarray  # l_j, last entry is the cut-off layer
    height: np.ndarray  # h_j, last entry is the cut-off layer
    bottom: np.ndarray  # y_j

    @property
    def layers(self) -> int:
        return len(self.height)

    def count(self, j: int) -> int:
        return self.N * 2**j


def make_layout(N: int, tau: float = 0.4) -> Layout:
    if int(N) != N or N < 2:
        raise ValueError("N must be an integer >= 2")
    if not 0.25 < tau < 0.5:
        raise ValueError("tau must lie in (1/4, 1/2)")
    N = int(N)
    ls, hs, ys = [], [], []
    j = 0
    while True:
        lj = 1.0 / (2 * N * 2**j)
        hj = tau**j * (1 - tau) / 2
        if lj > hj:
            break
        ls.append(lj)
        hs.append(hj)
        ys.append(1 - tau**j / 2)
        j += 1
    j0 = j - 1
    ls.append(1.0 / (2 * N * 2 ** (j0 + 1)))
    hs.append(tau ** (j0 + 1) / 2)
    ys.append(1 - tau ** (j0 + 1) / 2)
    return Layout(N, tau, j0, np.array(ls), np.array(hs), np.array(ys))


def choose_N(epsilon: float, exponent: str = "2/3") -> int:
    """Number of oscillations in the coarsest layer for a given epsilon."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    power = {"2/3": 3, "4/5": 5}[exponent]
    x = epsilon ** (-1.0 / power)
    n = round(x)
    # guard against ceil(10.000000000000002) = 11
    N = n if abs(x - n) <= 1e-9 * x else math.ceil(x)
    return max(int(N), 2)


# ---------------------------------------------------------------- the field

@dataclass(frozen=True)
class LayerLedger:
    j: int
    kind: str
    l: float
    h: float
    y: float
    count: int
    excess: float
    compat: float
    cross: float
    interface: float


@dataclass(frozen=True)
class Ledger:
    layers: tuple
    excess: float
    compat: float
    cross: float
    interface_length: float
    jump: float  # |phi(a1 - a0)|, the surface energy density per unit length
    phase1_area: float

    @property
    def elastic(self) -> float:
        return self.excess + self.compat + 2 * self.cross

    @property
    def surface(self) -> float:
        return self.jump * self.interface_length

    def total(self, eps: float) -> float:
        return self.elastic + eps * self.surface

    def corrected(self, eps: float) -> float:
        """Total energy minus the excess energy, without the cancellation."""
        return self.compat + 2 * self.cross + eps * self.surface

    def as_dict(self) -> dict:
        return {
            "excess": self.excess,
            "elastic_compat": self.compat,
            "cross": self.cross,
            "elastic": self.elastic,
            "interface_length": self.interface_length,
            "surface": self.surface,
            "phase1_area": self.phase1_area,
            "layers": [vars(x) for x in self.layers],
        }


def _identity(m):
    return m


@dataclass(frozen=True)
class BranchField:
    """A self-similar branching microstructure on the unit square.

    ``F``, ``wells`` and ``tilde`` are canonical-frame data.  ``phi`` maps a
    canonical matrix field to the quantity whose norm is the physical energy
    density (rotation back to the original frame, symmetrization).
    """

    layout: Layout
    cells: tuple
    theta: float
    F: np.ndarray
    wells: tuple
    tilde: tuple
    phi: Callable = field(default=_identity, repr=False)
    symmetric: bool = False
    reduction: object = field(default=None, repr=False)
    # lower half: v(x1, 1 - x2) for gradient fields, the reflected vector
    # field (v1, -v2) for curl-curl cells so the shear strain stays zero
    reflect: bool = False

    @property
    def N(self) -> int:
        return self.layout.N

    @property
    def tau(self) -> float:
        return self.layout.tau

    @property
    def j0(self) -> int:
        return self.layout.j0

    # ---- geometry
    def _locate(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        up = 0.5 + np.abs(x2 - 0.5)
        sign = np.where(x2 >= 0.5, 1.0, -1.0)
        lay = self.layout
        j = np.clip(np.searchsorted(lay.bottom, up, side="right") - 1, 0, lay.layers - 1)
        lj = lay.half_width[j]
        cnt = self.N * 2 ** j.astype(np.int64)
        k = np.clip(np.floor(x1 / (2 * lj)).astype(np.int64), 0, cnt - 1)
        s = x1 - (2 * k + 1) * lj
        t = up - lay.bottom[j]
        return j, k, s, t, sign

    def _per_layer(self, x1, x2, fn, shape_tail=()):
        j, k, s, t, sign = self._locate(x1, x2)
        out = None
        for jj, cell in enumerate(self.cells):
            m = j == jj
            if not np.any(m):
                continue
            val = fn(cell, s[m], t[m], sign[m])
            if out is None:
                out = np.zeros(np.shape(j) + np.shape(val)[1:], dtype=np.asarray(val).dtype)
            out[m] = val
        return out

    def locate(self, x1, x2):
        """Layer index, cell index and region code (1-5 interior, 6/7 cut-off)."""
        j, k, s, t, _ = self._locate(x1, x2)
        reg = self._per_layer(x1, x2, lambda c, s, t, sg: c.region(s, t))
        return j, k, reg

    def phase(self, x1, x2) -> np.ndarray:
        return self._per_layer(x1, x2, lambda c, s, t, sg: c.phase(s, t))

    def v(self, x1, x2) -> np.ndarray:
        def fn(c, s, t, sg):
            out = c.v(s, t)
            if self.reflect:
                out[..., 1] *= sg
            return out
        return self._per_layer(x1, x2, fn)

    def grad_v(self, x1, x2) -> np.ndarray:
        def fn(c, s, t, sg):
            g = c.grad(s, t)
            if self.reflect:
                g[..., 0, 1] *= sg
                g[..., 1, 0] *= sg
            else:
                g[..., :, 1] *= sg[:, None]
            return g
        return self._per_layer(x1, x2, fn)

    def u(self, x1, x2) -> np.ndarray:
        """Canonical-frame strain F + grad v (not yet passed through phi)."""
        return self.F + self.grad_v(x1, x2)

    def chi(self, x1, x2) -> np.ndarray:
        ph = self.phase(x1, x2)
        return np.where(ph[..., None, None] == 1, self.wells[1], self.wells[0])

    def chi_tilde(self, x1, x2) -> np.ndarray:
        ph = self.phase(x1, x2)
        return np.where(ph[..., None, None] == 1, self.tilde[1], self.tilde[0])

    # ---- energies
    @property
    def ledger(self) -> Ledger:
        cached = self.__dict__.get("_ledger")
        if cached is None:
            cached = self._build_ledger()
            object.__setattr__(self, "_ledger", cached)
        return cached

    def _build_ledger(self) -> Ledger:
        t0 = self.tilde[0] - self.wells[0]
        t1 = self.tilde[1] - self.wells[1]
        rows = []
        tot = {"excess": 0.0, "compat": 0.0, "cross": 0.0}
        length = 0.0
        area1 = 0.0
        for j, cell in enumerate(self.cells):
            terms = cell.terms(t0, t1)
            parts = terms.parts(self.phi)
            cnt = self.layout.count(j)
            rows.append(LayerLedger(j, cell.kind, cell.l, cell.h, float(self.layout.bottom[j]), cnt,
                                    parts["excess"], parts["compat"], parts["cross"], terms.length))
            for key in tot:
                tot[key] += 2 * cnt * parts[key]
            length += 2 * cnt * terms.length
            area1 += 2 * cnt * 2 * self.theta * cell.l * cell.h
        jump = float(np.linalg.norm(self.phi(self.wells[1] - self.wells[0])))
        return Ledger(tuple(rows), tot["excess"], tot["compat"], tot["cross"], length, jump, area1)

    @property
    def interface_length(self) -> float:
        return self.ledger.interface_length

    def energy(self, eps: float) -> float:
        return self.ledger.total(eps)


def _check_canonical(theta, F, wells):
    if not 0 < theta < 1:
        raise ValueError("branching constructions need a mixing volume fraction in (0, 1)")
    F = np.asarray(F, dtype=float)
    return F, tuple(np.asarray(w, dtype=float) for w in wells)


def assemble_grad(F, wells, theta: float, N: int, tau: float = 0.4, phi=_identity,
                  reduction=None) -> BranchField:
    """Gradient branching for canonical data (e1 optimal, theta in (0, 1))."""
    F, wells = _check_canonical(theta, F, wells)
    a = wells[1] - wells[0]
    b = a @ E1
    pa = np.outer(b, E1)
    tilde = (F - theta * pa, F + (1 - theta) * pa)
    lay = make_layout(N, tau)
    cells = [GradCell(lay.half_width[j], lay.height[j], theta, b) for j in range(lay.j0 + 1)]
    cells.append(CutoffCell(lay.half_width[-1], lay.height[-1], theta, b))
    return BranchField(lay, tuple(cells), theta, F, wells, tilde, phi, False, reduction)


def assemble_chan_conti(F, wells, theta: float, N: int, tau: float = 0.4, phi=None,
                        reduction=None) -> BranchField:
    """Curl-curl branching for canonical data with a1 - a0 = lam e1 x e1."""
    F, wells = _check_canonical(theta, F, wells)
    a = wells[1] - wells[0]
    lam = float(a[0, 0])
    off = np.linalg.norm(a - lam * np.outer(E1, E1))
    if off > 1e-9 * abs(lam):
        raise ValueError("Chan-Conti cells need a well difference proportional to e1 x e1")
    pa = lam * np.outer(E1, E1)
    tilde = (F - theta * pa, F + (1 - theta) * pa)
    lay = make_layout(N, tau)
    cells = [ChanContiCell(lay.half_width[j], lay.height[j], theta, lam) for j in range(lay.j0 + 1)]
    cells.append(CutoffCell(lay.half_width[-1], lay.height[-1], theta, lam * E1, "cc_cutoff"))
    if phi is None:
        phi = _sym
    return BranchField(lay, tuple(cells), theta, F, wells, tilde, phi, True, reduction, reflect=True)


def _sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def symmetrize_field(fld: BranchField) -> BranchField:
    """The curl-curl field sym(u), sym(chi) obtained from a gradient field."""
    if fld.symmetric:
        return fld
    inner = fld.phi
    return replace(fld, phi=lambda m: _sym(inner(m)), symmetric=True)
