"""Grid evaluation of elastic, surface and Fourier-relaxed energies.

These are deliberately independent of the analytic ledgers in
:mod:`twowell.construction`: displacements are sampled at grid nodes,
differentiated by finite differences and integrated with the midpoint rule.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

MIN_N, MAX_N = 64, 8192
ROW_CHUNK = 256


def _identity(m):
    return m


def _sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


@dataclass(frozen=True)
class GridField:
    """Nodal displacements and cell-centre phases on the unit square."""

    n: int
    v: np.ndarray  # (n+1, n+1, 2), v[i, j] at (i/n, j/n)
    phase: np.ndarray  # (n, n), phase[i, j] at ((i+1/2)/n, (j+1/2)/n)
    F: np.ndarray
    wells: tuple
    phi: Callable = field(default=_identity, repr=False)
    min_feature: float | None = None  # smallest cell width of the construction

    def __post_init__(self):
        n = self.n
        if n < MIN_N or n > MAX_N or n & (n - 1):
            raise ValueError(f"grid size must be a power of two in [{MIN_N}, {MAX_N}], got {n}")
        if self.v.shape != (n + 1, n + 1, 2) or self.phase.shape != (n, n):
            raise ValueError("inconsistent grid array shapes")

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @property
    def under_resolved(self) -> bool:
        return self.min_feature is not None and self.min_feature < 2 * self.dx

    def strain(self, rows: slice = slice(None)) -> np.ndarray:
        """F + Dv at cell centres (central differences on the staggered grid)."""
        i0, i1, _ = rows.indices(self.n)
        v = self.v[i0:i1 + 1]
        d1 = 0.5 * ((v[1:, :-1] - v[:-1, :-1]) + (v[1:, 1:] - v[:-1, 1:])) * self.n
        d2 = 0.5 * ((v[:-1, 1:] - v[:-1, :-1]) + (v[1:, 1:] - v[1:, :-1])) * self.n
        return self.F + np.stack([d1, d2], axis=-1)


def sample_grid(fld, n: int) -> GridField:
    """Sample a branching field (canonical frame) on an n x n grid."""
    x = np.arange(n + 1) / n
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    v = fld.v(X1, X2)
    c = (np.arange(n) + 0.5) / n
    C1, C2 = np.meshgrid(c, c, indexing="ij")
    phase = fld.phase(C1, C2).astype(np.int8)
    finest = 2 * float(np.min(fld.layout.half_width))
    return GridField(n, v, phase, np.asarray(fld.F, dtype=float), tuple(fld.wells), fld.phi, finest)


def grid_from_arrays(v, phase, F, wells, symmetric: bool = False) -> GridField:
    v = np.asarray(v, dtype=float)
    return GridField(v.shape[0] - 1, v, np.asarray(phase, dtype=np.int8), np.asarray(F, dtype=float),
                     tuple(np.asarray(w, dtype=float) for w in wells), _sym if symmetric else _identity)


def elastic_energy(grid: GridField, wells=None) -> float:
    """Midpoint rule for the integral of |phi(F + Dv - chi)|^2."""
    a0, a1 = grid.wells if wells is None else (np.asarray(w, dtype=float) for w in wells)
    total = 0.0
    for i in range(0, grid.n, ROW_CHUNK):
        rows = slice(i, min(i + ROW_CHUNK, grid.n))
        u = grid.strain(rows)
        ph = grid.phase[rows][..., None, None]
        m = grid.phi(u - np.where(ph == 1, a1, a0))
        total += float(np.sum(m * m))
    return total * grid.dx**2


def mean_strain(grid: GridField) -> np.ndarray:
    acc = np.zeros((2, 2))
    for i in range(0, grid.n, ROW_CHUNK):
        acc += grid.strain(slice(i, min(i + ROW_CHUNK, grid.n))).sum(axis=(0, 1))
    return acc * grid.dx**2


def _edge_jumps(phase: np.ndarray) -> int:
    return int(np.count_nonzero(phase[1:] != phase[:-1]) + np.count_nonzero(phase[:, 1:] != phase[:, :-1]))


def interface_length_grid(phase: np.ndarray) -> float:
    """Number of interior grid edges separating the phases, times the edge length."""
    return _edge_jumps(phase) / phase.shape[0]


def surface_energy_grid(grid: GridField) -> float:
    """Total variation of the sampled phase field, measured with the well jump."""
    jump = float(np.linalg.norm(grid.phi(grid.wells[1] - grid.wells[0])))
    return jump * interface_length_grid(grid.phase)


def surface_energy(fld) -> float:
    """Analytic surface energy of a branching field."""
    return fld.ledger.surface


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    surface: float
    E0: float
    area: float = 1.0
    flags: tuple = ()

    def total(self, eps: float) -> float:
        return self.elastic + eps * self.surface

    def excess_corrected(self, eps: float) -> float:
        return self.total(eps) - self.area * self.E0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def breakdown(grid: GridField, E0: float) -> EnergyBreakdown:
    flags = ("under_resolved",) if grid.under_resolved else ()
    return EnergyBreakdown(elastic_energy(grid), surface_energy_grid(grid), E0, 1.0, flags)


# ------------------------------------------------------------ Fourier side

def _line_directions(directions) -> np.ndarray:
    w = np.atleast_2d(np.asarray(directions, dtype=float))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def fourier_weight(k1: np.ndarray, k2: np.ndarray, directions, order: int) -> np.ndarray:
    """(dist(xi, W) / |xi|)^(2 order) with W a union of lines, 0 at xi = 0."""
    w = _line_directions(directions)  # +-x give the same line, duplicates are harmless
    r2 = k1**2 + k2**2
    d2 = np.full(np.shape(r2), np.inf)
    for x in w:
        d2 = np.minimum(d2, r2 - (k1 * x[0] + k2 * x[1]) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r2 > 0, np.clip(d2, 0, None) / r2, 0.0) ** order
    return out


def fourier_relaxed_energy(phase: np.ndarray, theta: float, directions, order: int,
                           pad: int = 2) -> float:
    """Integral of |f^|^2 (dist(xi, W)/|xi|)^(2L) for f = 1_{phase 1} - theta on Q, 0 outside.

    ``directions`` lists unit vectors spanning the lines whose union is W.
    """
    phase = np.asarray(phase)
    n = phase.shape[0]
    if phase.shape != (n, n):
        raise ValueError("phase must be square")
    w = _line_directions(directions)
    if w.shape[0] == 0:
        raise ValueError("need at least one optimal direction")
    m = pad * n
    f = np.zeros((m, m))
    f[:n, :n] = (phase == 1) - theta
    spec = np.abs(np.fft.rfft2(f)) ** 2
    k1 = np.fft.fftfreq(m)[:, None]
    k2 = np.fft.rfftfreq(m)[None, :]
    wt = fourier_weight(k1, k2, w, order)
    # rfft stores half the spectrum: double every column except k2 = 0 (and Nyquist)
    mult = np.full(spec.shape[1], 2.0)
    mult[0] = 1.0
    if m % 2 == 0:
        mult[-1] = 1.0
    dx = 1.0 / n
    return float(np.sum(spec * wt * mult) * dx**2 / m**2)


def parseval_mass(phase: np.ndarray, theta: float, pad: int = 2) -> float:
    """Spectral mass of f away from xi = 0."""
    n = phase.shape[0]
    m = pad * n
    f = np.zeros((m, m))
    f[:n, :n] = (np.asarray(phase) == 1) - theta
    spec = np.abs(np.fft.fft2(f)) ** 2
    spec[0, 0] = 0.0
    return float(spec.sum() / n**2 / m**2)


def phase_total_variation(phase: np.ndarray, theta: float, boundary: bool = False) -> float:
    """Total variation of f = 1_{phase 1} - theta; optionally including the jump to 0 outside Q."""
    n = phase.shape[0]
    tv = (1.0 * _edge_jumps(phase)) / n
    if boundary:
        f = np.abs((np.asarray(phase) == 1) - theta)
        tv += (f[0].sum() + f[-1].sum() + f[:, 0].sum() + f[:, -1].sum()) / n
    return tv


def elastic_energy_exact(fld, n: int, wells=None) -> float:
    """Midpoint rule on an n x n grid using the field's analytic gradient.

    Finite differences smear the gradient jump over every grid cell an
    interface passes through, which biases the result upwards by an amount
    proportional to (interface length) x (grid spacing).  Evaluating the
    exact piecewise gradient at cell centres removes that bias.
    """
    a0, a1 = fld.wells if wells is None else (np.asarray(w, dtype=float) for w in wells)
    c = (np.arange(n) + 0.5) / n
    total = 0.0
    for i in range(0, n, ROW_CHUNK):
        C1, C2 = np.meshgrid(c[i:i + ROW_CHUNK], c, indexing="ij")
        u = fld.u(C1, C2)
        ph = fld.phase(C1, C2)[..., None, None]
        m = fld.phi(u - np.where(ph == 1, a1, a0))
        total += float(np.sum(m * m))
    return total / n**2


def cell_grid_energy(cell, F, wells, n: int = 2048, phi=None) -> float:
    """Finite-difference midpoint energy of one cell on its own n x n grid.

    The rectangle is (-l, l) x (0, h); ``wells`` are the matrices the strain
    F + Dv is compared against in phase 0 and phase 1.
    """
    phi = _identity if phi is None else phi
    a0, a1 = (np.asarray(w, dtype=float) for w in wells)
    F = np.asarray(F, dtype=float)
    l, h = cell.l, cell.h
    dx, dy = 2 * l / n, h / n
    xs = -l + dx * np.arange(n + 1)
    ys = dy * np.arange(n + 1)
    cx = -l + dx * (np.arange(n) + 0.5)
    cy = dy * (np.arange(n) + 0.5)
    total = 0.0
    for i in range(0, n, ROW_CHUNK):
        i1 = min(i + ROW_CHUNK, n)
        X, Y = np.meshgrid(xs[i:i1 + 1], ys, indexing="ij")
        v = cell.v(X, Y)
        d1 = 0.5 * ((v[1:, :-1] - v[:-1, :-1]) + (v[1:, 1:] - v[:-1, 1:])) / dx
        d2 = 0.5 * ((v[:-1, 1:] - v[:-1, :-1]) + (v[1:, 1:] - v[1:, :-1])) / dy
        CX, CY = np.meshgrid(cx[i:i1], cy, indexing="ij")
        ph = cell.phase(CX, CY)[..., None, None]
        m = phi(F + np.stack([d1, d2], axis=-1) - np.where(ph == 1, a1, a0))
        total += float(np.sum(m * m))
    return total * dx * dy
