"""Constraint operators, their symbols, and compatibility projections.

States live in the d x d real matrices with the Frobenius inner product
(symmetric matrices for the curl-curl operator).  For a unit direction xi
the symbol A(xi) is a linear map on states; its kernel V(xi) holds the
states that can oscillate across planes with normal xi, and P(xi) is the
orthogonal projection onto that kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("curl", "div", "curlcurl")

# relative singular-value cutoff for the nullspace oracle
NULL_TOL = 1e-9


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class DiffOp:
    kind: str
    d: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator {self.kind!r}, expected one of {KINDS}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")

    @property
    def symmetric(self) -> bool:
        return self.kind == "curlcurl"

    def state_dim(self) -> int:
        d = self.d
        return d * (d + 1) // 2 if self.symmetric else d * d

    def __str__(self):
        return f"{self.kind}({self.d})"


def as_op(op) -> DiffOp:
    if isinstance(op, DiffOp):
        return op
    return DiffOp(str(op).lower())


def direction(xi) -> np.ndarray:
    """Normalize a direction; the projections are 0-homogeneous in xi."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    n = np.linalg.norm(xi)
    if not np.isfinite(n) or n < 1e-12:
        raise ValueError("direction must be a nonzero finite vector")
    return xi / n


def as_matrix(a, d: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if d is not None and a.shape[0] != d:
        raise DimensionError(f"matrix is {a.shape[0]}x{a.shape[0]}, operator needs {d}x{d}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def sym_outer(b, xi) -> np.ndarray:
    """b (.) xi = (b x xi + xi x b) / 2."""
    return sym(np.multiply.outer(b, xi))


def is_symmetric(a: np.ndarray, tol: float = 1e-12) -> bool:
    scale = max(1.0, float(np.max(np.abs(a))))
    return bool(np.max(np.abs(a - a.T)) <= tol * scale)


def _check(op: DiffOp, xi, a):
    xi = direction(xi)
    a = as_matrix(a, op.d)
    if xi.shape[0] != op.d:
        raise DimensionError(f"direction has length {xi.shape[0]}, operator needs {op.d}")
    if op.symmetric and not is_symmetric(a):
        raise ValueError("curlcurl acts on symmetric matrices")
    return xi, a


def _symbol(kind: str, xi, a):
    if kind == "div":
        return a @ xi
    if kind == "curl":
        # (i, j, k) -> a_ij xi_k - a_ik xi_j
        t = np.multiply.outer(a, xi)
        return t - np.swapaxes(t, 1, 2)
    # curlcurl: xi_i xi_j a_kl + xi_k xi_l a_ij - xi_i xi_l a_kj - xi_k xi_j a_il
    xx = np.multiply.outer(xi, xi)
    t1 = np.einsum("ij,kl->ijkl", xx, a)
    t2 = np.einsum("kl,ij->ijkl", xx, a)
    t3 = np.einsum("il,kj->ijkl", xx, a)
    t4 = np.einsum("kj,il->ijkl", xx, a)
    return t1 + t2 - t3 - t4


def symbol_apply(op, xi, a) -> np.ndarray:
    """Flattened A(xi)a.

    The curl-curl symbol drops the overall sign coming from the two
    derivatives; only its kernel is used anywhere.
    """
    op = as_op(op)
    xi, a = _check(op, xi, a)
    return np.asarray(_symbol(op.kind, xi, a), dtype=float).reshape(-1)


def _project(kind: str, xi, a):
    # dtype-agnostic so that the same formulas run on mpmath object arrays
    axi = a.dot(xi)
    if kind == "curl":
        return np.outer(axi, xi)
    if kind == "div":
        return a - np.outer(axi, xi)
    b = 2 * axi - xi.dot(axi) * xi
    m = np.outer(b, xi)
    return (m + m.T) / 2


def project_compatible(op, xi, a) -> np.ndarray:
    """Closed-form orthogonal projection of a onto ker A(xi)."""
    op = as_op(op)
    xi, a = _check(op, xi, a)
    return _project(op.kind, xi, a)


def _batch(op, xis, mats):
    op = as_op(op)
    xis = np.asarray(xis, dtype=float)
    mats = np.asarray(mats, dtype=float)
    if xis.shape[-1] != op.d or mats.shape[-2:] != (op.d, op.d):
        raise DimensionError("directions must be (..., d) and states (..., d, d)")
    nrm = np.linalg.norm(xis, axis=-1, keepdims=True)
    if np.any(nrm < 1e-12):
        raise ValueError("directions must be nonzero")
    return op, xis / nrm, mats


def project_many(op, xis, mats) -> np.ndarray:
    """Vectorized projection over stacks of directions (..., d) and states (..., d, d)."""
    op, xi, a = _batch(op, xis, mats)
    axi = np.einsum("...ij,...j->...i", a, xi)
    outer = axi[..., :, None] * xi[..., None, :]
    if op.kind == "curl":
        return outer
    if op.kind == "div":
        return a - outer
    b = 2 * axi - np.einsum("...i,...i->...", xi, axi)[..., None] * xi
    return sym(b[..., :, None] * xi[..., None, :])


def symbol_many(op, xis, mats) -> np.ndarray:
    """Vectorized A(xi)a, flattened over the trailing axes like ``symbol_apply``."""
    op, xi, a = _batch(op, xis, mats)
    lead = np.broadcast_shapes(xi.shape[:-1], a.shape[:-2])
    if op.kind == "div":
        out = np.einsum("...ij,...j->...i", a, xi)
    elif op.kind == "curl":
        t = a[..., :, :, None] * xi[..., None, None, :]
        out = t - np.swapaxes(t, -1, -2)
    else:
        xx = xi[..., :, None] * xi[..., None, :]
        t1 = np.einsum("...ij,...kl->...ijkl", xx, a)
        t3 = np.einsum("...il,...kj->...ijkl", xx, a)
        out = t1 + np.einsum("...ijkl->...klij", t1) - t3 - np.einsum("...ijkl->...klij", t3)
    tail = out.shape[out.ndim - {"div": 1, "curl": 3, "curlcurl": 4}[op.kind]:]
    return np.broadcast_to(out, lead + tail).reshape(lead + (-1,))


def compatible_part_sq(op, xi, a) -> float:
    """|P(xi)a|^2 without forming the projection."""
    op = as_op(op)
    xi, a = _check(op, xi, a)
    axi = a @ xi
    if op.kind == "curl":
        return float(axi @ axi)
    if op.kind == "div":
        return float(np.sum(a * a) - axi @ axi)
    return float(2 * (axi @ axi) - (axi @ xi) ** 2)


def state_basis(op) -> np.ndarray:
    """Frobenius-orthonormal basis of the state space, shape (m, d, d)."""
    op = as_op(op)
    d = op.d
    if not op.symmetric:
        return np.eye(d * d).reshape(d * d, d, d)
    out = []
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d))
            if i == j:
                e[i, i] = 1.0
            else:
                e[i, j] = e[j, i] = 1 / np.sqrt(2)
            out.append(e)
    return np.array(out)


def symbol_matrix(op, xi) -> np.ndarray:
    """Matrix of A(xi) in the orthonormal state basis."""
    op = as_op(op)
    xi = direction(xi)
    if xi.shape[0] != op.d:
        raise DimensionError("direction/operator dimension mismatch")
    cols = [np.asarray(_symbol(op.kind, xi, e), dtype=float).reshape(-1) for e in state_basis(op)]
    return np.stack(cols, axis=1)


def kernel_basis(op, xi, tol: float = NULL_TOL) -> np.ndarray:
    """Orthonormal basis of ker A(xi) as matrices, shape (k, d, d)."""
    op = as_op(op)
    m = symbol_matrix(op, xi)
    _, s, vt = np.linalg.svd(m)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax))
    # a singular value sitting near the cutoff means the rank call is unsafe
    near = s[(s > 1e-3 * tol * smax) & (s < 1e3 * tol * smax)]
    if near.size:
        raise np.linalg.LinAlgError(f"ambiguous rank of the symbol at xi={xi}: {near}")
    null = vt[rank:]
    return np.einsum("km,mij->kij", null, state_basis(op))


def project_compatible_oracle(op, xi, a) -> np.ndarray:
    """Projection onto ker A(xi) computed from an SVD of the symbol."""
    op = as_op(op)
    xi, a = _check(op, xi, a)
    basis = kernel_basis(op, xi)
    coeff = np.einsum("kij,ij->k", basis, a)
    return np.einsum("k,kij->ij", coeff, basis)


def wave_cone_rank(op, samples: int = 64, seed: int = 0) -> list[int]:
    """Kernel dimension of A(xi) over randomly sampled directions."""
    op = as_op(op)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    dims = []
    for _ in range(samples):
        xi = rng.standard_normal(op.d)
        dims.append(int(kernel_basis(op, xi).shape[0]))
    return dims
