"""Tensor polynomial cells in a shifted-Legendre basis, local L2 projection, Lagrange maps.

A :class:`PolyCell` stores a polynomial of coordinate degree <= l through its
coefficients w.r.t. the basis ``prod_j Ln_{lam_j}((x_j - x0_j)/delta_j)`` where
``Ln_n`` is the shifted Legendre polynomial on [0,1] normalized to unit L2 norm.
The basis is orthogonal over the cell ``x0 + delta*(0,1)^d`` by construction,
which is what makes the local projector below the L2-orthogonal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .grid import MultiIndex, ScaleMap, index_range


class QuadratureError(ValueError):
    """Raised when an integrand produced non-finite samples."""


@lru_cache(maxsize=None)
def gauss_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0,1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def legendre_values(deg: int, u: np.ndarray, order: int = 0) -> np.ndarray:
    """Values of the order-th derivative of the normalized shifted Legendre basis.

    Returns shape ``u.shape + (deg+1,)``.
    """
    u = np.asarray(u, dtype=float)
    v = 2.0 * u - 1.0
    vals = np.empty(u.shape + (deg + 1,))
    vals[..., 0] = 1.0
    if deg >= 1:
        vals[..., 1] = v
    for n in range(1, deg):
        vals[..., n + 1] = ((2 * n + 1) * v * vals[..., n] - n * vals[..., n - 1]) / (n + 1)
    vals *= np.sqrt(2.0 * np.arange(deg + 1) + 1.0)
    for _ in range(order):
        vals = vals @ deriv_matrix(deg)
    return vals


@lru_cache(maxsize=None)
def deriv_matrix(deg: int) -> np.ndarray:
    """Matrix D with d/du Ln_n = sum_k D[k,n] Ln_k (exact closed form)."""
    d = np.zeros((deg + 1, deg + 1))
    for n in range(deg + 1):
        for k in range(n - 1, -1, -2):
            d[k, n] = 2.0 * math.sqrt((2 * n + 1) * (2 * k + 1))
    return d


@lru_cache(maxsize=None)
def _reframe_matrix_1d(deg: int, a: Fraction, b: Fraction) -> np.ndarray:
    """M with Ln_n(a + b*u) = sum_k M[k,n] Ln_k(u), exact via Gauss quadrature."""
    u, w = gauss_01(deg + 1)
    old = legendre_values(deg, float(a) + float(b) * u)  # (n_nodes, deg+1)
    new = legendre_values(deg, u)
    return np.einsum("q,qk,qn->kn", w, new, old)


def _axis_apply(coeffs: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(mat, coeffs, axes=(1, axis)), 0, axis)


@dataclass(frozen=True)
class PolyCell:
    """Polynomial of coordinate degree <= degrees, framed on the box frame.x0 + frame.delta*(0,1)^d."""

    frame: ScaleMap
    degrees: MultiIndex
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        want = tuple(d + 1 for d in self.degrees)
        if self.coeffs.shape != want:
            raise ValueError(f"coefficient tensor shape {self.coeffs.shape} != {want}")

    @property
    def dim(self) -> int:
        return self.degrees.dim

    def to_reference(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        x0 = np.array([float(v) for v in self.frame.x0])
        dl = np.array([float(v) for v in self.frame.delta])
        return (pts - x0) / dl

    def values(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (N, d)."""
        u = self.to_reference(points)
        out = self.coeffs
        for j in range(self.dim):
            basis = legendre_values(self.degrees[j], u[:, j])  # (N, deg+1)
            out = np.einsum("nj,j...->n...", basis, out) if j == 0 else np.einsum("nj,nj...->n...", basis, out)
        return out

    def __call__(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def derivative(self, lam: MultiIndex) -> "PolyCell":
        """Exact derivative; degree bounds shrink to (l - lam)_+."""
        coeffs = self.coeffs
        new_deg = []
        for j in range(self.dim):
            dj = self.degrees[j]
            if lam[j] > 0:
                mat = np.linalg.matrix_power(deriv_matrix(dj), lam[j]) / float(self.frame.delta[j]) ** lam[j]
                coeffs = _axis_apply(coeffs, mat, j)
            nd = max(dj - lam[j], 0)
            coeffs = coeffs[tuple(slice(None) if i != j else slice(nd + 1) for i in range(self.dim))]
            new_deg.append(nd)
        return PolyCell(self.frame, MultiIndex(tuple(new_deg)), np.ascontiguousarray(coeffs))

    def reframe(self, frame: ScaleMap) -> "PolyCell":
        """Same polynomial, coefficients re-expressed on another frame."""
        if frame == self.frame:
            return self
        coeffs = self.coeffs
        for j in range(self.dim):
            a = (frame.x0[j] - self.frame.x0[j]) / self.frame.delta[j]
            b = frame.delta[j] / self.frame.delta[j]
            coeffs = _axis_apply(coeffs, _reframe_matrix_1d(self.degrees[j], a, b), j)
        return PolyCell(frame, self.degrees, coeffs)

    def scaled(self, factor: float) -> "PolyCell":
        return PolyCell(self.frame, self.degrees, self.coeffs * factor)

    def add(self, other: "PolyCell") -> "PolyCell":
        if other.frame != self.frame or other.degrees != self.degrees:
            other = other.reframe(self.frame)
        return PolyCell(self.frame, self.degrees, self.coeffs + other.coeffs)

    def sup_norm_on_cell(self, samples_per_axis: int = 64) -> float:
        """Max of |p| over the own cell: dense sampling plus one Newton polish."""
        grids = [np.linspace(0.0, 1.0, samples_per_axis) for _ in range(self.dim)]
        mesh = np.meshgrid(*grids, indexing="ij")
        u = np.stack([m.ravel() for m in mesh], axis=1)
        x0 = np.array([float(v) for v in self.frame.x0])
        dl = np.array([float(v) for v in self.frame.delta])
        pts = x0 + dl * u
        vals = self.values(pts)
        best = int(np.argmax(np.abs(vals)))
        out = float(np.abs(vals[best]))
        polished = self._newton_polish(pts[best])
        if polished is not None:
            out = max(out, abs(self(polished)))
        return out

    def _newton_polish(self, x: np.ndarray):
        d = self.dim
        grad = np.array([self.derivative(_unit(d, j))(x) for j in range(d)])
        hess = np.empty((d, d))
        for i in range(d):
            for j in range(d):
                hess[i, j] = self.derivative(_unit2(d, i, j))(x)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            return None
        y = x + step
        lo = np.array([float(v) for v in self.frame.x0])
        hi = lo + np.array([float(v) for v in self.frame.delta])
        return np.clip(y, lo, hi)

    def lp_norm_on_cell(self, p: float, nodes_per_axis: int = 8) -> float:
        if math.isinf(p):
            return self.sup_norm_on_cell()
        u, w = gauss_01(nodes_per_axis)
        mesh = np.meshgrid(*([u] * self.dim), indexing="ij")
        pts_ref = np.stack([m.ravel() for m in mesh], axis=1)
        x0 = np.array([float(v) for v in self.frame.x0])
        dl = np.array([float(v) for v in self.frame.delta])
        vals = self.values(x0 + dl * pts_ref)
        wmesh = np.meshgrid(*([w] * self.dim), indexing="ij")
        wts = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1) * float(np.prod(dl))
        return float(np.sum(wts * np.abs(vals) ** p) ** (1.0 / p))


def _unit(d: int, j: int) -> MultiIndex:
    return MultiIndex(tuple(1 if i == j else 0 for i in range(d)))


def _unit2(d: int, i: int, j: int) -> MultiIndex:
    e = [0] * d
    e[i] += 1
    e[j] += 1
    return MultiIndex(tuple(e))


def zero_cell(frame: ScaleMap, degrees: MultiIndex) -> PolyCell:
    return PolyCell(frame, degrees, np.zeros(tuple(d + 1 for d in degrees)))


def project_L2(f, frame: ScaleMap, degrees: MultiIndex, q_extra: int = 4,
               nodes_per_axis: int | None = None) -> PolyCell:
    """L2-orthogonal projection of f onto the tensor polynomial space over the frame cell.

    Reproduces polynomials of coordinate degree <= degrees exactly; the
    quadrature (per-axis Gauss with ``max(l)+1+q_extra`` nodes) is exact for
    polynomial integrands of the degrees involved.
    """
    d = degrees.dim
    n = nodes_per_axis if nodes_per_axis is not None else max(degrees) + 1 + q_extra
    u, w = gauss_01(n)
    mesh = np.meshgrid(*([u] * d), indexing="ij")
    pts_ref = np.stack([m.ravel() for m in mesh], axis=1)
    x0 = np.array([float(v) for v in frame.x0])
    dl = np.array([float(v) for v in frame.delta])
    vals = np.asarray(f(x0 + dl * pts_ref), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise QuadratureError(f"non-finite sample at {x0 + dl * pts_ref[bad[0]]}")
    wmesh = np.meshgrid(*([w] * d), indexing="ij")
    wts = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    coeffs = wts * vals
    # contract point axis against per-axis basis values
    coeffs = coeffs.reshape(*([n] * d))
    for j in range(d):
        basis = legendre_values(degrees[j], u)  # (n, deg+1)
        coeffs = np.moveaxis(np.tensordot(basis, coeffs, axes=(0, j)), 0, j)
    return PolyCell(frame, degrees, coeffs)


def poly_derivative(p: PolyCell, lam: MultiIndex) -> PolyCell:
    return p.derivative(lam)


def lagrange_iso(p: PolyCell) -> np.ndarray:
    """Values of p at the frame node grid x0 + delta*lam, lam in Z_+^d(degrees), lexicographic."""
    nodes = np.array(
        [[float(p.frame.x0[j] + p.frame.delta[j] * lam[j]) for j in range(p.dim)]
         for lam in index_range(p.degrees)]
    )
    return p.values(nodes)


@lru_cache(maxsize=None)
def _lagrange_solve_matrix(deg: int) -> np.ndarray:
    """Inverse of the basis-at-integer-nodes matrix B[i,n] = Ln_n(i)."""
    b = legendre_values(deg, np.arange(deg + 1, dtype=float))
    return np.linalg.inv(b)


def lagrange_from_values(values: np.ndarray, degrees: MultiIndex, frame: ScaleMap) -> PolyCell:
    """Unique polynomial of coordinate degree <= degrees matching the node values."""
    shape = tuple(d + 1 for d in degrees)
    vals = np.asarray(values, dtype=float).reshape(shape)
    coeffs = vals
    for j in range(degrees.dim):
        coeffs = _axis_apply(coeffs, _lagrange_solve_matrix(degrees[j]), j)
    return PolyCell(frame, degrees, coeffs)
