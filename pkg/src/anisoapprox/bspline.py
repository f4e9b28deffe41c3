"""Cardinal B-splines, tensor blend weights, two-scale refinement, subdivision operators.

The univariate spline of smoothness m lives on [0, m+1], is C^{m-1} for m >= 1,
and is stored as an exact per-knot-interval polynomial table (rational
coefficients, built once by iterated convolution of the unit-interval
indicator).  Evaluation and differentiation read the table; no quadrature.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .grid import LevelVector, MultiIndex, SignedIndex, binomial

if TYPE_CHECKING:
    from .approx import BlendedPiecewise
    from .domain import DomainGrid


# ---------------------------------------------------------------------------
# exact piecewise-polynomial tables

def _poly_shift(coeffs: list[Fraction], shift: Fraction) -> list[Fraction]:
    """Coefficients of p(x + shift) given those of p(x), exact."""
    deg = len(coeffs) - 1
    out = [Fraction(0)] * len(coeffs)
    for a, c in enumerate(coeffs):
        for b in range(a + 1):
            out[b] += c * binomial(a, b) * shift ** (a - b)
    return out


def _poly_antiderivative(coeffs: list[Fraction]) -> list[Fraction]:
    return [Fraction(0)] + [c / (a + 1) for a, c in enumerate(coeffs)]


def _poly_eval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@lru_cache(maxsize=None)
def _spline_table(m: int) -> tuple[tuple[Fraction, ...], ...]:
    """Per-interval global-coordinate polynomials of the order-m spline, exact.

    Entry i holds the coefficients (constant first) valid on [i, i+1].
    """
    if m < 0:
        raise ValueError("smoothness parameter must be >= 0")
    if m == 0:
        return ((Fraction(1),),)
    prev = _spline_table(m - 1)
    # continuous antiderivative F with F(0)=0; F(x)=1 for x >= m+1... actually x >= m
    anti: list[list[Fraction]] = []
    acc = Fraction(0)
    for i, poly in enumerate(prev):
        a = _poly_antiderivative(list(poly))
        a[0] += acc - _poly_eval(a, Fraction(i))
        anti.append(a)
        acc = _poly_eval(a, Fraction(i + 1))
    table = []
    for i in range(m + 1):
        left = anti[i] if i < len(anti) else [acc]
        right = _poly_shift(anti[i - 1], Fraction(-1)) if 1 <= i <= len(anti) else [Fraction(0)]
        deg = max(len(left), len(right))
        left = left + [Fraction(0)] * (deg - len(left))
        right = right + [Fraction(0)] * (deg - len(right))
        table.append(tuple(l - r for l, r in zip(left, right)))
    return tuple(table)


@lru_cache(maxsize=None)
def _float_table(m: int, order: int) -> np.ndarray:
    """Float coefficient rows of the order-th derivative, shape (m+1, m+1-order)."""
    if order > m:
        raise ValueError(f"derivative order {order} exceeds smoothness {m}")
    rows = []
    for poly in _spline_table(m):
        cur = list(poly) + [Fraction(0)] * (m + 1 - len(poly))
        for _ in range(order):
            cur = [c * (a + 1) for a, c in enumerate(cur[1:])]
        rows.append([float(c) for c in cur] + [0.0] * (m + 1 - order - len(cur)))
    return np.array(rows)


def bspline_eval(m: int, x: float) -> float:
    """Value of the order-m cardinal spline at x (0 outside [0, m+1])."""
    return float(bspline_eval_many(m, np.array([x]))[0])


def bspline_eval_many(m: int, x: np.ndarray, order: int = 0) -> np.ndarray:
    """Vectorized spline (or derivative) evaluation; open-interval indicator for m=0."""
    x = np.asarray(x, dtype=float)
    if m == 0:
        if order > 0:
            raise ValueError("indicator spline has no derivatives")
        return np.where((x > 0.0) & (x < 1.0), 1.0, 0.0)
    table = _float_table(m, order)
    idx = np.floor(x).astype(int)
    inside = (x > 0.0) & (x < m + 1)
    safe = np.clip(idx, 0, m)
    coeffs = table[safe]  # (..., m+1-order)
    acc = np.zeros_like(x)
    for a in range(coeffs.shape[-1] - 1, -1, -1):
        acc = acc * x + coeffs[..., a]
    return np.where(inside, acc, 0.0)


def refinement_coeffs(m: int) -> tuple[Fraction, ...]:
    """Two-scale weights: entry mu is binomial(m+1, mu) / 2^m, mu = 0..m+1."""
    if m < 0:
        raise ValueError("smoothness parameter must be >= 0")
    return tuple(Fraction(binomial(m + 1, mu), 2**m) for mu in range(m + 2))


# ---------------------------------------------------------------------------
# tensor blends

@dataclass(frozen=True)
class Blend:
    """Tensor spline bump anchored at cell (kappa, nu) with smoothness m."""

    kappa: LevelVector
    nu: SignedIndex
    m: MultiIndex

    @property
    def dim(self) -> int:
        return self.nu.dim

    def support(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """Closed support box per axis."""
        return tuple(
            (Fraction(n, 2**k), Fraction(n + mj + 1, 2**k))
            for n, k, mj in zip(self.nu, self.kappa, self.m)
        )


def blend_values(b: Blend, points: np.ndarray, lam: MultiIndex | None = None) -> np.ndarray:
    """Blend (or derivative) values at points (N, d)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, b.dim)
    lam = lam if lam is not None else MultiIndex((0,) * b.dim)
    if not lam <= b.m:
        raise ValueError(f"derivative order {lam.entries} exceeds blend smoothness {b.m.entries}")
    out = np.ones(len(pts))
    scale = 1.0
    for j in range(b.dim):
        t = pts[:, j] * 2 ** b.kappa[j] - b.nu[j]
        out *= bspline_eval_many(b.m[j], t, order=lam[j])
        scale *= float(2 ** (b.kappa[j] * lam[j]))
    return out * scale


def blend_eval(b: Blend, x: Sequence[float]) -> float:
    return float(blend_values(b, np.asarray(x, dtype=float).reshape(1, -1))[0])


def blend_derivative(b: Blend, lam: MultiIndex, x: Sequence[float]) -> float:
    return float(blend_values(b, np.asarray(x, dtype=float).reshape(1, -1), lam)[0])


def overlapping_blends(kappa: LevelVector, m: MultiIndex, cell_nu: SignedIndex) -> list[SignedIndex]:
    """Blend anchors whose support meets the cell: cell_nu + {-m..0}^d."""
    return [
        SignedIndex(tuple(n + o for n, o in zip(cell_nu, offs)))
        for offs in itertools.product(*(range(-mj, 1) for mj in m))
    ]


# ---------------------------------------------------------------------------
# subdivision stencils

@lru_cache(maxsize=None)
def _stencil_1d(steps: int, m: int, nu: int) -> tuple[tuple[int, Fraction], ...]:
    """Sources and weights expressing a target index `steps` levels finer, exact.

    One digit is peeled per level: digit choices mu with nu = mu (mod 2)
    contribute weight a_mu^m and recurse on (nu - mu)/2.
    """
    if steps == 0:
        return ((nu, Fraction(1)),)
    acc: dict[int, Fraction] = {}
    weights = refinement_coeffs(m)
    for mu in range(m + 2):
        if (nu - mu) % 2 == 0:
            for src, w in _stencil_1d(steps - 1, m, (nu - mu) // 2):
                acc[src] = acc.get(src, Fraction(0)) + weights[mu] * w
    return tuple(sorted(acc.items()))


@dataclass(frozen=True)
class SubdivisionStencil:
    """Per-target source/weight table between two nested levels."""

    source_level: LevelVector
    target_level: LevelVector
    entries: dict  # SignedIndex -> tuple[(SignedIndex, Fraction), ...]

    def weights_sum(self, nu: SignedIndex) -> Fraction:
        return sum((w for _, w in self.entries[nu]), Fraction(0))


def subdivision_stencil(
    source_level: LevelVector,
    target_level: LevelVector,
    m: MultiIndex,
    targets: Iterable[SignedIndex],
) -> SubdivisionStencil:
    """Source indices and product weights for each requested target index."""
    if not source_level <= target_level:
        raise ValueError(
            f"source level {source_level.kappa.entries} must be <= target level "
            f"{target_level.kappa.entries} componentwise"
        )
    steps = tuple(kt - ks for ks, kt in zip(source_level, target_level))
    entries = {}
    for nu in targets:
        per_axis = [_stencil_1d(steps[j], m[j], nu[j]) for j in range(nu.dim)]
        combo = []
        for parts in itertools.product(*per_axis):
            src = SignedIndex(tuple(p[0] for p in parts))
            w = Fraction(1)
            for p in parts:
                w *= p[1]
            combo.append((src, w))
        entries[nu] = tuple(combo)
    return SubdivisionStencil(source_level, target_level, entries)


def subdivide(f: "BlendedPiecewise", target_level: LevelVector, grid: "DomainGrid") -> "BlendedPiecewise":
    """Re-express a blended piecewise element on a finer level; agrees with f on the domain."""
    from .approx import BlendedPiecewise  # deferred: approx builds on this module

    if f.kappa.kappa == target_level.kappa:
        return f
    if grid.kappa.kappa != target_level.kappa:
        raise ValueError("domain grid level must match the target level")
    targets = grid.blend_active
    stencil = subdivision_stencil(f.kappa, target_level, f.m, targets)
    cells = {}
    for nu in targets:
        frame = grid.cell_frame(nu)
        parts = []
        for src, w in stencil.entries[nu]:
            try:
                poly = f.cells[src]
            except KeyError:
                raise ValueError(
                    f"stencil source {src.entries} missing from the source element"
                ) from None
            parts.append(poly.reframe(frame).scaled(float(w)))
        acc = parts[0]
        for extra in parts[1:]:
            acc = acc.add(extra)
        cells[nu] = acc
    return BlendedPiecewise(kappa=target_level, m=f.m, degrees=f.degrees, cells=cells)
