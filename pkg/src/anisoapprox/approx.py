"""Approximation operators: blended quasi-interpolants, telescoping increments,
extension beyond the domain, stepped projections, discretization, rate experiments.

The piecewise containers keep one polynomial per active cell, framed on that
cell, so a single reference coordinate drives both the polynomial and the
blend-weight evaluation.  Batch evaluation walks the fixed set of anchor
offsets whose supports can cover a point, which keeps everything vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import bspline
from .domain import DomainSpec, DomainGrid, LevelTooCoarseError, classify_cells, nearest_interior
from .grid import (
    AnisoProfile,
    LevelVector,
    MultiIndex,
    SignedIndex,
    binomial,
    index_range,
    level_vector,
)
from .polyspace import PolyCell, lagrange_iso, legendre_values, project_L2
from .spaces import QuadratureConfig, ScalarField, as_field, lp_norm


class CertificationError(ValueError):
    """The domain lacks a (passing) chain/covering certification."""


@lru_cache(maxsize=512)
def _grid(domain: DomainSpec, kappa: LevelVector, m: MultiIndex, closure: bool = False) -> DomainGrid:
    return classify_cells(domain, kappa, m, closure_mode=closure)


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, dim)
    return pts


def _poly_group_eval(coeff_rows: np.ndarray, bases: list[np.ndarray]) -> np.ndarray:
    d = len(bases)
    if d == 1:
        return np.einsum("nk,nk->n", coeff_rows, bases[0])
    if d == 2:
        c = coeff_rows.reshape(len(coeff_rows), bases[0].shape[1], bases[1].shape[1])
        return np.einsum("nab,na,nb->n", c, bases[0], bases[1])
    c = coeff_rows.reshape(
        len(coeff_rows), bases[0].shape[1], bases[1].shape[1], bases[2].shape[1]
    )
    return np.einsum("nabc,na,nb,nc->n", c, bases[0], bases[1], bases[2])


class _CellTable:
    """Shared machinery: active-cell lookup plus flattened coefficients."""

    def __init__(self, kappa: LevelVector, degrees: MultiIndex, cells: dict):
        self.kappa = kappa
        self.degrees = degrees
        self.cells = cells
        self._built = False

    def _build(self) -> None:
        if self._built:
            return
        nus = np.array([nu.entries for nu in self.cells], dtype=int)
        order = np.lexsort(nus.T[::-1])
        self.nus = nus[order]
        keys = [tuple(map(int, row)) for row in self.nus]
        self.coeffs = np.stack(
            [self.cells[SignedIndex(k)].coeffs.ravel() for k in keys]
        )
        self.lo = self.nus.min(axis=0)
        shape = self.nus.max(axis=0) - self.lo + 1
        self.lookup = np.full(shape, -1, dtype=int)
        self.lookup[tuple((self.nus - self.lo).T)] = np.arange(len(self.nus))
        self._built = True

    def slots(self, cand: np.ndarray) -> np.ndarray:
        """Slot per candidate index row (-1 when inactive)."""
        self._build()
        rel = cand - self.lo
        ok = np.all((rel >= 0) & (rel < self.lookup.shape), axis=1)
        out = np.full(len(cand), -1, dtype=int)
        if ok.any():
            out[ok] = self.lookup[tuple(rel[ok].T)]
        return out


@dataclass
class BlendedPiecewise:
    """Sum over active anchors of (cell polynomial) * (tensor spline bump)."""

    kappa: LevelVector
    m: MultiIndex
    degrees: MultiIndex
    cells: dict  # SignedIndex -> PolyCell framed on its own cell

    def __post_init__(self) -> None:
        self._table = _CellTable(self.kappa, self.degrees, self.cells)

    @property
    def dim(self) -> int:
        return self.kappa.dim

    def active(self) -> list[SignedIndex]:
        return list(self.cells)

    def values(self, points) -> np.ndarray:
        return self.derivative_values(points, MultiIndex((0,) * self.dim))

    def derivative_values(self, points, lam: MultiIndex) -> np.ndarray:
        if not lam <= self.m:
            raise ValueError(f"derivative order {lam.entries} exceeds blend smoothness {self.m.entries}")
        pts = _as_points(points, self.dim)
        d = self.dim
        scale = np.array([2.0 ** k for k in self.kappa])
        u = pts * scale
        base = np.floor(u).astype(int)
        out = np.zeros(len(pts))
        lam_scale = float(np.prod(scale ** np.array(lam.entries)))
        mus = index_range(lam)
        for off in np.ndindex(*(mj + 1 for mj in self.m)):
            cand = base - np.array(off)
            slots = self._table.slots(cand)
            sel = slots >= 0
            if not sel.any():
                continue
            t = u[sel] - cand[sel]
            rows = self._table.coeffs[slots[sel]]
            acc = np.zeros(sel.sum())
            for mu in mus:
                comb = 1.0
                for a, b in zip(lam, mu):
                    comb *= binomial(a, b)
                w = np.ones(sel.sum())
                for j in range(d):
                    w *= bspline.bspline_eval_many(self.m[j], t[:, j], order=lam[j] - mu[j])
                bases = [legendre_values(self.degrees[j], t[:, j], order=mu[j]) for j in range(d)]
                acc += comb * w * _poly_group_eval(rows, bases)
            out[sel] += acc * lam_scale
        return out

    def combine(self, other: "BlendedPiecewise", factor: float = 1.0) -> "BlendedPiecewise":
        """Cellwise self + factor * other (same level, same active set)."""
        if other.kappa.kappa != self.kappa.kappa or set(other.cells) != set(self.cells):
            raise ValueError("can only combine elements on the same level and active set")
        cells = {
            nu: poly.add(other.cells[nu].scaled(factor)) for nu, poly in self.cells.items()
        }
        return BlendedPiecewise(self.kappa, self.m, self.degrees, cells)

    def as_field(self, name: str = "blended") -> ScalarField:
        def deriv(lam: tuple[int, ...]):
            lam_m = MultiIndex(lam)
            return lambda pts: self.derivative_values(pts, lam_m)

        return ScalarField(self.values, self.dim, deriv, name=name)


@dataclass
class SteppedPiecewise:
    """One polynomial per active cell, glued by cell indicators (0 off the active set)."""

    kappa: LevelVector
    degrees: MultiIndex
    cells: dict  # SignedIndex -> PolyCell framed on its own cell

    def __post_init__(self) -> None:
        self._table = _CellTable(self.kappa, self.degrees, self.cells)

    @property
    def dim(self) -> int:
        return self.kappa.dim

    def values(self, points) -> np.ndarray:
        pts = _as_points(points, self.dim)
        scale = np.array([2.0 ** k for k in self.kappa])
        u = pts * scale
        base = np.floor(u).astype(int)
        slots = self._table.slots(base)
        out = np.zeros(len(pts))
        sel = slots >= 0
        if sel.any():
            t = u[sel] - base[sel]
            bases = [legendre_values(self.degrees[j], t[:, j]) for j in range(self.dim)]
            out[sel] = _poly_group_eval(self._table.coeffs[slots[sel]], bases)
        return out

    def combine(self, other: "SteppedPiecewise", factor: float = 1.0) -> "SteppedPiecewise":
        if other.kappa.kappa != self.kappa.kappa or set(other.cells) != set(self.cells):
            raise ValueError("can only combine elements on the same level and active set")
        cells = {nu: poly.add(other.cells[nu].scaled(factor)) for nu, poly in self.cells.items()}
        return SteppedPiecewise(self.kappa, self.degrees, cells)

    def as_field(self, name: str = "stepped") -> ScalarField:
        return ScalarField(self.values, self.dim, name=name)


# ---------------------------------------------------------------------------
# operator builders

def default_blend_smoothness(profile: AnisoProfile) -> MultiIndex:
    """Blend smoothness large enough for every derivative order below alpha."""
    return profile.l


def quasi_interpolant(f, domain: DomainSpec, profile: AnisoProfile, m: MultiIndex, k: int,
                      degrees: MultiIndex | None = None) -> BlendedPiecewise:
    """Blended local projections at the anisotropic level of stage k.

    Every blend anchor carries the L2 projection of f over the nearest interior
    cell; reproduces polynomials of coordinate degree <= degrees on the domain.
    """
    kappa = level_vector(k, profile)
    grid = _grid(domain, kappa, m)
    if not grid.interior:
        raise LevelTooCoarseError(
            f"stage {k} (level {kappa.kappa.entries}) has no interior cell"
        )
    degrees = degrees if degrees is not None else MultiIndex(tuple(lj - 1 for lj in profile.l))
    field = as_field(f, domain.dim)
    projections: dict[tuple, PolyCell] = {}
    cells = {}
    for nu in grid.blend_active:
        target = nearest_interior(grid, nu)
        proj = projections.get(target.entries)
        if proj is None:
            proj = project_L2(field, grid.cell_frame(target), degrees)
            projections[target.entries] = proj
        cells[nu] = proj.reframe(grid.cell_frame(nu))
    return BlendedPiecewise(kappa, m, degrees, cells)


def telescope(f, domain: DomainSpec, profile: AnisoProfile, m: MultiIndex, k: int,
              degrees: MultiIndex | None = None) -> BlendedPiecewise:
    """Difference between the stage-k interpolant and the subdivided stage-(k-1) one."""
    if k < 1:
        raise ValueError("telescoping needs k >= 1")
    fine = quasi_interpolant(f, domain, profile, m, k, degrees)
    coarse = quasi_interpolant(f, domain, profile, m, k - 1, degrees)
    kappa = fine.kappa
    lifted = bspline.subdivide(coarse, kappa, _grid(domain, kappa, m))
    return fine.combine(lifted, factor=-1.0)


def derivative_eval(g: BlendedPiecewise, lam: MultiIndex, x) -> float:
    """Derivative of the blended sum via the product rule over (polynomial, bump) pairs."""
    return float(g.derivative_values(np.asarray(x, dtype=float).reshape(1, -1), lam)[0])


@dataclass
class ExtensionResult:
    """Base interpolant plus telescoping increments; defined on all of R^d."""

    base: BlendedPiecewise
    increments: list
    k0: int
    k_max: int

    @property
    def dim(self) -> int:
        return self.base.dim

    def values(self, points) -> np.ndarray:
        out = self.base.values(points)
        for inc in self.increments:
            out += inc.values(points)
        return out

    def derivative_values(self, points, lam: MultiIndex) -> np.ndarray:
        out = self.base.derivative_values(points, lam)
        for inc in self.increments:
            out += inc.derivative_values(points, lam)
        return out

    def as_field(self, name: str = "extension") -> ScalarField:
        def deriv(lam: tuple[int, ...]):
            lam_m = MultiIndex(lam)
            return lambda pts: self.derivative_values(pts, lam_m)

        return ScalarField(self.values, self.dim, deriv, name=name)

    def support_box(self) -> tuple[tuple[float, float], ...]:
        lo = [math.inf] * self.dim
        hi = [-math.inf] * self.dim
        for part in [self.base, *self.increments]:
            for nu in part.cells:
                for j in range(self.dim):
                    lo[j] = min(lo[j], (nu[j]) * 2.0 ** -part.kappa[j])
                    hi[j] = max(hi[j], (nu[j] + part.m[j] + 1) * 2.0 ** -part.kappa[j])
        return tuple(zip(lo, hi))


def extend(f, domain: DomainSpec, profile: AnisoProfile, m: MultiIndex, k_max: int,
           certification) -> ExtensionResult:
    """Truncated extension series: base stage plus all telescoping increments.

    Restriction to the domain equals the stage-k_max interpolant there; the
    series is clipped at k_max and the discarded tail is not estimated.
    """
    if certification is None or not getattr(certification, "passes", False):
        raise CertificationError(
            "domain certification missing or failing; run verify_alpha_type first"
        )
    k0 = certification.K0
    if k_max < k0:
        raise ValueError(f"k_max={k_max} below the certified base stage {k0}")
    base = quasi_interpolant(f, domain, profile, m, k0)
    increments = [telescope(f, domain, profile, m, k) for k in range(k0 + 1, k_max + 1)]
    return ExtensionResult(base, increments, k0, k_max)


def k_functional(f, domain: DomainSpec, profile: AnisoProfile, lam: MultiIndex,
                 p: float, q: float, t: float, cfg: QuadratureConfig | None = None,
                 shift_constant: float = 1.0) -> float:
    """Scaled sum of averaged moduli at per-axis scales t^(1/alpha_j).

    ``shift_constant`` multiplies the modulus argument; it stands in for the
    non-explicit stencil constant and is reported alongside experiment output.
    """
    from .spaces import averaged_modulus

    if not 0 < t <= 1:
        raise ValueError("t must be in (0, 1]")
    cfg = cfg or QuadratureConfig()
    field = as_field(f, domain.dim)
    gap = max(0.0, 1.0 / p - (0.0 if math.isinf(q) else 1.0 / q))
    expo = -(sum((lam[j] + gap) / profile.alpha[j] for j in range(profile.dim))) - 1.0
    total = 0.0
    for j in range(profile.dim):
        scale = shift_constant * t ** (1.0 / profile.alpha[j])
        total += averaged_modulus(field, domain, j, profile.l[j], scale, p, cfg)
    return t**expo * total


def stepped_project(f, domain: DomainSpec, profile: AnisoProfile, degrees: MultiIndex,
                    k: int) -> SteppedPiecewise:
    """Cellwise local projections glued by indicators (projection on the nearest interior cell)."""
    kappa = level_vector(k, profile)
    grid = _grid(domain, kappa, MultiIndex((1,) * domain.dim))
    if not grid.interior:
        raise LevelTooCoarseError(
            f"stage {k} (level {kappa.kappa.entries}) has no interior cell"
        )
    field = as_field(f, domain.dim)
    projections: dict[tuple, PolyCell] = {}
    cells = {}
    for nu in grid.cell_active:
        target = nearest_interior(grid, nu)
        proj = projections.get(target.entries)
        if proj is None:
            proj = project_L2(field, grid.cell_frame(target), degrees)
            projections[target.entries] = proj
        cells[nu] = proj.reframe(grid.cell_frame(nu))
    return SteppedPiecewise(kappa, degrees, cells)


def regrid_stepped(f: SteppedPiecewise, target_level: LevelVector,
                   domain: DomainSpec) -> SteppedPiecewise:
    """Restriction of a coarse stepped element to the finer active cells (parent copy)."""
    if not f.kappa <= target_level:
        raise ValueError(
            f"target level {target_level.kappa.entries} must refine {f.kappa.kappa.entries}"
        )
    if f.kappa.kappa == target_level.kappa:
        return f
    grid = _grid(domain, target_level, MultiIndex((1,) * domain.dim))
    steps = tuple(kt - ks for ks, kt in zip(f.kappa, target_level))
    cells = {}
    for nu in grid.cell_active:
        parent = SignedIndex(tuple(n >> s for n, s in zip(nu, steps)))
        cells[nu] = f.cells[parent].reframe(grid.cell_frame(nu))
    return SteppedPiecewise(target_level, f.degrees, cells)


def v_step(f, domain: DomainSpec, profile: AnisoProfile, degrees: MultiIndex,
           k: int) -> SteppedPiecewise:
    """Stage-k stepped projection minus the re-gridded stage-(k-1) one."""
    if k < 1:
        raise ValueError("needs k >= 1")
    fine = stepped_project(f, domain, profile, degrees, k)
    coarse = stepped_project(f, domain, profile, degrees, k - 1)
    lifted = regrid_stepped(coarse, fine.kappa, domain)
    return fine.combine(lifted, factor=-1.0)


def discretize(f: SteppedPiecewise, p: float) -> tuple[np.ndarray, float]:
    """Cell-node values (cells lexicographic, node offsets lexicographic) and the scaled norm."""
    keys = sorted(f.cells, key=lambda nu: nu.entries)
    blocks = [lagrange_iso(f.cells[nu]) for nu in keys]
    vec = np.concatenate(blocks) if blocks else np.zeros(0)
    if math.isinf(p):
        scaled = float(np.max(np.abs(vec))) if len(vec) else 0.0
    else:
        total = int(sum(f.kappa))
        scaled = float(2.0 ** (-total / p) * np.sum(np.abs(vec) ** p) ** (1.0 / p)) if len(vec) else 0.0
    return vec, scaled


# ---------------------------------------------------------------------------
# rate experiments

@dataclass
class RateReport:
    """Per-level errors with a least-squares slope in log2 coordinates."""

    ks: list[int]
    errors: list[float]
    predicted_exponent: float
    condition_ok: bool
    condition_value: float
    ns: list[int] | None = None
    against: str = "k"
    shift_constant: float = 1.0
    fitted_slope: float | None = None
    fit_residual: float | None = None
    exact: bool = False

    def fit(self) -> None:
        xs = np.asarray(self.ks, dtype=float) if self.against == "k" else np.log2(
            np.asarray(self.ns, dtype=float)
        )
        errs = np.asarray(self.errors, dtype=float)
        keep = errs > 1e3 * np.finfo(float).eps
        if keep.sum() < 2:
            self.exact = True
            return
        ys = np.log2(errs[keep])
        coef = np.polyfit(xs[keep], ys, 1)
        self.fitted_slope = float(coef[0])
        self.fit_residual = float(np.sqrt(np.mean((np.polyval(coef, xs[keep]) - ys) ** 2)))

    def rows(self) -> list[dict]:
        out = []
        for i, (k, err) in enumerate(zip(self.ks, self.errors)):
            row = {
                "k": k,
                "error": err,
                "log2_error": math.log2(err) if err > 0 else float("-inf"),
                "predicted_exponent": self.predicted_exponent,
                "fitted_slope": self.fitted_slope if self.fitted_slope is not None else float("nan"),
            }
            if self.ns is not None:
                row["n"] = self.ns[i]
            out.append(row)
        return out


def rate_condition(profile: AnisoProfile, lam: MultiIndex, p: float, q: float) -> float:
    gap = max(0.0, 1.0 / p - (0.0 if math.isinf(q) else 1.0 / q))
    return 1.0 - sum((lam[j] + gap) / profile.alpha[j] for j in range(profile.dim))


def _error_norm(target: ScalarField, approx_vals: Callable[[np.ndarray], np.ndarray],
                domain: DomainSpec, q: float, cfg: QuadratureConfig,
                level) -> float:
    diff = ScalarField(lambda pts: target(pts) - approx_vals(pts), domain.dim)
    return lp_norm(diff, domain, q, cfg, level=level)


def rate_experiment(f, domain: DomainSpec, profile: AnisoProfile, lam: MultiIndex,
                    p: float, q: float, operator: str, ks: Sequence[int],
                    m: MultiIndex | None = None, cfg: QuadratureConfig | None = None) -> RateReport:
    """Measured decay of the derivative error of the chosen operator family.

    ``operator`` picks the blended interpolant ("E") or the stepped projection
    of the already-differentiated field ("U").  Errors are integrated on a grid
    two dyadic levels finer than the operator level of each stage.
    """
    cfg = cfg or QuadratureConfig()
    field = as_field(f, domain.dim)
    m = m if m is not None else default_blend_smoothness(profile)
    cond = rate_condition(profile, lam, p, q)
    target = field.diff(lam.entries)
    errors = []
    for k in ks:
        kappa = level_vector(k, profile)
        level = tuple(kj + 2 for kj in kappa)
        if operator == "E":
            op = quasi_interpolant(field, domain, profile, m, k)
            vals = lambda pts, op=op: op.derivative_values(pts, lam)
        elif operator == "U":
            degrees = MultiIndex(tuple(max(lj - 1 - lam[j], 0) for j, lj in enumerate(profile.l)))
            op = stepped_project(target, domain, profile, degrees, k)
            vals = op.values
        else:
            raise ValueError("operator must be 'E' or 'U'")
        errors.append(_error_norm(target, vals, domain, q, cfg, level))
    report = RateReport(list(ks), errors, predicted_exponent=-cond,
                        condition_ok=cond > 0, condition_value=cond)
    report.fit()
    return report
