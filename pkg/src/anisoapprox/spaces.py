"""Numerical L_p norms, finite differences, moduli of continuity, smoothness norms.

The averaged modulus follows the L_p-mean-over-shifts definition: the outer
shift integral runs over |xi| <= t with the 1/(2t) prefactor, the inner norm is
taken over the shrunk domain on which the whole difference segment stays
inside.  Shrunk domains of box unions are handled exactly through per-slab
slice intervals.  The sup-form modulus maximizes over a finite shift grid and
is therefore a lower approximation of the essential sup; every inequality test
built on it points the direction a lower approximation cannot break.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .domain import DomainSpec
from .grid import AnisoProfile, MultiIndex, binomial
from .polyspace import gauss_01


class NonFiniteSampleError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs for every quadrature-backed quantity in this module."""

    nodes_per_axis: int = 8
    level: int = 4                # dyadic cell level of the integration grid
    shift_nodes: int = 16         # Gauss nodes for the shift integral (split at 0)
    sup_shifts: int = 32          # shift samples for the sup-form modulus
    i_min: int = -2               # dyadic t-grid: t = 2^-i, i = i_min..i_max
    i_max: int = 10

    def __post_init__(self) -> None:
        if self.nodes_per_axis < 2 or self.shift_nodes < 2 or self.sup_shifts < 2:
            raise ValueError("quadrature counts must be >= 2")

    def with_level(self, level: int) -> "QuadratureConfig":
        return replace(self, level=level)


@dataclass(frozen=True)
class SpaceParams:
    p: float
    theta: float
    profile: AnisoProfile

    def __post_init__(self) -> None:
        if not 1 <= self.p:
            raise ValueError("p must be >= 1")
        if not 1 <= self.theta:
            raise ValueError("theta must be >= 1")
        if math.isinf(self.p):
            raise ValueError("p = inf not supported for smoothness norms")


@dataclass
class ScalarField:
    """Point evaluator with optional analytic derivatives and a smoothness tag."""

    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    derivative_fn: Callable[[tuple[int, ...]], Callable[[np.ndarray], np.ndarray]] | None = None
    smoothness: str = "smooth"
    name: str = "field"

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        return np.asarray(self.fn(pts), dtype=float)

    def diff(self, lam: MultiIndex | Sequence[int]) -> "ScalarField":
        lam_t = tuple(lam)
        if all(v == 0 for v in lam_t):
            return self
        if self.derivative_fn is None:
            raise ValueError(f"field {self.name!r} has no derivative evaluator")
        fn = self.derivative_fn(lam_t)
        return ScalarField(fn, self.dim, self.derivative_fn and self._shifted_derivs(lam_t),
                           self.smoothness, f"{self.name}^({lam_t})")

    def _shifted_derivs(self, base: tuple[int, ...]):
        outer = self.derivative_fn

        def shifted(lam: tuple[int, ...]):
            return outer(tuple(a + b for a, b in zip(base, lam)))

        return shifted


def as_field(obj, dim: int, name: str = "field") -> ScalarField:
    if isinstance(obj, ScalarField):
        return obj
    return ScalarField(obj, dim, name=name)


# ---------------------------------------------------------------------------
# integration grids

def _level_tuple(level, dim: int) -> tuple[int, ...]:
    if isinstance(level, (tuple, list)):
        return tuple(int(v) for v in level)
    return (int(level),) * dim


@lru_cache(maxsize=64)
def _domain_grid(domain: DomainSpec, level: tuple, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss points/weights per dyadic-sized piece of each elementary box."""
    g, gw = gauss_01(nodes)
    pts_all = []
    wts_all = []
    for lo, hi in domain.elementary_boxes():
        axes = []
        axws = []
        for j, (a, b) in enumerate(zip(lo, hi)):
            n = max(1, round(float(b - a) * 2 ** level[j]))
            width = (float(b) - float(a)) / n
            offs = float(a) + width * np.arange(n)
            x = (offs[:, None] + width * g[None, :]).ravel()
            w = np.tile(gw * width, n)
            axes.append(x)
            axws.append(w)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts_all.append(np.stack([m.ravel() for m in mesh], axis=1))
        wmesh = np.meshgrid(*axws, indexing="ij")
        wts_all.append(np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1))
    return np.concatenate(pts_all), np.concatenate(wts_all)


def domain_quadrature(domain: DomainSpec, cfg: QuadratureConfig,
                      level=None) -> tuple[np.ndarray, np.ndarray]:
    lv = _level_tuple(cfg.level if level is None else level, domain.dim)
    return _domain_grid(domain, lv, cfg.nodes_per_axis)


@lru_cache(maxsize=64)
def _domain_sup_grid(domain: DomainSpec, level: tuple, nodes: int) -> np.ndarray:
    """Endpoint-including sample grid for sup norms (boundary suprema matter)."""
    pts_all = []
    for lo, hi in domain.elementary_boxes():
        axes = []
        for j, (a, b) in enumerate(zip(lo, hi)):
            n = max(1, round(float(b - a) * 2 ** level[j]))
            axes.append(np.linspace(float(a), float(b), n * max(nodes - 1, 1) + 1))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts_all.append(np.stack([m.ravel() for m in mesh], axis=1))
    return np.concatenate(pts_all)


def lp_norm(f, domain: DomainSpec, p: float, cfg: QuadratureConfig | None = None,
            level: int | None = None) -> float:
    """L_p norm over the domain by tensor Gauss quadrature (max over nodes for p=inf)."""
    cfg = cfg or QuadratureConfig()
    field = as_field(f, domain.dim)
    if math.isinf(p):
        lv = _level_tuple(cfg.level if level is None else level, domain.dim)
        pts = _domain_sup_grid(domain, lv, cfg.nodes_per_axis)
        vals = field(pts)
        if not np.all(np.isfinite(vals)):
            where = pts[~np.isfinite(vals)][0]
            raise NonFiniteSampleError(f"non-finite field sample at {tuple(where)}")
        return float(np.max(np.abs(vals)))
    pts, wts = domain_quadrature(domain, cfg, level)
    vals = field(pts)
    if not np.all(np.isfinite(vals)):
        where = pts[~np.isfinite(vals)][0]
        raise NonFiniteSampleError(f"non-finite field sample at {tuple(where)}")
    return float(np.sum(wts * np.abs(vals) ** p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# finite differences

def finite_difference(f, h: Sequence[float], l: int, x: Sequence[float],
                      domain: DomainSpec | None = None) -> float:
    """l-th forward difference with step vector h at the point x."""
    field = as_field(f, len(tuple(x)))
    h_arr = np.asarray(h, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    pts = x_arr[None, :] + np.arange(l + 1)[:, None] * h_arr[None, :]
    if domain is not None:
        ok = domain.contains_many(pts)
        if not ok.all():
            bad = pts[~ok][0]
            raise ValueError(f"difference evaluation point {tuple(bad)} outside the domain")
    vals = field(pts)
    signs = np.array([binomial(l, i) * (-1) ** (l - i) for i in range(l + 1)], dtype=float)
    return float(signs @ vals)


def _difference_batch(field: ScalarField, pts: np.ndarray, j: int, xi: float, l: int) -> np.ndarray:
    """Vectorized l-th difference along axis j at all points."""
    acc = np.zeros(len(pts))
    for i in range(l + 1):
        shifted = pts.copy()
        shifted[:, j] += i * xi
        acc += binomial(l, i) * (-1) ** (l - i) * field(shifted)
    return acc


@lru_cache(maxsize=256)
def _slab_cache(domain: DomainSpec, j: int):
    return domain.slabs(j)


def _shrunk_quadrature(domain: DomainSpec, j: int, shrink: float, cfg: QuadratureConfig,
                       level: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature over {x in D : segment [x, x + shrink*e_j] inside D} (shrink may be < 0)."""
    lv = _level_tuple(cfg.level if level is None else level, domain.dim)
    g, gw = gauss_01(cfg.nodes_per_axis)
    d = domain.dim
    other = [a for a in range(d) if a != j]
    pts_all, wts_all = [], []
    for footprint, intervals in _slab_cache(domain, j):
        axes: list[np.ndarray] = [None] * d
        axws: list[np.ndarray] = [None] * d
        for ax, (a, b) in zip(other, footprint):
            n = max(1, round(float(b - a) * 2 ** lv[ax]))
            width = (float(b) - float(a)) / n
            offs = float(a) + width * np.arange(n)
            axes[ax] = (offs[:, None] + width * g[None, :]).ravel()
            axws[ax] = np.tile(gw * width, n)
        segs_x, segs_w = [], []
        for a, b in intervals:
            lo = float(a) + max(-shrink, 0.0)
            hi = float(b) - max(shrink, 0.0)
            if hi <= lo:
                continue
            n = max(1, round((hi - lo) * 2 ** lv[j]))
            width = (hi - lo) / n
            offs = lo + width * np.arange(n)
            segs_x.append((offs[:, None] + width * g[None, :]).ravel())
            segs_w.append(np.tile(gw * width, n))
        if not segs_x:
            continue
        axes[j] = np.concatenate(segs_x)
        axws[j] = np.concatenate(segs_w)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts_all.append(np.stack([m.ravel() for m in mesh], axis=1))
        wmesh = np.meshgrid(*axws, indexing="ij")
        wts_all.append(np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1))
    if not pts_all:
        return np.empty((0, d)), np.empty(0)
    return np.concatenate(pts_all), np.concatenate(wts_all)


def _diff_norm_pow(field: ScalarField, domain: DomainSpec, j: int, l: int, xi: float,
                   p: float, cfg: QuadratureConfig, level: int | None = None) -> float:
    """integral over D_{l xi e_j} of |Delta^l_{xi e_j} f|^p (max for p = inf)."""
    pts, wts = _shrunk_quadrature(domain, j, l * xi, cfg, level)
    if len(pts) == 0:
        return 0.0
    diffs = _difference_batch(field, pts, j, xi, l)
    if math.isinf(p):
        return float(np.max(np.abs(diffs)))
    return float(np.sum(wts * np.abs(diffs) ** p))


def averaged_modulus(f, domain: DomainSpec, j: int, l: int, t: float, p: float,
                     cfg: QuadratureConfig | None = None, level: int | None = None) -> float:
    """L_p-averaged modulus of order l along axis j at scale t."""
    if t <= 0:
        raise ValueError("t must be > 0")
    if math.isinf(p):
        raise ValueError("averaged modulus needs p < inf")
    cfg = cfg or QuadratureConfig()
    field = as_field(f, domain.dim)
    # the inner norm vanishes once the segment outgrows the axis extent
    xi_max = min(t, float(domain.axis_extent(j)) / l)
    half = max(cfg.shift_nodes // 2, 2)
    g, gw = gauss_01(half)
    total = 0.0
    for sign in (-1.0, 1.0):
        xis = sign * xi_max * g
        for xi, w in zip(xis, gw * xi_max):
            total += w * _diff_norm_pow(field, domain, j, l, float(xi), p, cfg, level)
    return float((total / (2.0 * t)) ** (1.0 / p))


def sup_modulus(f, domain: DomainSpec, j: int, l: int, t: float, p: float,
                cfg: QuadratureConfig | None = None, level: int | None = None) -> float:
    """Sup-form modulus over a finite shift grid (a lower approximation)."""
    if t <= 0:
        raise ValueError("t must be > 0")
    cfg = cfg or QuadratureConfig()
    field = as_field(f, domain.dim)
    xi_max = min(t, float(domain.axis_extent(j)) / l)
    half = max(cfg.sup_shifts // 2, 1)
    shifts = xi_max * (np.arange(1, half + 1) / half)
    best = 0.0
    for xi in shifts:
        for s in (-xi, xi):
            v = _diff_norm_pow(field, domain, j, l, float(s), p, cfg, level)
            best = max(best, v if math.isinf(p) else v ** (1.0 / p))
    return best


# ---------------------------------------------------------------------------
# smoothness norms

def _t_grid(cfg: QuadratureConfig) -> np.ndarray:
    return 2.0 ** (-np.arange(cfg.i_min, cfg.i_max + 1, dtype=float))


def nikolskii_norm(f, domain: DomainSpec, params: SpaceParams,
                   cfg: QuadratureConfig | None = None, level: int | None = None) -> float:
    """max(L_p norm, per-axis sup over a dyadic t-grid of t^-alpha_j * averaged modulus)."""
    cfg = cfg or QuadratureConfig()
    field = as_field(f, domain.dim)
    l = params.profile.l
    out = lp_norm(field, domain, params.p, cfg, level)
    for j in range(domain.dim):
        aj = params.profile.alpha[j]
        for t in _t_grid(cfg):
            om = averaged_modulus(field, domain, j, l[j], float(t), params.p, cfg, level)
            out = max(out, float(t) ** (-aj) * om)
    return out


def besov_norm(f, domain: DomainSpec, params: SpaceParams,
               cfg: QuadratureConfig | None = None, level: int | None = None) -> float:
    """Averaged-modulus Besov norm; theta = inf routes to the sup form."""
    if math.isinf(params.theta):
        return nikolskii_norm(f, domain, params, cfg, level)
    cfg = cfg or QuadratureConfig()
    field = as_field(f, domain.dim)
    l = params.profile.l
    theta = params.theta
    out = lp_norm(field, domain, params.p, cfg, level)
    ts = _t_grid(cfg)
    ln2 = math.log(2.0)
    for j in range(domain.dim):
        aj = params.profile.alpha[j]
        oms = np.array(
            [averaged_modulus(field, domain, j, l[j], float(t), params.p, cfg, level) for t in ts]
        )
        integral = float(np.sum(ln2 * ts ** (-theta * aj) * oms**theta))
        # analytic tail above the grid: the modulus decays exactly like t^(-1/p) there
        t_ref, om_ref = float(ts[0]), float(oms[0])
        integral += om_ref**theta * t_ref ** (-theta * aj) / (theta * (aj + 1.0 / params.p))
        out = max(out, integral ** (1.0 / theta))
    return out


def w_norm(f: ScalarField, domain: DomainSpec, p: float, orders: MultiIndex,
           cfg: QuadratureConfig | None = None, level: int | None = None) -> float:
    """Sobolev-style norm: max of the L_p norm and per-axis pure-derivative norms."""
    cfg = cfg or QuadratureConfig()
    out = lp_norm(f, domain, p, cfg, level)
    for j in range(domain.dim):
        if orders[j] > 0:
            lam = tuple(orders[j] if i == j else 0 for i in range(domain.dim))
            out = max(out, lp_norm(f.diff(lam), domain, p, cfg, level))
    return out


def besov_derivative_norm(f: ScalarField, domain: DomainSpec, params: SpaceParams,
                          cfg: QuadratureConfig | None = None, level: int | None = None) -> float:
    """Classical-form norm built from sup-moduli of the highest whole derivatives.

    Uses the derivative orders strictly below alpha and sup-form moduli of
    order l_j - lbar_j; the sup-modulus part is a lower approximation.
    """
    cfg = cfg or QuadratureConfig()
    prof = params.profile
    l, lbar = prof.l, prof.lbar
    out = w_norm(f, domain, params.p, lbar, cfg, level)
    ts = _t_grid(cfg)
    ln2 = math.log(2.0)
    for j in range(domain.dim):
        beta = prof.alpha[j] - lbar[j]
        order = l[j] - lbar[j]
        lam = tuple(lbar[j] if i == j else 0 for i in range(domain.dim))
        dfield = f.diff(lam)
        oms = np.array(
            [sup_modulus(dfield, domain, j, order, float(t), params.p, cfg, level) for t in ts]
        )
        if math.isinf(params.theta):
            out = max(out, float(np.max(ts ** (-beta) * oms)))
        else:
            theta = params.theta
            integral = float(np.sum(ln2 * ts ** (-theta * beta) * oms**theta))
            # sup-modulus is constant beyond the extent: close the tail analytically
            integral += oms[0] ** theta * ts[0] ** (-theta * beta) / (theta * beta)
            out = max(out, integral ** (1.0 / theta))
    return out


# ---------------------------------------------------------------------------
# scaling maps acting on fields

def pullback_field(f: ScalarField, delta: Sequence[float], x0: Sequence[float]) -> ScalarField:
    """Field x -> f(x0 + delta x) with derivatives scaled accordingly."""
    dl = np.asarray([float(v) for v in delta])
    x0a = np.asarray([float(v) for v in x0])

    def fn(pts):
        return f(x0a + dl * np.asarray(pts, dtype=float))

    deriv = None
    if f.derivative_fn is not None:
        def deriv(lam: tuple[int, ...]):
            inner = f.derivative_fn(lam)
            scale = float(np.prod(dl ** np.asarray(lam)))

            def dfn(pts):
                return scale * np.asarray(inner(x0a + dl * np.asarray(pts, dtype=float)))

            return dfn

    return ScalarField(fn, f.dim, deriv, f.smoothness, f"{f.name}.scaled")
