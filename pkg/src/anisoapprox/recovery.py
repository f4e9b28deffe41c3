"""Derivative recovery from point samples and the bounded-operator tradeoff experiment.

Recovery samples every interior cell on a small shifted lattice, rebuilds the
local polynomial by Lagrange interpolation, and blends the local pieces with
the spline partition of unity; differentiation then goes through the product
rule of the blended element.  The tradeoff experiment picks, for each norm
budget, the finest stage whose operator-norm proxy fits the budget and
measures the worst normalized error there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .approx import (
    BlendedPiecewise,
    RateReport,
    _grid,
    default_blend_smoothness,
    quasi_interpolant,
    rate_condition,
)
from .domain import DomainSpec, LevelTooCoarseError, nearest_interior
from .grid import AnisoProfile, LevelVector, MultiIndex, ScaleMap, SignedIndex, index_range, level_vector
from .polyspace import PolyCell, lagrange_from_values
from .spaces import QuadratureConfig, ScalarField, as_field, lp_norm, nikolskii_norm, SpaceParams


@dataclass
class SampleSet:
    """Sampling lattice: per interior cell, a shifted sub-grid strictly inside it."""

    kappa: LevelVector
    degrees: MultiIndex          # per-axis lattice degree (one less than the counts)
    cells: list[SignedIndex]     # interior cells, lexicographic
    nodes: np.ndarray            # (n, d), cell-major then offset-lexicographic
    values: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def block(self) -> int:
        return int(np.prod([dj + 1 for dj in self.degrees]))

    def fill(self, f) -> "SampleSet":
        field = as_field(f, self.kappa.dim)
        return SampleSet(self.kappa, self.degrees, self.cells, self.nodes, field(self.nodes))

    def cell_frame(self, nu: SignedIndex) -> ScaleMap:
        from fractions import Fraction

        d = self.kappa.dim
        l = [dj + 1 for dj in self.degrees]
        x0 = tuple(
            Fraction(nu[j], 2 ** self.kappa[j]) + Fraction(1, 4 * 2 ** self.kappa[j])
            for j in range(d)
        )
        delta = tuple(Fraction(1, 2 * l[j] * 2 ** self.kappa[j]) for j in range(d))
        return ScaleMap(delta, x0)


def sample_points(domain: DomainSpec, profile: AnisoProfile, k: int) -> SampleSet:
    """Deterministic node lattice over the interior cells at stage k.

    Each interior cell contributes prod_j l_j nodes at offsets
    2^-kappa (nu + e/4 + mu/(2l)); the total count matches the per-cell
    polynomial dimension.
    """
    kappa = level_vector(k, profile)
    grid = _grid(domain, kappa, MultiIndex((1,) * domain.dim))
    if not grid.interior:
        raise LevelTooCoarseError(f"stage {k}: no interior cell to sample")
    l = profile.l
    degrees = MultiIndex(tuple(lj - 1 for lj in l))
    cells = sorted(grid.interior, key=lambda nu: nu.entries)
    offsets = index_range(degrees)
    nodes = []
    for nu in cells:
        for mu in offsets:
            nodes.append(
                [
                    2.0 ** -kappa[j] * (nu[j] + 0.25 + 0.5 * mu[j] / l[j])
                    for j in range(domain.dim)
                ]
            )
    return SampleSet(kappa, degrees, cells, np.array(nodes))


def recovery_blend(samples: SampleSet, domain: DomainSpec, profile: AnisoProfile,
                   m: MultiIndex) -> BlendedPiecewise:
    """The blended element behind the recovery rule (linear in the sample values)."""
    if samples.values is None:
        raise ValueError("sample set has no values; call SampleSet.fill first")
    if len(samples.values) != samples.n:
        absent = samples.nodes[len(samples.values):]
        preview = ", ".join(str(tuple(p)) for p in absent[:5])
        more = "" if len(absent) <= 5 else f" (+{len(absent) - 5} more)"
        raise ValueError(f"sample set incomplete; absent nodes: {preview}{more}")
    kappa = samples.kappa
    grid = _grid(domain, kappa, m)
    block = samples.block
    local: dict[tuple, PolyCell] = {}
    for i, nu in enumerate(samples.cells):
        vals = samples.values[i * block : (i + 1) * block]
        local[nu.entries] = lagrange_from_values(vals, samples.degrees, samples.cell_frame(nu))
    cells = {}
    for nu in grid.blend_active:
        target = nearest_interior(grid, nu)
        cells[nu] = local[target.entries].reframe(grid.cell_frame(nu))
    return BlendedPiecewise(kappa, m, samples.degrees, cells)


def recover(samples: SampleSet, domain: DomainSpec, profile: AnisoProfile,
            m: MultiIndex, lam: MultiIndex) -> ScalarField:
    """Linear reconstruction of the lam-derivative from the filled sample set."""
    if not lam <= m:
        raise ValueError(f"derivative order {lam.entries} exceeds blend smoothness {m.entries}")
    blended = recovery_blend(samples, domain, profile, m)
    return ScalarField(
        lambda pts: blended.derivative_values(pts, lam),
        domain.dim,
        name=f"recovered d{lam.entries}",
    )


def recovery_experiment(family: Sequence, domain: DomainSpec, profile: AnisoProfile,
                        lam: MultiIndex, p: float, q: float, ks: Sequence[int],
                        m: MultiIndex | None = None, cfg: QuadratureConfig | None = None,
                        normalize: bool = True,
                        norm_cfg: QuadratureConfig | None = None) -> RateReport:
    """Worst recovery error over a class-normalized family, per node count.

    The class sup is replaced by the documented finite family (each member
    divided by its sup-form smoothness norm when ``normalize`` is set); the
    fitted slope runs against log2(n).
    """
    cfg = cfg or QuadratureConfig()
    m = m if m is not None else default_blend_smoothness(profile)
    fields_ = [as_field(f, domain.dim) for f in family]
    weights = [1.0] * len(fields_)
    if normalize:
        params = SpaceParams(p, math.inf, profile)
        weights = [
            1.0 / nikolskii_norm(f, domain, params, norm_cfg or cfg) for f in fields_
        ]
    cond = rate_condition(profile, lam, p, q)
    sum_inv = sum(1.0 / a for a in profile.alpha)
    errors, ns = [], []
    for k in ks:
        skeleton = sample_points(domain, profile, k)
        level = tuple(kj + 2 for kj in skeleton.kappa)
        worst = 0.0
        for f, w in zip(fields_, weights):
            filled = skeleton.fill(f)
            rec = recover(filled, domain, profile, m, lam)
            target = f.diff(lam.entries)
            diff = ScalarField(lambda pts: target(pts) - rec(pts), domain.dim)
            worst = max(worst, w * lp_norm(diff, domain, q, cfg, level=level))
        errors.append(worst)
        ns.append(skeleton.n)
    report = RateReport(list(ks), errors, predicted_exponent=-cond / sum_inv,
                        condition_ok=cond > 0, condition_value=cond,
                        ns=ns, against="log2n")
    report.fit()
    return report


# ---------------------------------------------------------------------------
# bounded-operator tradeoff

@dataclass
class StechkinPoint:
    rho: float
    k: int
    norm_proxy: float
    error: float


@dataclass
class StechkinReport:
    points: list[StechkinPoint]
    gamma: float
    tau: float
    proxies: dict
    fitted_slope: float | None = None

    @property
    def predicted_slope(self) -> float:
        return -self.gamma / self.tau

    def fit(self) -> None:
        xs = np.log2([pt.rho for pt in self.points])
        ys = np.log2([pt.error for pt in self.points])
        keep = np.isfinite(ys)
        if keep.sum() < 2:
            return
        self.fitted_slope = float(np.polyfit(xs[keep], ys[keep], 1)[0])


def select_stage(proxies: dict, rho: float) -> int:
    """Largest stage whose norm proxy fits the budget."""
    admissible = [k for k, v in proxies.items() if v <= rho]
    if not admissible:
        raise ValueError(f"no stage has operator-norm proxy within the budget {rho}")
    return max(admissible)


def _probe_family(domain: DomainSpec, profile: AnisoProfile, k: int, count: int,
                  rng: np.random.Generator) -> list[ScalarField]:
    """Tensor trigonometric modes plus random stepped polynomials at the stage level."""
    from . import fields as field_lib
    from .approx import SteppedPiecewise, _grid as grid_cache
    from .polyspace import PolyCell

    out: list[ScalarField] = []
    d = domain.dim
    a = 0
    while len(out) < count // 2:
        freqs = [2.0 ** (a % 5)] * d
        f = field_lib.sin_prod(freqs, d)
        out.append(f)
        a += 1
    kappa = level_vector(k, profile)
    grid = grid_cache(domain, kappa, MultiIndex((1,) * d))
    degrees = MultiIndex(tuple(lj - 1 for lj in profile.l))
    shape = tuple(dj + 1 for dj in degrees)
    while len(out) < count:
        cells = {
            nu: PolyCell(grid.cell_frame(nu), degrees, rng.normal(size=shape))
            for nu in grid.cell_active
        }
        out.append(SteppedPiecewise(kappa, degrees, cells).as_field("probe"))
    return out


def operator_norm_proxy(domain: DomainSpec, profile: AnisoProfile, lam: MultiIndex,
                        q: float, s: float, k: int, m: MultiIndex | None = None,
                        n_probes: int = 32, seed: int = 0,
                        cfg: QuadratureConfig | None = None) -> float:
    """Lower bound on the L_s -> L_q norm of the stage-k derivative rule via probes."""
    cfg = cfg or QuadratureConfig()
    m = m if m is not None else default_blend_smoothness(profile)
    rng = np.random.default_rng(seed)
    probes = _probe_family(domain, profile, k, n_probes, rng)
    kappa = level_vector(k, profile)
    level = tuple(kj + 2 for kj in kappa)
    best = 0.0
    for g in probes:
        den = lp_norm(g, domain, s, cfg, level=level)
        if den == 0:
            continue
        op = quasi_interpolant(g, domain, profile, m, k)
        num = lp_norm(
            ScalarField(lambda pts: op.derivative_values(pts, lam), domain.dim),
            domain, q, cfg, level=level,
        )
        best = max(best, num / den)
    return best


def stechkin_experiment(family: Sequence, domain: DomainSpec, profile: AnisoProfile,
                        lam: MultiIndex, p: float, q: float, s: float,
                        rhos: Sequence[float], ks: Sequence[int],
                        m: MultiIndex | None = None, n_probes: int = 32, seed: int = 0,
                        cfg: QuadratureConfig | None = None,
                        norm_cfg: QuadratureConfig | None = None) -> StechkinReport:
    """Error of the best norm-budgeted derivative rule, one point per budget.

    For each budget the finest stage whose operator-norm proxy fits is
    selected; the reported error is the worst normalized-family error of that
    stage, and the slope against the budget compares to -gamma/tau.
    """
    cfg = cfg or QuadratureConfig()
    m = m if m is not None else default_blend_smoothness(profile)
    gamma = rate_condition(profile, lam, p, q)
    gap_sq = max(0.0, (1.0 / s if not math.isinf(s) else 0.0) - (0.0 if math.isinf(q) else 1.0 / q))
    tau = sum((lam[j] + gap_sq) / profile.alpha[j] for j in range(profile.dim))
    if gamma <= 0:
        raise ValueError(
            "rate condition violated: 1 - sum_j (lam_j + (1/p-1/q)_+)/alpha_j must be positive; "
            f"got {gamma:.4f}"
        )
    if tau <= 0:
        raise ValueError(
            "norm-growth condition violated: sum_j (lam_j + (1/s-1/q)_+)/alpha_j must be positive; "
            f"got {tau:.4f}"
        )
    if p < s:
        embed = 1.0 - sum((1.0 / p - 1.0 / s) / a for a in profile.alpha)
        if embed <= 0:
            raise ValueError(
                "embedding condition violated: 1 - sum_j (1/p-1/s)/alpha_j must be positive; "
                f"got {embed:.4f}"
            )
    fields_ = [as_field(f, domain.dim) for f in family]
    params = SpaceParams(p, math.inf, profile)
    weights = [1.0 / nikolskii_norm(f, domain, params, norm_cfg or cfg) for f in fields_]
    proxies = {
        k: operator_norm_proxy(domain, profile, lam, q, s, k, m, n_probes, seed, cfg)
        for k in ks
    }
    errors_at_k: dict[int, float] = {}
    points = []
    for rho in rhos:
        k = select_stage(proxies, rho)
        if k not in errors_at_k:
            level = tuple(kj + 2 for kj in level_vector(k, profile))
            worst = 0.0
            for f, w in zip(fields_, weights):
                op = quasi_interpolant(f, domain, profile, m, k)
                target = f.diff(lam.entries)
                diff = ScalarField(
                    lambda pts: target(pts) - op.derivative_values(pts, lam), domain.dim
                )
                worst = max(worst, w * lp_norm(diff, domain, q, cfg, level=level))
            errors_at_k[k] = worst
        points.append(StechkinPoint(float(rho), k, proxies[k], errors_at_k[k]))
    report = StechkinReport(points, gamma, tau, proxies)
    report.fit()
    return report
