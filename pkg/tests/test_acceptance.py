"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Tolerances are pinned here, not configurable.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from anisoapprox import bspline, fields
from anisoapprox.approx import (
    SteppedPiecewise,
    _grid,
    default_blend_smoothness,
    discretize,
    extend,
    quasi_interpolant,
    rate_experiment,
    stepped_project,
)
from anisoapprox.domain import DomainSpec, l_shape, two_squares, unit_cube, verify_alpha_type
from anisoapprox.grid import AnisoProfile, LevelVector, MultiIndex, SignedIndex, level_vector
from anisoapprox.polyspace import PolyCell
from anisoapprox.recovery import (
    operator_norm_proxy,
    recover,
    recovery_experiment,
    sample_points,
    stechkin_experiment,
)
from anisoapprox.spaces import (
    QuadratureConfig,
    ScalarField,
    SpaceParams,
    averaged_modulus,
    besov_derivative_norm,
    besov_norm,
    lp_norm,
    pullback_field,
)

I1, I2 = unit_cube(1), unit_cube(2)


@contextmanager
def criterion(num: int, label: str, budget_s: float):
    t0 = time.time()
    outcome = {"ok": False}
    try:
        yield outcome
        outcome["ok"] = True
    finally:
        dt = time.time() - t0
        status = "PASS" if outcome["ok"] else "FAIL"
        print(f"criterion {num:2d} [{label}]: {status} ({dt:.1f}s / budget {budget_s:.0f}s)")
        if outcome["ok"]:
            assert dt < budget_s, f"criterion {num} exceeded its runtime budget: {dt:.1f}s"


def test_criterion_01_refinement_identity():
    with criterion(1, "two-scale refinement identity", 1.0):
        rng = np.random.default_rng(101)
        for m in (1, 2, 3):
            xs = rng.uniform(-1.0, m + 2.0, size=1000)
            coeffs = bspline.refinement_coeffs(m)
            lhs = bspline.bspline_eval_many(m, xs)
            rhs = np.zeros_like(xs)
            for mu, a in enumerate(coeffs):
                rhs += float(a) * bspline.bspline_eval_many(m, 2 * xs - mu)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_criterion_02_parity_and_stencil_sums():
    with criterion(2, "parity and stencil weight sums", 1.0):
        for m in range(9):
            coeffs = bspline.refinement_coeffs(m)
            assert abs(float(sum(coeffs[0::2]) - 1)) <= 1e-14
            assert abs(float(sum(coeffs[1::2]) - 1)) <= 1e-14
        rng = np.random.default_rng(202)
        src = LevelVector(MultiIndex((0, 0)))
        for _ in range(50):
            nu = SignedIndex(tuple(int(v) for v in rng.integers(-40, 41, size=2)))
            m = int(rng.integers(0, 5))
            steps = tuple(int(v) for v in rng.integers(0, 4, size=2))
            st = bspline.subdivision_stencil(
                src, LevelVector(MultiIndex(steps)), MultiIndex((m, m)), [nu]
            )
            assert abs(float(st.weights_sum(nu) - 1)) <= 1e-14
            assert all(w > 0 for _, w in st.entries[nu])


def _setting(d: int):
    if d == 1:
        prof = AnisoProfile.make(["1.5"])
        dom = I1
        poly = fields.poly1d([1.0, 3.0])
    else:
        prof = AnisoProfile.make(["1.5", "1.5"])
        dom = I2
        poly = fields.tensor_poly(np.array([[1.0, 0.5], [3.0, -0.25]]))
    return prof, dom, poly


def test_criterion_03_partition_and_reproduction():
    with criterion(3, "partition of unity and polynomial reproduction", 30.0):
        rng = np.random.default_rng(303)
        for d in (1, 2):
            prof, dom, poly = _setting(d)
            m = default_blend_smoothness(prof)
            pts = dom.draw_points(rng, 1000)
            k = 5
            # partition of unity via the constant interpolant
            one = quasi_interpolant(fields.constant(1.0, d), dom, prof, m, k)
            assert np.max(np.abs(one.values(pts) - 1.0)) <= 1e-10
            # blended interpolant reproduction
            bp = quasi_interpolant(poly, dom, prof, m, k)
            assert np.max(np.abs(bp.values(pts) - poly(pts))) <= 1e-10
            # subdivision operator reproduction
            coarse = quasi_interpolant(poly, dom, prof, m, 3)
            lifted = bspline.subdivide(coarse, level_vector(k, prof), _grid(dom, level_vector(k, prof), m))
            assert np.max(np.abs(lifted.values(pts) - poly(pts))) <= 1e-10
            # stepped projection reproduction
            degrees = MultiIndex(tuple(lj - 1 for lj in prof.l))
            sp = stepped_project(poly, dom, prof, degrees, 4)
            assert np.max(np.abs(sp.values(pts) - poly(pts))) <= 1e-10
            # recovery reproduction (value and first derivative in 1-D)
            sk = sample_points(dom, prof, 4).fill(poly)
            rec0 = recover(sk, dom, prof, m, MultiIndex((0,) * d))
            assert np.max(np.abs(rec0(pts) - poly(pts))) <= 1e-10
            if d == 1:
                rec1 = recover(sk, dom, prof, m, MultiIndex((1,)))
                assert np.max(np.abs(rec1(pts) - 3.0)) <= 1e-10


def test_criterion_04_subdivision_reproduction():
    with criterion(4, "subdivision reproduces the coarse interpolant", 30.0):
        rng = np.random.default_rng(404)
        prof = AnisoProfile.make(["1.5", "1.5"])
        m = default_blend_smoothness(prof)
        f = fields.sin_prod([1.0, 1.0])
        for dom, k0 in ((unit_cube(2), 2), (l_shape(), 3)):
            pts = dom.draw_points(rng, 1000)
            coarse = quasi_interpolant(f, dom, prof, m, k0)
            kap = level_vector(5, prof)
            lifted = bspline.subdivide(coarse, kap, _grid(dom, kap, m))
            assert np.max(np.abs(lifted.values(pts) - coarse.values(pts))) <= 1e-10


def test_criterion_05_alpha_type_certification():
    with criterion(5, "chain/covering certification across three domains", 30.0):
        prof = AnisoProfile.make(["1.5", "1.5"])
        m = default_blend_smoothness(prof)
        results = {}
        for name, dom in (("square", unit_cube(2)), ("l_shape", l_shape()), ("gap", two_squares())):
            narrow = verify_alpha_type(dom, prof, m, k_max=6, mode="narrow")
            wide = verify_alpha_type(dom, prof, m, k_max=6, mode="wide", max_sublevel=1)
            assert narrow.passes == wide.passes, f"{name}: narrow/wide disagree"
            results[name] = (narrow, wide)
        narrow_sq, _ = results["square"]
        assert narrow_sq.passes and narrow_sq.K0 == 0
        narrow_l, wide_l = results["l_shape"]
        assert narrow_l.passes and np.isfinite(narrow_l.c0)
        assert wide_l.sublevel is not None and wide_l.sublevel <= 1
        shallow = verify_alpha_type(l_shape(), prof, m, k_max=4, mode="narrow")
        assert narrow_l.c0 <= 2 * shallow.c0 and shallow.c0 <= 2 * narrow_l.c0
        narrow_gap, wide_gap = results["gap"]
        assert not narrow_gap.passes and narrow_gap.witness is not None
        assert not wide_gap.passes and wide_gap.witness is not None


def test_criterion_06_jackson_rate():
    with criterion(6, "value-approximation rate on the square", 120.0):
        prof = AnisoProfile.make(["1.5", "1.5"])
        f = fields.sin_prod([1.0, 1.0])
        rep = rate_experiment(
            f, I2, prof, MultiIndex((0, 0)), 2.0, 2.0, "E", range(2, 9),
            cfg=QuadratureConfig(nodes_per_axis=4),
        )
        assert rep.condition_ok
        assert rep.predicted_exponent == pytest.approx(-1.0)
        assert abs(rep.fitted_slope - rep.predicted_exponent) <= 0.15 * abs(rep.predicted_exponent)


def test_criterion_07_derivative_rate():
    with criterion(7, "derivative-approximation rate in 1-D", 60.0):
        prof = AnisoProfile.make(["2"])
        f = fields.lacunary(prof, 9)
        rep = rate_experiment(
            f, I1, prof, MultiIndex((1,)), 2.0, 2.0, "E", range(2, 11),
            cfg=QuadratureConfig(nodes_per_axis=6),
        )
        assert rep.condition_ok
        assert rep.predicted_exponent == pytest.approx(-0.5)
        assert abs(rep.fitted_slope - rep.predicted_exponent) <= 0.2 * abs(rep.predicted_exponent)


def test_criterion_08_recovery_rates():
    with criterion(8, "sample-count recovery rates (1-D and 2-D)", 180.0):
        prof1 = AnisoProfile.make(["2"])
        rep1 = recovery_experiment(
            [fields.lacunary(prof1, 9)], I1, prof1, MultiIndex((1,)), 2.0, 2.0,
            range(2, 11), cfg=QuadratureConfig(nodes_per_axis=6),
        )
        assert rep1.predicted_exponent == pytest.approx(-1.0)
        assert abs(rep1.fitted_slope - rep1.predicted_exponent) <= 0.2 * abs(rep1.predicted_exponent)
        prof2 = AnisoProfile.make(["1.5", "1.5"])
        rep2 = recovery_experiment(
            [fields.lacunary(prof2, 9)], I2, prof2, MultiIndex((0, 0)), 2.0, 2.0,
            [5, 6, 7, 8, 9], cfg=QuadratureConfig(nodes_per_axis=4),
            norm_cfg=QuadratureConfig(nodes_per_axis=4, level=4, shift_nodes=8),
        )
        assert rep2.predicted_exponent == pytest.approx(-0.75)
        assert abs(rep2.fitted_slope - rep2.predicted_exponent) <= 0.2 * abs(rep2.predicted_exponent)


def test_criterion_09_stechkin_tradeoff():
    with criterion(9, "norm-budgeted differentiation tradeoff", 120.0):
        prof = AnisoProfile.make(["2"])
        lam = MultiIndex((1,))
        cfg = QuadratureConfig(nodes_per_axis=6)
        fam = [fields.lacunary(prof, 10)]
        ks = list(range(3, 14))
        proxies = {
            k: operator_norm_proxy(I1, prof, lam, 2.0, 2.0, k, n_probes=16, cfg=cfg)
            for k in ks
        }
        rhos = [proxies[k] * 1.05 for k in (4, 6, 8, 10, 12)]
        rep = stechkin_experiment(fam, I1, prof, lam, 2.0, 2.0, 2.0, rhos, ks,
                                  n_probes=16, cfg=cfg)
        assert rep.predicted_slope == pytest.approx(-1.0)
        assert len(rep.points) == 5
        assert abs(rep.fitted_slope - rep.predicted_slope) <= 0.25 * abs(rep.predicted_slope)


def test_criterion_10_discretization_equivalence():
    with criterion(10, "node-vector vs integral norm equivalence", 30.0):
        rng = np.random.default_rng(1010)
        degrees = MultiIndex((1,))
        cfg = QuadratureConfig(nodes_per_axis=8)
        for p in (1.0, 2.0, math.inf):
            ratios = []
            for k in range(7):
                kap = LevelVector(MultiIndex((k,)))
                grid = _grid(I1, kap, MultiIndex((1,)))
                for _ in range(15):
                    cells = {
                        nu: PolyCell(grid.cell_frame(nu), degrees, rng.normal(size=2))
                        for nu in grid.cell_active
                    }
                    sp = SteppedPiecewise(kap, degrees, cells)
                    _, scaled = discretize(sp, p)
                    true = lp_norm(ScalarField(sp.values, 1), I1, p, cfg, level=k + 2)
                    ratios.append(scaled / true)
            arr = np.array(ratios)
            assert arr.max() / arr.min() <= 4.0, f"p={p}: band {arr.max()/arr.min():.2f}"


def test_criterion_11_extension_stability():
    with criterion(11, "extension restriction and norm stability", 180.0):
        prof = AnisoProfile.make(["1.5", "1.5"])
        D = l_shape()
        m = default_blend_smoothness(prof)
        cert = verify_alpha_type(D, prof, m, k_max=8, mode="narrow")
        assert cert.passes
        fam = [
            fields.sin_prod([1.0, 1.0]),
            fields.gauss_bump([0.3, 0.3], 0.4, 2),
            fields.lacunary(prof, 6),
            fields.sin_prod([2.0, 1.0]),
            fields.tensor_poly(np.array([[0.5, 1.0], [1.0, -0.5]])),
        ]
        params = SpaceParams(2.0, math.inf, prof)
        src_cfg = QuadratureConfig(nodes_per_axis=4, level=4, shift_nodes=8, sup_shifts=8,
                                   i_min=-1, i_max=5)
        ext_cfg = QuadratureConfig(nodes_per_axis=3, level=3, shift_nodes=8, sup_shifts=4,
                                   i_min=-1, i_max=4)
        rng = np.random.default_rng(1111)
        pts = D.draw_points(rng, 200)
        for f in fam:
            src = besov_norm(f, D, params, src_cfg)
            ratios = []
            for k_top in (4, 6, 8):
                ext = extend(f, D, prof, m, k_top, cert)
                direct = quasi_interpolant(f, D, prof, m, k_top)
                assert np.max(np.abs(ext.values(pts) - direct.values(pts))) <= 1e-10
                box = DomainSpec.make([
                    ([lo - 0.25 for lo, _ in ext.support_box()],
                     [hi + 0.25 for _, hi in ext.support_box()]),
                ])
                ratios.append(besov_derivative_norm(ext.as_field(), box, params, ext_cfg) / src)
            assert max(ratios) / min(ratios) < 2.0, f"{f.name}: spread {max(ratios)/min(ratios):.2f}"


def test_criterion_12_scaling_covariances():
    with criterion(12, "norm and modulus scaling covariances", 30.0):
        cfg = QuadratureConfig(nodes_per_axis=6, level=4, shift_nodes=12)
        rect = DomainSpec.make([([0, 0], [1, 2])])
        f = fields.sin_prod([1.0, 1.0])
        for dom in (I2, rect):
            for delta in ((2.0, 4.0), (0.5, 1.0)):
                x0 = (1.0, 1.0)
                scaled_dom = dom.scaled([str(d) for d in delta], [str(v) for v in x0])
                shift = [int(math.log2(d)) for d in delta]
                inner_level = tuple(cfg.level - s for s in shift)
                vol = float(np.prod(delta))
                for p in (1.0, 2.0):
                    lhs = lp_norm(pullback_field(f, delta, x0), dom, p, cfg)
                    rhs = vol ** (-1.0 / p) * lp_norm(f, scaled_dom, p, cfg, level=inner_level)
                    assert abs(lhs - rhs) <= 1e-6 * max(abs(lhs), abs(rhs))
                # averaged-modulus covariance along both axes
                for j in range(2):
                    t = 0.2
                    lhs = averaged_modulus(pullback_field(f, delta, x0), dom, j, 2, t, 2.0, cfg)
                    rhs = vol**-0.5 * averaged_modulus(
                        f, scaled_dom, j, 2, delta[j] * t, 2.0, cfg, level=inner_level
                    )
                    assert abs(lhs - rhs) <= 1e-6 * max(abs(lhs), abs(rhs))
