from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from anisoapprox.domain import (
    AlphaTypeReport,
    DomainSpec,
    LevelTooCoarseError,
    classify_cells,
    find_chain,
    l_shape,
    nearest_interior,
    two_squares,
    unit_cube,
    verify_alpha_type,
)
from anisoapprox.grid import AnisoProfile, LevelVector, MultiIndex, SignedIndex

M11 = MultiIndex((1, 1))
LV = lambda *k: LevelVector(MultiIndex(tuple(k)))


def test_parse_text_config():
    spec = DomainSpec.from_text(
        """
        # the L-shape as two boxes
        0 0   1/2 1
        0.5 0  1 0.5
        """
    )
    assert spec.dim == 2
    assert spec.boxes[0][1] == (Fraction(1, 2), Fraction(1))
    assert spec.contains((0.25, 0.9))
    assert spec.contains((0.5, 0.25))  # seam between the two boxes
    assert not spec.contains((0.75, 0.75))
    assert not spec.contains((0.5, 0.75))  # true boundary


def test_unit_square_classification_level_one():
    grid = classify_cells(unit_cube(2), LV(1, 1), M11, closure_mode=False)
    assert {nu.entries for nu in grid.interior} == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert {nu.entries for nu in grid.cell_active} == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_unit_square_closed_mode():
    grid1 = classify_cells(unit_cube(2), LV(1, 1), M11, closure_mode=True)
    assert grid1.interior == []
    grid2 = classify_cells(unit_cube(2), LV(2, 2), M11, closure_mode=True)
    assert {nu.entries for nu in grid2.interior} == {(i, j) for i in (1, 2) for j in (1, 2)}


def test_blend_active_superset():
    grid = classify_cells(l_shape(), LV(2, 2), MultiIndex((2, 2)))
    interior = {nu.entries for nu in grid.interior}
    cells = {nu.entries for nu in grid.cell_active}
    blends = {nu.entries for nu in grid.blend_active}
    assert interior <= cells <= blends


def test_active_count_scaling():
    counts = []
    for k in range(1, 7):
        grid = classify_cells(l_shape(), LV(k, k), M11)
        counts.append(len(grid.cell_active) / 4.0**k)
    arr = np.array(counts)
    # |active| ~ 2^(kappa, e) * area within a stable band
    assert arr.max() / arr.min() < 3.0


def test_nearest_interior():
    grid = classify_cells(unit_cube(2), LV(2, 2), M11, closure_mode=True)
    assert nearest_interior(grid, SignedIndex((1, 1))).entries == (1, 1)
    assert nearest_interior(grid, SignedIndex((0, 0))).entries == (1, 1)
    assert nearest_interior(grid, SignedIndex((3, 0))).entries == (2, 1)


def test_nearest_interior_empty_error():
    grid = classify_cells(unit_cube(2), LV(1, 1), M11, closure_mode=True)
    with pytest.raises(LevelTooCoarseError):
        nearest_interior(grid, SignedIndex((0, 0)))


def nx_oracle_distance(grid, a, b):
    """Independent shortest-chain oracle over the interior step graph."""
    g = nx.Graph()
    nodes = [nu.entries for nu in grid.interior]
    g.add_nodes_from(nodes)
    for x in nodes:
        for j in range(len(x)):
            y = x[:j] + (x[j] + 1,) + x[j + 1 :]
            if y in set(nodes) and grid.step_box_inside_t(x, y):
                g.add_edge(x, y)
    try:
        return nx.shortest_path_length(g, a, b)
    except nx.NetworkXNoPath:
        return None


def test_chain_trivial_and_bfs_oracle():
    grid = classify_cells(unit_cube(2), LV(2, 2), M11)
    r0 = find_chain(grid, SignedIndex((1, 1)), SignedIndex((1, 1)))
    assert r0.found and r0.length == 0
    r = find_chain(grid, SignedIndex((1, 1)), SignedIndex((2, 2)))
    assert r.found and r.length == 2
    assert nx_oracle_distance(grid, (1, 1), (2, 2)) == 2
    # every step's hull must lie in the domain
    for a, b in zip(r.chain, r.chain[1:]):
        assert grid.step_box_inside(a, b)
    # direction/sign bookkeeping reconstructs the chain
    cur = list(r.chain[0].entries)
    for j, s in zip(r.directions, r.signs):
        cur[j] += s
    assert tuple(cur) == r.chain[-1].entries


def test_chain_matches_oracle_l_shape():
    grid = classify_cells(l_shape(), LV(3, 3), M11)
    rng = np.random.default_rng(4)
    nodes = [nu for nu in grid.interior]
    for _ in range(15):
        a, b = rng.choice(len(nodes), size=2, replace=False)
        rep = find_chain(grid, nodes[a], nodes[b])
        oracle = nx_oracle_distance(grid, nodes[a].entries, nodes[b].entries)
        assert rep.found == (oracle is not None)
        if rep.found:
            assert rep.length == oracle


def test_chain_absent_across_gap():
    grid = classify_cells(two_squares(), LV(1, 1), M11)
    left = SignedIndex((0, 0))
    right = SignedIndex((4, 0))
    assert grid.is_interior(left) and grid.is_interior(right)
    rep = find_chain(grid, left, right)
    assert not rep.found


def test_wide_chain_runs_at_sublevel():
    grid = classify_cells(l_shape(), LV(3, 3), M11, closure_mode=True)
    ints = [nu for nu in grid.interior]
    a = min(ints, key=lambda n: n.entries)
    b = max(ints, key=lambda n: n.entries)
    rep = find_chain(grid, a, b, sublevel=1)
    assert rep.found
    assert rep.level.kappa.entries == (4, 4)
    # every chain cell closure inside the domain
    fine = classify_cells(grid.domain, rep.level, grid.m, closure_mode=True)
    for c in rep.chain:
        assert fine.is_interior(c)


ALPHA = AnisoProfile.make(["1.5", "1.5"])


def test_alpha_type_unit_square():
    rep = verify_alpha_type(unit_cube(2), ALPHA, M11, k_max=5, mode="narrow")
    assert rep.passes and rep.K0 == 0
    # axis-step chains pay the l1 distance: ratio to the sup-distance is at most d
    assert rep.c0 <= 2.0 + 1e-12


def test_alpha_type_l_shape_both_modes():
    narrow = verify_alpha_type(l_shape(), ALPHA, M11, k_max=6, mode="narrow")
    wide = verify_alpha_type(l_shape(), ALPHA, M11, k_max=6, mode="wide")
    assert narrow.passes and wide.passes
    assert narrow.c0 is not None and np.isfinite(narrow.c0)
    assert wide.sublevel is not None and wide.sublevel <= 1


def test_alpha_type_two_squares_fails_with_witness():
    for mode in ("narrow", "wide"):
        rep = verify_alpha_type(two_squares(), ALPHA, M11, k_max=4, mode=mode)
        assert not rep.passes
        assert rep.witness is not None


def test_c0_stable_as_levels_grow():
    shallow = verify_alpha_type(l_shape(), ALPHA, M11, k_max=4, mode="narrow")
    deep = verify_alpha_type(l_shape(), ALPHA, M11, k_max=6, mode="narrow")
    assert shallow.c0 is not None and deep.c0 is not None
    assert deep.c0 <= 2 * shallow.c0 + 1e-12


def test_scaled_domain():
    spec = unit_cube(2).scaled(["2", "4"], ["1", "1"])
    assert spec.boxes[0] == ((Fraction(1), Fraction(1)), (Fraction(3), Fraction(5)))
    assert spec.contains((2.0, 3.0))


def test_slabs_merge_across_seams():
    spec = DomainSpec.from_text("0 0 1/2 1\n1/2 0 1 1")  # unit square split in two
    slabs = spec.slabs(0)
    assert len(slabs) == 1
    _, intervals = slabs[0]
    assert intervals == [(Fraction(0), Fraction(1))]


def test_draw_points_inside():
    rng = np.random.default_rng(0)
    pts = l_shape().draw_points(rng, 200)
    assert all(l_shape().contains(p) for p in pts)
