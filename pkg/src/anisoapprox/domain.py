"""Domain geometry on finite unions of axis-aligned boxes.

All cell/box classifications are exact: box corners are rationals, dyadic cells
have rational corners, and the domain is canonically decomposed into a grid of
elementary boxes cut at every corner coordinate.  The domain itself is the
interior of the closure of the box union, so seams between touching boxes
belong to it.
"""

from __future__ import annotations

import bisect
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .grid import (
    MAX_DIM,
    AnisoProfile,
    LevelVector,
    MultiIndex,
    ScaleMap,
    SignedIndex,
    level_vector,
)


class LevelTooCoarseError(ValueError):
    """No dyadic cell of the requested level fits inside the domain."""


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(float(v))


@dataclass(frozen=True)
class DomainSpec:
    """Bounded domain: interior of the closure of a finite union of open boxes."""

    boxes: tuple[tuple[tuple[Fraction, ...], tuple[Fraction, ...]], ...]

    def __post_init__(self) -> None:
        if not self.boxes:
            raise ValueError("domain needs at least one box")
        d = len(self.boxes[0][0])
        if not 1 <= d <= MAX_DIM:
            raise ValueError(f"dimension must be 1..{MAX_DIM}")
        for lo, hi in self.boxes:
            if len(lo) != d or len(hi) != d:
                raise ValueError("box dimension mismatch")
            if any(a >= b for a, b in zip(lo, hi)):
                raise ValueError(f"degenerate box {lo}..{hi}")

    @classmethod
    def make(cls, boxes: Iterable[tuple[Sequence, Sequence]]) -> "DomainSpec":
        return cls(tuple((tuple(_frac(a) for a in lo), tuple(_frac(b) for b in hi)) for lo, hi in boxes))

    @classmethod
    def from_text(cls, text: str) -> "DomainSpec":
        """One box per line: d lower coords then d upper coords; '#' starts a comment."""
        boxes = []
        d = None
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            vals = [Fraction(tok) for tok in line.split()]
            if len(vals) % 2 != 0:
                raise ValueError(f"line {ln}: expected an even number of coordinates")
            half = len(vals) // 2
            if d is None:
                d = half
            elif half != d:
                raise ValueError(f"line {ln}: dimension {half} != {d}")
            boxes.append((tuple(vals[:half]), tuple(vals[half:])))
        if not boxes:
            raise ValueError("no boxes found in domain file")
        return cls(tuple(boxes))

    @classmethod
    def load(cls, path) -> "DomainSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @property
    def dim(self) -> int:
        return len(self.boxes[0][0])

    @cached_property
    def breaks(self) -> tuple[tuple[Fraction, ...], ...]:
        out = []
        for j in range(self.dim):
            vals = sorted({b[0][j] for b in self.boxes} | {b[1][j] for b in self.boxes})
            out.append(tuple(vals))
        return tuple(out)

    @cached_property
    def inside(self) -> np.ndarray:
        """Boolean grid over elementary cells: True where the cell lies in some box."""
        shape = tuple(len(br) - 1 for br in self.breaks)
        grid = np.zeros(shape, dtype=bool)
        for lo, hi in self.boxes:
            ranges = []
            for j in range(self.dim):
                br = self.breaks[j]
                i0 = br.index(lo[j])
                i1 = br.index(hi[j])
                ranges.append(slice(i0, i1))
            grid[tuple(ranges)] = True
        return grid

    @cached_property
    def span(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return tuple((br[0], br[-1]) for br in self.breaks)

    def axis_extent(self, j: int) -> Fraction:
        return self.span[j][1] - self.span[j][0]

    @cached_property
    def volume(self) -> Fraction:
        total = Fraction(0)
        for idx in np.argwhere(self.inside):
            v = Fraction(1)
            for j, i in enumerate(idx):
                v *= self.breaks[j][i + 1] - self.breaks[j][i]
            total += v
        return total

    def elementary_boxes(self) -> list[tuple[tuple[Fraction, ...], tuple[Fraction, ...]]]:
        out = []
        for idx in np.argwhere(self.inside):
            lo = tuple(self.breaks[j][i] for j, i in enumerate(idx))
            hi = tuple(self.breaks[j][i + 1] for j, i in enumerate(idx))
            out.append((lo, hi))
        return out

    # -- exact predicates ----------------------------------------------------

    def _axis_overlap(self, j: int, a: Fraction, b: Fraction, closed: bool) -> tuple[int, int]:
        """Range [i0, i1) of elementary intervals overlapping [a,b] (closed) or (a,b)."""
        br = self.breaks[j]
        if closed:
            i0 = bisect.bisect_left(br, a) - 1
            i1 = bisect.bisect_right(br, b)
        else:
            i0 = bisect.bisect_right(br, a) - 1
            i1 = bisect.bisect_left(br, b)
        return max(i0, 0), min(i1, len(br) - 1)

    def box_meets(self, lo: Sequence[Fraction], hi: Sequence[Fraction]) -> bool:
        """Closed box [lo, hi] meets the open domain."""
        ranges = []
        for j in range(self.dim):
            i0, i1 = self._axis_overlap(j, lo[j], hi[j], closed=False)
            if i0 >= i1:
                return False
            ranges.append(slice(i0, i1))
        return bool(self.inside[tuple(ranges)].any())

    def open_box_inside(self, lo: Sequence[Fraction], hi: Sequence[Fraction]) -> bool:
        """Open box (lo, hi) contained in the domain."""
        ranges = []
        for j in range(self.dim):
            if lo[j] < self.span[j][0] or hi[j] > self.span[j][1]:
                return False
            i0, i1 = self._axis_overlap(j, lo[j], hi[j], closed=False)
            if i0 >= i1:
                return False
            ranges.append(slice(i0, i1))
        return bool(self.inside[tuple(ranges)].all())

    def closed_box_inside(self, lo: Sequence[Fraction], hi: Sequence[Fraction]) -> bool:
        """Closed box [lo, hi] contained in the domain."""
        ranges = []
        for j in range(self.dim):
            if lo[j] <= self.span[j][0] or hi[j] >= self.span[j][1]:
                return False
            i0, i1 = self._axis_overlap(j, lo[j], hi[j], closed=True)
            ranges.append(slice(i0, i1))
        return bool(self.inside[tuple(ranges)].all())

    def contains(self, x: Sequence[float]) -> bool:
        """Point membership in the interior of the closure of the box union."""
        cand: list[list[int]] = []
        for j in range(self.dim):
            br = self.breaks[j]
            xj = Fraction(float(x[j])) if not isinstance(x[j], Fraction) else x[j]
            if xj <= br[0] or xj >= br[-1]:
                return False
            i = bisect.bisect_right(br, xj) - 1
            if br[i] == xj:
                cand.append([i - 1, i])
            else:
                cand.append([i])
        for combo in itertools.product(*cand):
            if any(i < 0 for i in combo) or not self.inside[combo]:
                return False
        return True

    @cached_property
    def components(self) -> np.ndarray:
        """Component label per elementary cell under face adjacency (-1 outside)."""
        labels = np.full(self.inside.shape, -1, dtype=int)
        nodes = {tuple(map(int, idx)) for idx in np.argwhere(self.inside)}
        for i, (start, lab) in enumerate(_components(nodes).items()):
            labels[start] = lab
        return labels

    def component_at(self, x: Sequence[Fraction]) -> int:
        """Component label of the elementary cell containing the (interior) point x."""
        idx = []
        for j in range(self.dim):
            br = self.breaks[j]
            i = bisect.bisect_right(br, x[j]) - 1
            idx.append(min(max(i, 0), len(br) - 2))
        return int(self.components[tuple(idx)])

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([self.contains(p) for p in pts], dtype=bool)

    def draw_points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform samples strictly inside the domain."""
        cells = self.elementary_boxes()
        vols = np.array([float(math.prod(float(b - a) for a, b in zip(lo, hi))) for lo, hi in cells])
        pick = rng.choice(len(cells), size=n, p=vols / vols.sum())
        out = np.empty((n, self.dim))
        for i, c in enumerate(pick):
            lo, hi = cells[c]
            u = rng.uniform(size=self.dim)
            out[i] = [float(a) + ui * float(b - a) for (a, b), ui in zip(zip(lo, hi), u)]
        return out

    def scaled(self, delta: Sequence, x0: Sequence) -> "DomainSpec":
        """Image x0 + delta * D as a box-union domain."""
        dl = [_frac(v) for v in delta]
        x0f = [_frac(v) for v in x0]
        boxes = []
        for lo, hi in self.boxes:
            boxes.append(
                (
                    tuple(x0f[j] + dl[j] * lo[j] for j in range(self.dim)),
                    tuple(x0f[j] + dl[j] * hi[j] for j in range(self.dim)),
                )
            )
        return DomainSpec(tuple(boxes))

    def slabs(self, j: int) -> list[tuple[tuple, list[tuple[Fraction, Fraction]]]]:
        """Per cross-axis footprint, the merged open slice intervals along axis j."""
        d = self.dim
        other = [a for a in range(d) if a != j]
        groups: dict[tuple, list[tuple[Fraction, Fraction]]] = {}
        for idx in np.argwhere(self.inside):
            key = tuple(int(idx[a]) for a in other)
            i = int(idx[j])
            seg = (self.breaks[j][i], self.breaks[j][i + 1])
            groups.setdefault(key, []).append(seg)
        out = []
        for key, segs in sorted(groups.items()):
            segs.sort()
            merged = [list(segs[0])]
            for a, b in segs[1:]:
                if a == merged[-1][1]:
                    merged[-1][1] = b
                else:
                    merged.append([a, b])
            footprint = tuple(
                (self.breaks[ax][key[i]], self.breaks[ax][key[i] + 1]) for i, ax in enumerate(other)
            )
            out.append((footprint, [tuple(s) for s in merged]))
        return out


# ---------------------------------------------------------------------------
# per-level classification

def _cell_corners(kappa: LevelVector, nu: Sequence[int]) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    lo = tuple(Fraction(n, 2**k) for n, k in zip(nu, kappa))
    hi = tuple(Fraction(n + 1, 2**k) for n, k in zip(nu, kappa))
    return lo, hi


@dataclass
class DomainGrid:
    """Cell classification of a domain at one anisotropic level."""

    domain: DomainSpec
    kappa: LevelVector
    m: MultiIndex
    closure_mode: bool
    blend_active: list[SignedIndex] = field(default_factory=list)
    cell_active: list[SignedIndex] = field(default_factory=list)
    interior: list[SignedIndex] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._interior_set = {nu.entries for nu in self.interior}
        self._nearest: dict[tuple, SignedIndex] = {}
        self._step_cache: dict[tuple, bool] = {}
        self._interior_arr = (
            np.array([nu.entries for nu in self.interior], dtype=int)
            if self.interior
            else np.empty((0, self.kappa.dim), dtype=int)
        )

    @property
    def dim(self) -> int:
        return self.kappa.dim

    def is_interior(self, nu: SignedIndex) -> bool:
        return nu.entries in self._interior_set

    def cell_frame(self, nu: SignedIndex) -> ScaleMap:
        lo, hi = _cell_corners(self.kappa, nu)
        return ScaleMap(tuple(b - a for a, b in zip(lo, hi)), lo)

    def step_box_inside(self, nu: SignedIndex, other: SignedIndex) -> bool:
        """Open hull of two adjacent closed cells lies in the domain."""
        return self.step_box_inside_t(nu.entries, other.entries)

    def step_box_inside_t(self, a: tuple, b: tuple) -> bool:
        key = (a, b) if a <= b else (b, a)
        hit = self._step_cache.get(key)
        if hit is None:
            lo1, hi1 = _cell_corners(self.kappa, key[0])
            lo2, hi2 = _cell_corners(self.kappa, key[1])
            lo = tuple(min(x, y) for x, y in zip(lo1, lo2))
            hi = tuple(max(x, y) for x, y in zip(hi1, hi2))
            hit = self.domain.open_box_inside(lo, hi)
            self._step_cache[key] = hit
        return hit


def classify_cells(
    domain: DomainSpec, kappa: LevelVector, m: MultiIndex, closure_mode: bool = False
) -> DomainGrid:
    """Exact cell classification: blend-active, cell-active, and interior sets.

    Interior uses open cells (Q inside D) by default; in closure mode the whole
    closed cell must lie inside, which is what the wide-sense chain conditions use.
    """
    d = domain.dim
    if kappa.dim != d or m.dim != d:
        raise ValueError("dimension mismatch")
    lo_rng = []
    hi_rng = []
    for j in range(d):
        lo, hi = domain.span[j]
        scale = 2 ** kappa[j]
        lo_rng.append(math.floor(lo * scale) - (m[j] + 1))
        hi_rng.append(math.ceil(hi * scale))
    grid = DomainGrid(domain, kappa, m, closure_mode)
    for nu_t in itertools.product(*(range(a, b + 1) for a, b in zip(lo_rng, hi_rng))):
        lo, hi = _cell_corners(kappa, nu_t)
        supp_hi = tuple(Fraction(nu_t[j] + m[j] + 1, 2 ** kappa[j]) for j in range(d))
        nu = SignedIndex(nu_t)
        if domain.box_meets(lo, supp_hi):
            grid.blend_active.append(nu)
            if domain.box_meets(lo, hi):
                grid.cell_active.append(nu)
                if closure_mode:
                    if domain.closed_box_inside(lo, hi):
                        grid.interior.append(nu)
                elif domain.open_box_inside(lo, hi):
                    grid.interior.append(nu)
    grid.__post_init__()
    return grid


def nearest_interior(grid: DomainGrid, nu: SignedIndex) -> SignedIndex:
    """Interior index minimizing the sup-distance to nu; lexicographic tie-break."""
    if not grid.interior:
        raise LevelTooCoarseError(
            f"no interior cell at level {grid.kappa.kappa.entries}"
        )
    key = nu.entries
    hit = grid._nearest.get(key)
    if hit is not None:
        return hit
    if grid.is_interior(nu):
        grid._nearest[key] = nu
        return nu
    arr = grid._interior_arr
    dist = np.max(np.abs(arr - np.array(key)), axis=1)
    best = np.min(dist)
    cands = arr[dist == best]
    winner = SignedIndex(tuple(int(v) for v in min(map(tuple, cands))))
    grid._nearest[key] = winner
    return winner


@dataclass
class ChainReport:
    """Outcome of a unit-step chain search between two cells."""

    found: bool
    chain: list[SignedIndex]
    directions: list[int]
    signs: list[int]
    level: LevelVector
    sublevel: int = 0

    @property
    def length(self) -> int:
        return max(len(self.chain) - 1, 0)


def _bfs_path(nodes: set, starts: Iterable[tuple], goals: set, neighbor_ok) -> list[tuple] | None:
    prev: dict[tuple, tuple | None] = {s: None for s in starts if s in nodes}
    queue = deque(prev.keys())
    while queue:
        cur = queue.popleft()
        if cur in goals:
            path = [cur]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        d = len(cur)
        for j in range(d):
            for sgn in (-1, 1):
                nxt = cur[:j] + (cur[j] + sgn,) + cur[j + 1 :]
                if nxt in nodes and nxt not in prev and neighbor_ok(cur, nxt):
                    prev[nxt] = cur
                    queue.append(nxt)
    return None


def find_chain(
    grid: DomainGrid, nu: SignedIndex, nu2: SignedIndex, sublevel: int = 0
) -> ChainReport:
    """Shortest unit-step chain between interior cells (breadth-first).

    Narrow mode (open-interior grid, sublevel 0): every step's open two-cell
    hull must lie in the domain.  Wide mode (closure-mode grid): the chain runs
    at the level refined by ``sublevel`` per axis; every chain cell's closure
    must lie in the domain and the endpoints are refined cells contained in the
    endpoint cells.
    """
    d = grid.dim
    if not grid.closure_mode and sublevel == 0:
        nodes = {x.entries for x in grid.interior}
        if nu.entries not in nodes or nu2.entries not in nodes:
            raise ValueError("chain endpoints must be interior cells")
        path = _bfs_path(nodes, [nu.entries], {nu2.entries}, grid.step_box_inside_t)
        level = grid.kappa
    else:
        fine_kappa = LevelVector(MultiIndex(tuple(k + sublevel for k in grid.kappa)))
        fine = classify_cells(grid.domain, fine_kappa, grid.m, closure_mode=True)
        nodes = {x.entries for x in fine.interior}
        scale = 2**sublevel
        starts = {
            t
            for t in itertools.product(*(range(n * scale, (n + 1) * scale) for n in nu))
            if t in nodes
        }
        goals = {
            t
            for t in itertools.product(*(range(n * scale, (n + 1) * scale) for n in nu2))
            if t in nodes
        }
        if not starts or not goals:
            return ChainReport(False, [], [], [], fine_kappa, sublevel)
        path = _bfs_path(nodes, starts, goals, lambda a, b: True)
        level = fine_kappa
    if path is None:
        return ChainReport(False, [], [], [], level, sublevel)
    chain = [SignedIndex(t) for t in path]
    dirs, signs = [], []
    for a, b in zip(path, path[1:]):
        j = next(i for i in range(d) if a[i] != b[i])
        dirs.append(j)
        signs.append(b[j] - a[j])
    return ChainReport(True, chain, dirs, signs, level, sublevel)


@dataclass
class LevelCheck:
    k: int
    kappa: tuple[int, ...]
    admissible: bool
    cond1_ok: bool
    cond2_ok: bool
    gamma0: tuple[int, ...] | None
    c0: float | None
    sublevel: int | None
    n_interior: int
    n_active: int
    witness: tuple | None = None

    @property
    def passes(self) -> bool:
        return self.admissible and self.cond1_ok and self.cond2_ok


@dataclass
class AlphaTypeReport:
    """Empirical certification record; constants are maxima over tested levels only."""

    mode: str
    levels: list[LevelCheck]
    K0: int | None
    gamma0: tuple[int, ...] | None
    c0: float | None
    sublevel: int | None
    witness: tuple | None

    @property
    def passes(self) -> bool:
        return self.K0 is not None


def _grid_distances(nodes: set, source: tuple, neighbor_ok) -> dict[tuple, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        d = len(cur)
        for j in range(d):
            for sgn in (-1, 1):
                nxt = cur[:j] + (cur[j] + sgn,) + cur[j + 1 :]
                if nxt in nodes and nxt not in dist and neighbor_ok(cur, nxt):
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
    return dist


def _check_level_narrow(grid: DomainGrid, rng: np.random.Generator, source_budget: int):
    nodes = {x.entries for x in grid.interior}
    sources = _pick_sources(grid, rng, source_budget)
    c0 = 0.0
    for s in sources:
        dist = _grid_distances(nodes, s, grid.step_box_inside_t)
        if len(dist) < len(nodes):
            missing = next(iter(nodes - set(dist)))
            return False, None, (s, missing)
        for t, dv in dist.items():
            gap = max(abs(a - b) for a, b in zip(s, t))
            if gap > 0:
                c0 = max(c0, dv / gap)
    return True, c0, None


def _check_level_wide(grid: DomainGrid, rng: np.random.Generator, source_budget: int, max_sublevel: int):
    """Smallest sublevel in 0..max_sublevel whose refined closed-cell graph connects all interior pairs."""
    last_witness = None
    # refinement cannot connect across distinct components of the domain itself
    labels = {}
    for nu in grid.interior:
        lo, hi = _cell_corners(grid.kappa, nu)
        mid = tuple((a + b) / 2 for a, b in zip(lo, hi))
        labels[nu.entries] = grid.domain.component_at(mid)
    if len(set(labels.values())) > 1:
        vals = sorted(labels.items(), key=lambda kv: kv[1])
        return False, None, None, (vals[0][0], vals[-1][0])
    for sub in range(max_sublevel + 1):
        fine_kappa = LevelVector(MultiIndex(tuple(k + sub for k in grid.kappa)))
        fine = classify_cells(grid.domain, fine_kappa, grid.m, closure_mode=True)
        nodes = {x.entries for x in fine.interior}
        scale = 2**sub
        blocks = {}
        ok = True
        for nu in grid.interior:
            blk = {
                t
                for t in itertools.product(*(range(n * scale, (n + 1) * scale) for n in nu))
                if t in nodes
            }
            if not blk:
                ok = False
                last_witness = (nu.entries, "no refined cell inside")
                break
            blocks[nu.entries] = blk
        if not ok:
            continue
        comp = _components(nodes)
        comp_sets = {key: {comp[t] for t in blk} for key, blk in blocks.items()}
        keys = list(comp_sets)
        disconnected = None
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                if not (comp_sets[keys[i]] & comp_sets[keys[j]]):
                    disconnected = (keys[i], keys[j])
                    break
            if disconnected:
                break
        if disconnected:
            last_witness = disconnected
            continue
        # empirical chain-length constant from a sampled set of coarse sources
        c0 = 0.0
        sources = _pick_sources(grid, rng, source_budget)
        for s in sources:
            sblk = blocks[s]
            dist = _multi_source_distances(nodes, sblk)
            for t_key, blk in blocks.items():
                gap = max(abs(a - b) for a, b in zip(s, t_key))
                if gap == 0:
                    continue
                best = min((dist[t] for t in blk if t in dist), default=None)
                if best is None:
                    continue
                c0 = max(c0, best / gap)
        return True, c0, sub, None
    return False, None, None, last_witness


def _multi_source_distances(nodes: set, sources: set) -> dict[tuple, int]:
    dist = {s: 0 for s in sources if s in nodes}
    queue = deque(dist.keys())
    while queue:
        cur = queue.popleft()
        d = len(cur)
        for j in range(d):
            for sgn in (-1, 1):
                nxt = cur[:j] + (cur[j] + sgn,) + cur[j + 1 :]
                if nxt in nodes and nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
    return dist


def _components(nodes: set) -> dict[tuple, int]:
    comp = {}
    label = 0
    for start in nodes:
        if start in comp:
            continue
        comp[start] = label
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            d = len(cur)
            for j in range(d):
                for sgn in (-1, 1):
                    nxt = cur[:j] + (cur[j] + sgn,) + cur[j + 1 :]
                    if nxt in nodes and nxt not in comp:
                        comp[nxt] = label
                        queue.append(nxt)
        label += 1
    return comp


def _pick_sources(grid: DomainGrid, rng: np.random.Generator, budget: int) -> list[tuple]:
    nodes = [x.entries for x in grid.interior]
    if len(nodes) <= budget:
        return nodes
    arr = np.array(nodes, dtype=int)
    chosen = {tuple(map(int, arr[i])) for i in rng.choice(len(arr), size=budget, replace=False)}
    for j in range(arr.shape[1]):
        chosen.add(tuple(map(int, arr[np.argmin(arr[:, j])])))
        chosen.add(tuple(map(int, arr[np.argmax(arr[:, j])])))
    return sorted(chosen)


def verify_alpha_type(
    domain: DomainSpec,
    profile: AnisoProfile,
    m: MultiIndex,
    k_max: int,
    mode: str = "narrow",
    source_budget: int = 64,
    max_sublevel: int = 3,
    seed: int = 0,
) -> AlphaTypeReport:
    """Empirical certification of the chain/covering conditions up to level k_max.

    For each stage the report records whether (a) every cell meeting the domain
    has a nearby interior cell (covering constant), and (b) sampled interior
    pairs are chain-connected with length linear in distance.  Constants are
    maxima over the tested configurations; nothing is claimed beyond k_max.
    """
    if mode not in ("narrow", "wide"):
        raise ValueError("mode must be 'narrow' or 'wide'")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    rng = np.random.default_rng(seed)
    checks: list[LevelCheck] = []
    for k in range(k_max + 1):
        kappa = level_vector(k, profile)
        grid = classify_cells(domain, kappa, m, closure_mode=(mode == "wide"))
        n_int, n_act = len(grid.interior), len(grid.cell_active)
        if n_int == 0:
            checks.append(
                LevelCheck(k, kappa.kappa.entries, False, False, False, None, None, None, 0, n_act)
            )
            continue
        # condition (a): nearby interior cell for every cell meeting the domain
        gamma = [0] * domain.dim
        for nu in grid.cell_active:
            best = nearest_interior(grid, nu)
            for j in range(domain.dim):
                gamma[j] = max(gamma[j], abs(best[j] - nu[j]) + 1)
        if mode == "narrow":
            ok2, c0, witness = _check_level_narrow(grid, rng, source_budget)
            sub = None
        else:
            ok2, c0, sub, witness = _check_level_wide(grid, rng, source_budget, max_sublevel)
        checks.append(
            LevelCheck(
                k, kappa.kappa.entries, True, True, ok2, tuple(gamma), c0, sub, n_int, n_act,
                witness,
            )
        )
    # K0 = smallest k whose whole tail passes
    K0 = None
    for k in range(k_max, -1, -1):
        if checks[k].passes:
            K0 = k
        else:
            break
    if K0 is None:
        bad = next(c for c in checks if not c.passes)
        return AlphaTypeReport(mode, checks, None, None, None, None, (bad.k, bad.witness))
    tail = checks[K0:]
    gamma0 = tuple(max(c.gamma0[j] for c in tail) for j in range(domain.dim))
    c0 = max((c.c0 for c in tail if c.c0 is not None), default=0.0)
    sub = max((c.sublevel for c in tail if c.sublevel is not None), default=None) if mode == "wide" else None
    return AlphaTypeReport(mode, checks, K0, gamma0, c0, sub, None)


# convenience wrappers -------------------------------------------------------

def unit_cube(d: int) -> DomainSpec:
    return DomainSpec.make([([0] * d, [1] * d)])


def l_shape() -> DomainSpec:
    return DomainSpec.make([
        (["0", "0"], ["1/2", "1"]),
        (["1/2", "0"], ["1", "1/2"]),
    ])


def two_squares() -> DomainSpec:
    return DomainSpec.make([
        (["0", "0"], ["1", "1"]),
        (["2", "0"], ["3", "1"]),
    ])
