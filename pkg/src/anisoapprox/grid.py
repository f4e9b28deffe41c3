"""Multi-index and dyadic-cell algebra: anisotropic levels, cell geometry, scaling maps.

Everything here is immutable and pure; values are safe to share across threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

MAX_DIM = 3

# Guard against a floating quotient landing just below an integer it should equal.
_FLOOR_GUARD = 1e-12


def _check_dim(d: int) -> None:
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {d}")


@dataclass(frozen=True)
class MultiIndex:
    """Tuple in Z_+^d (exponents, degrees, smoothness orders)."""

    entries: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_dim(len(self.entries))
        if any(e < 0 for e in self.entries):
            raise ValueError(f"multi-index entries must be >= 0, got {self.entries}")

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, j: int) -> int:
        return self.entries[j]

    def __le__(self, other: "MultiIndex") -> bool:
        return all(a <= b for a, b in zip(self.entries, other.entries))


@dataclass(frozen=True)
class SignedIndex:
    """Tuple in Z^d indexing dyadic cells (entries may be negative)."""

    entries: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_dim(len(self.entries))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, j: int) -> int:
        return self.entries[j]


def _as_fraction(a) -> Fraction:
    # str round-trip keeps decimal inputs exact ("1.5" -> 3/2), floats go verbatim.
    if isinstance(a, Fraction):
        return a
    if isinstance(a, str):
        return Fraction(a)
    if isinstance(a, int):
        return Fraction(a)
    return Fraction(a).limit_denominator(10**12) if not float(a).is_integer() else Fraction(int(a))


@dataclass(frozen=True)
class AnisoProfile:
    """Per-coordinate smoothness orders together with the derived difference orders.

    ``l`` is the smallest integer vector strictly above alpha; ``lbar`` the largest
    one strictly below.  When constructed from strings/Fractions the level
    arithmetic is exact rational; float inputs fall back to a guarded floor.
    """

    alpha: tuple[float, ...]
    alpha_exact: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        _check_dim(len(self.alpha))
        if any(a <= 0 for a in self.alpha):
            raise ValueError(f"alpha entries must be > 0, got {self.alpha}")

    @classmethod
    def make(cls, alpha: Sequence) -> "AnisoProfile":
        exact = tuple(_as_fraction(a) for a in alpha)
        return cls(alpha=tuple(float(a) for a in exact), alpha_exact=exact)

    @property
    def dim(self) -> int:
        return len(self.alpha)

    @property
    def l(self) -> MultiIndex:
        """Smallest m in N^d with alpha < m componentwise."""
        out = []
        for j in range(self.dim):
            if self.alpha_exact is not None:
                a = self.alpha_exact[j]
                out.append(int(a) + 1 if a.denominator == 1 else math.floor(a) + 1)
            else:
                a = self.alpha[j]
                out.append(int(a) + 1 if float(a).is_integer() else math.floor(a) + 1)
        return MultiIndex(tuple(out))

    @property
    def lbar(self) -> MultiIndex:
        """Largest m in Z_+^d with m < alpha componentwise."""
        out = []
        for j in range(self.dim):
            if self.alpha_exact is not None:
                a = self.alpha_exact[j]
                out.append(int(a) - 1 if a.denominator == 1 else math.floor(a))
            else:
                a = self.alpha[j]
                out.append(int(a) - 1 if float(a).is_integer() else math.floor(a))
        return MultiIndex(tuple(out))

    def inv(self) -> tuple[float, ...]:
        return tuple(1.0 / a for a in self.alpha)


@dataclass(frozen=True)
class LevelVector:
    """Per-axis dyadic refinement level."""

    kappa: MultiIndex

    @property
    def dim(self) -> int:
        return self.kappa.dim

    def __iter__(self):
        return iter(self.kappa)

    def __getitem__(self, j: int) -> int:
        return self.kappa[j]

    def cell_size(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(1, 2**k) for k in self.kappa)

    def __le__(self, other: "LevelVector") -> bool:
        return self.kappa <= other.kappa

    def __add__(self, other: "LevelVector") -> "LevelVector":
        return LevelVector(MultiIndex(tuple(a + b for a, b in zip(self.kappa, other.kappa))))

    def total(self) -> int:
        return sum(self.kappa)


def level_vector(k: int, profile: AnisoProfile) -> LevelVector:
    """Anisotropic level at stage k: entry j is the integer part of k/alpha_j."""
    if k < 0:
        raise ValueError(f"stage k must be >= 0, got {k}")
    entries = []
    for j in range(profile.dim):
        if profile.alpha_exact is not None:
            entries.append(int(Fraction(k) / profile.alpha_exact[j]))
        else:
            entries.append(math.floor(k / profile.alpha[j] + _FLOOR_GUARD))
    return LevelVector(MultiIndex(tuple(entries)))


def index_range(l: MultiIndex | Sequence[int]) -> list[MultiIndex]:
    """All multi-indices 0 <= lam <= l in lexicographic order."""
    bounds = tuple(l) if not isinstance(l, MultiIndex) else l.entries
    return [MultiIndex(t) for t in itertools.product(*(range(b + 1) for b in bounds))]


@dataclass(frozen=True)
class DyadicCell:
    """Open dyadic box 2^-kappa * nu + 2^-kappa * (0,1)^d."""

    kappa: LevelVector
    nu: SignedIndex

    def __post_init__(self) -> None:
        if self.kappa.dim != self.nu.dim:
            raise ValueError("level and index dimension mismatch")

    @property
    def dim(self) -> int:
        return self.nu.dim

    def lower(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(n, 2**k) for n, k in zip(self.nu, self.kappa))

    def upper(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(n + 1, 2**k) for n, k in zip(self.nu, self.kappa))

    def sides(self) -> tuple[Fraction, ...]:
        return self.kappa.cell_size()

    def contains(self, x: Sequence[float]) -> bool:
        return all(lo < Fraction(float(xi)) < hi for xi, lo, hi in zip(x, self.lower(), self.upper()))


def cell_at(kappa: LevelVector, x: Sequence[float]) -> SignedIndex:
    """Index of the cell at level kappa containing x (x off the dyadic grid)."""
    return SignedIndex(tuple(math.floor(float(xi) * 2**k) for xi, k in zip(x, kappa)))


@dataclass(frozen=True)
class ScaleMap:
    """Affine squeeze x -> x0 + delta * x (componentwise)."""

    delta: tuple[Fraction, ...]
    x0: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        _check_dim(len(self.delta))
        if len(self.delta) != len(self.x0):
            raise ValueError("delta and x0 dimension mismatch")
        if any(d <= 0 for d in self.delta):
            raise ValueError(f"delta entries must be > 0, got {self.delta}")

    @classmethod
    def make(cls, delta: Sequence, x0: Sequence) -> "ScaleMap":
        return cls(tuple(_as_fraction(d) for d in delta), tuple(_as_fraction(v) for v in x0))

    @property
    def dim(self) -> int:
        return len(self.delta)


def scale_apply(m: ScaleMap, x: Sequence[float]) -> tuple[float, ...]:
    """Image x0 + delta * x."""
    return tuple(float(x0j + dj * Fraction(float(xj))) for dj, x0j, xj in zip(m.delta, m.x0, x))


def scale_invert(m: ScaleMap) -> ScaleMap:
    """Inverse map: delta' = 1/delta, x0' = -x0/delta; invert(invert(m)) == m exactly."""
    inv_delta = tuple(1 / d for d in m.delta)
    inv_x0 = tuple(-x0j / dj for dj, x0j in zip(m.delta, m.x0))
    return ScaleMap(inv_delta, inv_x0)


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)


def iter_offsets(lo: Iterable[int], hi: Iterable[int]) -> Iterable[tuple[int, ...]]:
    """Integer boxes prod_j {lo_j..hi_j}, lexicographic."""
    return itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi)))
