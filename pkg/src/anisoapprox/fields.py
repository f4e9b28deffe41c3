"""Analytic test fields with exact derivatives.

The lacunary sums are finite trigonometric series whose per-axis averaged
moduli behave like t^alpha_j down to the scale of the highest retained
frequency; they are the fields on which the class-rate exponents are actually
visible (a field with rapidly decaying spectrum saturates the polynomial order
of the operators instead).
"""

from __future__ import annotations

import math

import numpy as np

from .grid import AnisoProfile
from .spaces import ScalarField

_GOLDEN = 0.618033988749895


def constant(c: float, dim: int) -> ScalarField:
    def deriv(lam):
        if all(v == 0 for v in lam):
            return lambda pts: np.full(len(np.atleast_2d(pts)), float(c))
        return lambda pts: np.zeros(len(np.atleast_2d(pts)))

    return ScalarField(deriv((0,) * dim), dim, deriv, name=f"const({c})")


def poly1d(coeffs) -> ScalarField:
    """Univariate polynomial sum_a coeffs[a] x^a."""
    coeffs = [float(c) for c in coeffs]

    def deriv(lam):
        cur = list(coeffs)
        for _ in range(lam[0]):
            cur = [a * c for a, c in enumerate(cur)][1:] or [0.0]

        def fn(pts):
            x = np.atleast_2d(pts)[:, 0]
            acc = np.zeros_like(x)
            for c in reversed(cur):
                acc = acc * x + c
            return acc

        return fn

    return ScalarField(deriv((0,)), 1, deriv, name="poly1d")


def tensor_poly(coeff_tensor) -> ScalarField:
    """Multivariate polynomial with monomial coefficient tensor (axis order = coordinate)."""
    c = np.asarray(coeff_tensor, dtype=float)
    dim = c.ndim

    def deriv(lam):
        cur = c
        for j, r in enumerate(lam):
            for _ in range(r):
                n = cur.shape[j]
                if n == 1:
                    cur = np.zeros_like(cur)
                    break
                mult = np.arange(1, n).reshape([-1 if a == j else 1 for a in range(dim)])
                cur = np.take(cur, range(1, n), axis=j) * mult

        def fn(pts):
            pts = np.atleast_2d(pts)
            acc = np.zeros(len(pts))
            for idx in np.ndindex(cur.shape):
                term = np.full(len(pts), float(cur[idx]))
                for j, a in enumerate(idx):
                    if a:
                        term *= pts[:, j] ** a
                acc += term
            return acc

        return fn

    return ScalarField(deriv((0,) * dim), dim, deriv, name="tensor_poly")


def sin_prod(freqs, dim: int | None = None) -> ScalarField:
    """Product of sines/cosines: sin(pi f1 x1) * cos(pi f2 x2) * ...

    Axis 0 uses sine, later axes cosine (matching the usual smooth benchmark).
    """
    freqs = [float(f) for f in freqs]
    dim = dim or len(freqs)

    def deriv(lam):
        def fn(pts):
            pts = np.atleast_2d(pts)
            out = np.ones(len(pts))
            for j, f in enumerate(freqs):
                w = math.pi * f
                phase = (0.0 if j == 0 else math.pi / 2) + lam[j] * math.pi / 2
                out *= w ** lam[j] * np.sin(w * pts[:, j] + phase)
            return out

        return fn

    return ScalarField(deriv((0,) * dim), dim, deriv, name=f"sin_prod{tuple(freqs)}")


def lacunary(profile: AnisoProfile, depth: int, mix: float = 0.0) -> ScalarField:
    """Finite lacunary sum sum_i sum_j 2^(-alpha_j i) cos(2^i pi x_j + phase_ij).

    Critical smoothness for the profile at every scale above 2^-depth; smooth
    (a finite trig sum).  ``mix`` adds a fast-decaying cross term for
    genericity in d >= 2.
    """
    d = profile.dim
    alphas = profile.alpha
    terms = [
        (j, 2.0 ** (-alphas[j] * i), 2.0**i * math.pi, 2 * math.pi * _GOLDEN * (i + 1) * (j + 1))
        for i in range(depth + 1)
        for j in range(d)
    ]

    def deriv(lam):
        def fn(pts):
            pts = np.atleast_2d(pts)
            acc = np.zeros(len(pts))
            for j, amp, w, phase in terms:
                if any(lam[i] > 0 and i != j for i in range(d)):
                    continue
                acc += amp * w ** lam[j] * np.cos(w * pts[:, j] + phase + lam[j] * math.pi / 2)
            if mix and d >= 2:
                w = math.pi
                extra = np.full(len(pts), float(mix))
                for i in range(d):
                    extra *= w ** lam[i] * np.sin(w * pts[:, i] + lam[i] * math.pi / 2)
                acc += extra
            return acc

        return fn

    return ScalarField(deriv((0,) * d), d, deriv,
                       smoothness=f"critical{tuple(round(a, 3) for a in alphas)}",
                       name=f"lacunary(depth={depth})")


def gauss_bump(center, width: float, dim: int) -> ScalarField:
    """Smooth bump exp(-|x-c|^2 / w^2) with exact first/second derivatives."""
    c = np.asarray(center, dtype=float)

    def value(pts):
        pts = np.atleast_2d(pts)
        return np.exp(-np.sum((pts - c) ** 2, axis=1) / width**2)

    def deriv(lam):
        order = sum(lam)
        if order == 0:
            return value
        if order > 2:
            raise ValueError("bump derivatives implemented up to order 2")

        def fn(pts):
            pts = np.atleast_2d(pts)
            base = value(pts)
            if order == 1:
                j = lam.index(1)
                return base * (-2.0 * (pts[:, j] - c[j]) / width**2)
            if 2 in lam:
                j = lam.index(2)
                u = pts[:, j] - c[j]
                return base * (4.0 * u**2 / width**4 - 2.0 / width**2)
            i, j = [a for a, v in enumerate(lam) if v == 1]
            return base * (4.0 * (pts[:, i] - c[i]) * (pts[:, j] - c[j]) / width**4)

        return fn

    return ScalarField(value, dim, deriv, name="gauss_bump")


def named_field(name: str, dim: int, profile: AnisoProfile | None = None, depth: int = 12) -> ScalarField:
    """Registry used by the command-line front end."""
    if name == "one":
        return constant(1.0, dim)
    if name == "linear":
        return poly1d([1.0, 3.0]) if dim == 1 else tensor_poly(np.array([[1.0, 0.5], [3.0, 0.0]]))
    if name == "sin":
        return sin_prod([1.0] * dim)
    if name == "sin_cos":
        return sin_prod([1.0, 1.0])
    if name == "lacunary":
        if profile is None:
            raise ValueError("lacunary field needs a smoothness profile")
        return lacunary(profile, depth)
    if name == "bump":
        return gauss_bump([0.4] * dim, 0.35, dim)
    raise ValueError(f"unknown field {name!r}; pick from one, linear, sin, sin_cos, lacunary, bump")
