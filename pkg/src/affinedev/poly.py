"""Sparse multivariate polynomials with exact rational coefficients.

Systems are assembled from Cayley-Menger determinants whose free entries
are variables.  Coefficients are recovered exactly by tensor-grid
interpolation (each squared length occurs in two symmetric positions, so
the degree per variable is at most two) and are only converted to
outward-rounded float intervals when a solver compiles them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import interval as iv
from .cmgeom import det_int


@dataclass(frozen=True)
class Polynomial:
    nvars: int
    terms: tuple  # ((exps, Fraction), ...) sorted by exps, no zero coefficients

    @classmethod
    def from_dict(cls, nvars, coeffs):
        items = tuple(
            sorted((tuple(e), Fraction(c)) for e, c in coeffs.items() if c != 0)
        )
        return cls(nvars, items)

    @classmethod
    def constant(cls, nvars, c):
        return cls.from_dict(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, i):
        e = [0] * nvars
        e[i] = 1
        return cls.from_dict(nvars, {tuple(e): 1})

    def as_dict(self):
        return dict(self.terms)

    def __add__(self, other):
        d = self.as_dict()
        for e, c in other.terms:
            d[e] = d.get(e, 0) + c
        return Polynomial.from_dict(self.nvars, d)

    def __neg__(self):
        return Polynomial(self.nvars, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial.from_dict(self.nvars, {e: c * other for e, c in self.terms})
        d = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                d[e] = d.get(e, 0) + c1 * c2
        return Polynomial.from_dict(self.nvars, d)

    __rmul__ = __mul__

    def degree_in(self, i):
        return max((e[i] for e, _ in self.terms), default=0)

    @property
    def variables_used(self):
        return tuple(i for i in range(self.nvars) if self.degree_in(i) > 0)

    def derivative(self, i):
        d = {}
        for e, c in self.terms:
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                d[tuple(e2)] = d.get(tuple(e2), 0) + c * e[i]
        return Polynomial.from_dict(self.nvars, d)

    def substitute_scale(self, scales):
        """Polynomial in ``y`` with ``p(scales * y)``."""
        d = {}
        for e, c in self.terms:
            f = c
            for s, k in zip(scales, e):
                if k:
                    f *= Fraction(s) ** k
            d[e] = f
        return Polynomial.from_dict(self.nvars, d)

    def embed(self, nvars, positions):
        """Re-index into a larger variable list."""
        d = {}
        for e, c in self.terms:
            e2 = [0] * nvars
            for k, p in zip(e, positions):
                e2[p] += k
            d[tuple(e2)] = d.get(tuple(e2), 0) + c
        return Polynomial.from_dict(nvars, d)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        total = 0.0
        for e, c in self.terms:
            t = float(c)
            for xi, k in zip(x, e):
                if k:
                    t *= xi**k
            total += t
        return total

    def evaluate_exact(self, x):
        x = [Fraction(v) for v in x]
        total = Fraction(0)
        for e, c in self.terms:
            t = c
            for xi, k in zip(x, e):
                if k:
                    t *= xi**k
            total += t
        return total

    def abs_terms(self, x):
        """Sum of absolute values of the terms at ``x`` (residual scale)."""
        total = 0.0
        for e, c in self.terms:
            t = abs(float(c))
            for xi, k in zip(x, e):
                if k:
                    t *= abs(xi) ** k
            total += t
        return total

    def interval_coeffs(self):
        return tuple((e, *iv.from_fraction(c)) for e, c in self.terms)


def interpolate(func, nvars, degree=2):
    """Exact polynomial of degree <= ``degree`` per variable through ``func``.

    ``func`` receives a tuple of ints in ``{0..degree}^nvars`` and returns a
    rational value.
    """
    nodes = list(range(degree + 1))
    grid = {}
    for pt in itertools.product(nodes, repeat=nvars):
        grid[pt] = Fraction(func(pt))
    # solve one axis at a time; the grid is a tensor product
    vals = grid
    for axis in range(nvars):
        new = {}
        for rest in itertools.product(nodes, repeat=nvars - 1):
            col = []
            for k in nodes:
                p = rest[:axis] + (k,) + rest[axis:]
                col.append(vals[p])
            coeffs = _monomial_coeffs_1d(col)
            for k, c in enumerate(coeffs):
                new[rest[:axis] + (k,) + rest[axis:]] = c
        vals = new
    return Polynomial.from_dict(nvars, vals)


def _monomial_coeffs_1d(values):
    """Coefficients ``c_k`` of the polynomial with ``p(i) = values[i]``."""
    n = len(values)
    if n == 3:
        v0, v1, v2 = values
        c2 = (v2 - 2 * v1 + v0) / 2
        return [v0, v1 - v0 - c2, c2]
    # solve the Vandermonde system exactly
    mat = [[Fraction(i) ** k for k in range(n)] + [Fraction(values[i])] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if mat[r][col] != 0)
        mat[col], mat[piv] = mat[piv], mat[col]
        pv = mat[col][col]
        mat[col] = [x / pv for x in mat[col]]
        for r in range(n):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[col])]
    return [mat[i][n] for i in range(n)]


def cm_polynomial(template, nvars):
    """Cayley-Menger determinant of a squared-distance template.

    Entries of ``template`` are rationals or ``("var", i)`` markers naming
    the squared-length variable ``i``.
    """
    n = len(template)
    used = sorted({x[1] for row in template for x in row if isinstance(x, tuple)})
    local = {v: k for k, v in enumerate(used)}
    # integer entries over one common denominator; variables sit on the grid 0..2
    fixed = [[None if isinstance(x, tuple) else Fraction(x) for x in row] for row in template]
    den = 1
    for row in fixed:
        for x in row:
            if x is not None:
                den = den * x.denominator // math.gcd(den, x.denominator)
    base = [[0] + [den] * n]
    for row in fixed:
        base.append([den] + [0 if x is None else int(x * den) for x in row])
    slots = [(i + 1, j + 1, local[x[1]]) for i, row in enumerate(template)
             for j, x in enumerate(row) if isinstance(x, tuple)]
    # the whole bordered matrix is den times the true one
    scale = Fraction(1, den ** (n + 1))

    def at_local(pt):
        m = [r[:] for r in base]
        for i, j, k in slots:
            m[i][j] = pt[k] * den
        return det_int(m) * scale

    if not used:
        return Polynomial.constant(nvars, at_local(()))
    p = interpolate(at_local, len(used), degree=2)
    return p.embed(nvars, used)


@dataclass(frozen=True)
class PolySystem:
    """Polynomial equations ``f_j(x) = 0`` over non-negative variables.

    The solver works in normalised units; ``scales[i]`` converts variable
    ``i`` back (``original = normalised * scale``).  ``kinds[i]`` is
    ``"alpha"`` for the volume-ratio variable and ``"length"`` for squared
    lengths.
    """

    variables: tuple
    equations: tuple
    scales: tuple = ()
    kinds: tuple = ()
    labels: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.variables)
        if not self.scales:
            object.__setattr__(self, "scales", (Fraction(1),) * n)
        if not self.kinds:
            object.__setattr__(self, "kinds", ("generic",) * n)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"eq{j}" for j in range(len(self.equations))))
        for eq in self.equations:
            if eq.nvars != n:
                raise ValueError("equation arity does not match the variable list")

    @property
    def nvars(self):
        return len(self.variables)

    @property
    def alpha_index(self):
        return self.kinds.index("alpha") if "alpha" in self.kinds else None

    def index(self, name):
        return self.variables.index(name)

    def normalize_point(self, x):
        return [float(v) / float(s) for v, s in zip(x, self.scales)]

    def denormalize_point(self, y):
        return [float(v) * float(s) for v, s in zip(y, self.scales)]

    def residuals(self, x, original_units=True):
        y = self.normalize_point(x) if original_units else list(x)
        return np.array([eq.evaluate(y) for eq in self.equations])

    def relative_residuals(self, x, original_units=True):
        y = self.normalize_point(x) if original_units else list(x)
        out = []
        for eq in self.equations:
            scale = eq.abs_terms(y)
            r = abs(eq.evaluate(y))
            out.append(r / scale if scale > 0 else r)
        return np.array(out)

    def max_relative_residual(self, x, original_units=True):
        r = self.relative_residuals(x, original_units)
        return float(r.max()) if len(r) else 0.0


def with_cross_eliminants(system: PolySystem, k=None) -> PolySystem:
    """Append ``a_i b_j - a_j b_i`` for consecutive equations ``a_j - x_k b_j``.

    Equations linear in variable ``k`` (the alpha slot by default) are
    split as ``a - x_k b``; the appended combinations are consequences of
    the originals, so the solution set does not change, but they do not
    involve ``x_k`` and prune boxes that are wide in it.
    """
    k = system.alpha_index if k is None else k
    parts = []
    for eq in system.equations:
        if eq.degree_in(k) != 1:
            continue
        a = Polynomial.from_dict(eq.nvars, {e: c for e, c in eq.terms if e[k] == 0})
        b = -eq.derivative(k)
        parts.append((a, b))
    m = len(parts)
    if m < 2:
        return system
    extra, labels = [], []
    for i in range(m if m > 2 else 1):
        j = (i + 1) % m
        (ai, bi), (aj, bj) = parts[i], parts[j]
        extra.append(ai * bj - aj * bi)
        labels.append(f"cross{i}")
    return PolySystem(
        system.variables,
        system.equations + tuple(extra),
        system.scales,
        system.kinds,
        system.labels + tuple(labels),
        system.meta,
    )
