"""Cayley-Menger determinants, simplex volumes and affine maps.

Squared-distance tables may hold floats or :class:`fractions.Fraction`.
Rational input is evaluated exactly (fraction-free Bareiss elimination on
a common integer scaling); float input goes through LU with partial
pivoting.

Volume normalisation uses ``vol^2 = (-1)^(k+1) cm / (2^k (k!)^2)``, which
is the constant that reproduces the classical triangle and tetrahedron
volumes.  Ratios of CM values never depend on this constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import DegenerateBase, NegativeSquaredVolume, RankDeficient

EPS_VOL = 1e-12
EPS_DET = 1e-12


@dataclass(frozen=True)
class DistanceSpec:
    """Squared distances among ``k + 1`` points."""

    d2: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.d2)
        n = len(rows)
        if n < 2 or any(len(r) != n for r in rows):
            raise ValueError("d2 must be a square table with at least 2 points")
        for i in range(n):
            if rows[i][i] != 0:
                raise ValueError("d2 must have a zero diagonal")
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("d2 must be symmetric")
                if rows[i][j] < 0:
                    raise ValueError("squared distances must be non-negative")
        object.__setattr__(self, "d2", rows)

    @property
    def k(self):
        return len(self.d2) - 1

    @property
    def exact(self):
        return all(isinstance(x, (int, Fraction)) for r in self.d2 for x in r)

    @classmethod
    def from_points(cls, pts, exact=False):
        pts = [tuple(Fraction(c) if exact else float(c) for c in p) for p in pts]
        n = len(pts)
        zero = Fraction(0) if exact else 0.0
        d2 = [[zero] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                s = sum(((a - b) * (a - b) for a, b in zip(pts[i], pts[j])), zero)
                d2[i][j] = d2[j][i] = s
        return cls(tuple(tuple(r) for r in d2))

    @classmethod
    def from_distances(cls, d):
        return cls(tuple(tuple(x * x for x in r) for r in d))

    def sub(self, idx):
        return DistanceSpec(tuple(tuple(self.d2[i][j] for j in idx) for i in idx))


def _as_spec(spec):
    return spec if isinstance(spec, DistanceSpec) else DistanceSpec(spec)


def bordered_matrix(d2):
    n = len(d2)
    one = 1
    rows = [[0] + [one] * n]
    for i in range(n):
        rows.append([one] + list(d2[i]))
    return rows


def det_bareiss(mat) -> Fraction:
    """Exact determinant of a rational matrix."""
    fr = [[Fraction(x) for x in row] for row in mat]
    den = 1
    for row in fr:
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
    a = [[int(x * den) for x in row] for row in fr]
    return Fraction(det_int(a), den ** len(a))


def det_int(a) -> int:
    """Fraction-free Gaussian elimination on an integer matrix (consumed)."""
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            piv = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if piv is None:
                return 0
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def cayley_menger_det(spec, exact=None):
    """Value of the bordered Cayley-Menger determinant.

    ``exact=None`` picks rational evaluation when every entry is rational.
    """
    spec = _as_spec(spec)
    if exact is None:
        exact = spec.exact
    m = bordered_matrix(spec.d2)
    if exact:
        return det_bareiss(m)
    return float(np.linalg.det(np.asarray(m, dtype=float)))


def volume_constant(k) -> int:
    return 2**k * factorial(k) ** 2


def signed_cm(spec, exact=None):
    """``(-1)^(k+1) cm``, positive exactly for nondegenerate simplices."""
    spec = _as_spec(spec)
    return (-1) ** (spec.k + 1) * cayley_menger_det(spec, exact)


def simplex_volume_squared(spec, exact=None):
    spec = _as_spec(spec)
    return signed_cm(spec, exact) / volume_constant(spec.k)


def simplex_volume(spec, eps_vol=EPS_VOL) -> float:
    spec = _as_spec(spec)
    v2 = float(simplex_volume_squared(spec))
    scale = max(float(x) for r in spec.d2 for x in r) ** spec.k / volume_constant(spec.k)
    if v2 < -eps_vol * max(scale, 1e-300):
        raise NegativeSquaredVolume(f"squared volume {v2!r} is negative: distances not realizable")
    return math.sqrt(max(v2, 0.0))


def realizable_simplex(spec) -> bool:
    """True iff the squared distances belong to a nondegenerate k-simplex.

    The signed CM value of every leading sub-simplex ``x_0..x_j`` must be
    positive; the top-level sign alone admits tetrahedra with an
    impossible face.
    """
    spec = _as_spec(spec)
    for j in range(1, spec.k + 1):
        if not signed_cm(spec.sub(range(j + 1))) > 0:
            return False
    return True


# ---------------------------------------------------------------------------
# affine maps

@dataclass(frozen=True)
class AffineMap:
    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))

    @property
    def dim(self):
        return self.linear.shape[0]

    @property
    def det(self):
        return float(np.linalg.det(self.linear))

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.linear.T + self.translation

    def compose(self, other):
        """``self o other``."""
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def inverse(self):
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.translation)

    @classmethod
    def identity(cls, dim=3):
        return cls(np.eye(dim), np.zeros(dim))

    def to_dict(self):
        return {"linear": self.linear.tolist(), "translation": self.translation.tolist()}


AffineMap2D = AffineMap
AffineMap3D = AffineMap


def _map_from_three(src, dst):
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    basis = np.column_stack([src[1] - src[0], src[2] - src[0]])
    scale = max(np.linalg.norm(basis[:, 0]), np.linalg.norm(basis[:, 1]), 1e-300)
    if abs(np.linalg.det(basis)) <= EPS_DET * scale * scale:
        raise DegenerateBase("first three corners are collinear")
    image = np.column_stack([dst[1] - dst[0], dst[2] - dst[0]])
    lin = image @ np.linalg.inv(basis)
    return AffineMap(lin, dst[0] - lin @ src[0])


def polygon_affine_equivalent(q, q2, correspondence=None, eps_aff=1e-9):
    """Affine map taking polygon ``q`` onto ``q2`` corner-wise, or ``None``.

    ``correspondence[i]`` is the corner of ``q2`` receiving corner ``i``.
    """
    src = np.asarray(getattr(q, "vertices", q), dtype=float)
    dst = np.asarray(getattr(q2, "vertices", q2), dtype=float)
    if len(src) != len(dst):
        return None
    if correspondence is not None:
        dst = dst[list(correspondence)]
    amap = _map_from_three(src[:3], dst[:3])
    diam = max(
        (np.linalg.norm(a - b) for i, a in enumerate(dst) for b in dst[i + 1:]), default=0.0
    )
    err = np.max(np.linalg.norm(amap(src) - dst, axis=1)) if len(src) else 0.0
    return amap if err <= eps_aff * diam else None


def fit_affine_map_3d(sources, targets):
    """Least-squares affine fit; returns ``(map, max pointwise residual)``."""
    src = np.asarray(sources, dtype=float)
    dst = np.asarray(targets, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[0] < 4:
        raise RankDeficient("need at least four corresponding 3D points")
    centered = src - src.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise RankDeficient("source points do not span 3-space")
    design = np.hstack([src, np.ones((len(src), 1))])
    coef, *_ = np.linalg.lstsq(design, dst, rcond=None)
    amap = AffineMap(coef[:3].T, coef[3])
    resid = float(np.max(np.linalg.norm(amap(src) - dst, axis=1)))
    return amap, resid
