"""Certified branch-and-prune over non-negative boxes, and alpha-set algebra.

A box is discarded only when interval arithmetic proves that some
equation cannot come within its residual band of zero anywhere in the
box.  The band is ``eps_band`` times the sum of absolute term magnitudes,
so inputs perturbed at round-off level never lose a genuine solution.

Boxes are processed in batches with numpy.  Enclosures are made rigorous
by an a-priori bound on the floating-point error: every variable is
non-negative, so each monomial's range is the product of endpoint powers
and its rounding error is relative; the accumulated error of a sum is at
most ``gamma`` times the sum of absolute terms, and the enclosure is
widened by that amount.  Exact rational coefficients enter as outward
rounded float intervals.

Pruning combines a projection of each equation onto each variable in
which it is at most quadratic with a Krawczyk step.  A Krawczyk image
strictly inside a box proves a unique root of a square system there.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import interval as iv
from .poly import PolySystem

_down, _up = iv.down, iv.up
_U = 2.0**-52
_TINY = 1e-300
# contraction repeats while some side shrinks below this fraction of its width
CONTRACT_GAIN = 0.5
CONTRACT_ROUNDS = 2
_BATCH = 256
_MIN_BATCH = 16


@dataclass(frozen=True)
class SolverConfig:
    max_depth: int = 40
    eps_res: float = 1e-8
    eps_width: float = 1e-6
    alpha_bound: float = 1e6
    eps_band: float = 1e-10
    max_boxes: int = 50000
    max_leaves: int = 5000

    def __post_init__(self):
        for name in ("max_depth", "eps_res", "eps_width", "alpha_bound", "max_boxes", "max_leaves"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.eps_band < 0:
            raise ValueError("eps_band must be non-negative")


@dataclass(frozen=True)
class Cluster:
    box: tuple
    point: tuple
    residual: float
    verified: bool
    boundary: bool
    exhausted: bool
    leaves: int


@dataclass(frozen=True)
class SolveResult:
    kind: str  # "CertifiedEmpty" | "Clusters" | "Inconclusive"
    clusters: tuple
    box: tuple
    system: PolySystem = field(repr=False, compare=False)
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def certified_empty(self):
        return self.kind == "CertifiedEmpty"

    @property
    def residual(self):
        good = [c.residual for c in self.clusters if not c.boundary]
        return max(good) if good else None


# ---------------------------------------------------------------------------
# batched polynomial enclosures

@functools.lru_cache(maxsize=256)
def _centered_layout(E, n):
    """Index structure of the centered form; depends on the exponents only."""
    deltas, betas = {}, {}
    di, bj, fs, ts = [], [], [], []
    for t, e in enumerate(E):
        for b in itertools.product(*[range(k + 1) for k in e]):
            d = tuple(x - y for x, y in zip(e, b))
            di.append(deltas.setdefault(d, len(deltas)))
            bj.append(betas.setdefault(b, len(betas)))
            fs.append(math.prod(math.comb(x, y) for x, y in zip(e, b)))
            ts.append(t)
    D = np.array(list(deltas), dtype=np.int64).reshape(-1, n)
    Bt = np.array(list(betas), dtype=np.int64).reshape(-1, n)
    tot = max((sum(e) for e in E), default=0)
    sel = np.stack([Bt == k for k in range(3)], axis=2).astype(float)  # (betas, n, 3)
    excl_even = np.stack([np.all(np.delete(Bt, i, axis=1) % 2 == 0, axis=1) for i in range(n)], axis=1)
    excl_zero = np.stack([np.all(np.delete(Bt, i, axis=1) == 0, axis=1) for i in range(n)], axis=1)
    return {
        "sel": sel,
        "sel_count": sel.sum(axis=0),
        "excl_even": excl_even,
        "excl_zero": excl_zero,
        "shape": (max(len(deltas), 1), max(len(betas), 1)),
        "di": np.array(di, dtype=np.int64),
        "bj": np.array(bj, dtype=np.int64),
        "f": np.array(fs, dtype=float),
        "t": np.array(ts, dtype=np.int64),
        "D": D,
        "Bt": Bt,
        "cgamma": (len(deltas) + len(betas) + 2 * tot + 16) * _U,
        "zero_beta": np.all(Bt == 0, axis=1),
        "even": np.all(Bt % 2 == 0, axis=1),
    }


class _VPoly:
    """A polynomial compiled for batched evaluation over boxes."""

    def __init__(self, poly):
        n = poly.nvars
        ic = poly.interval_coeffs()
        self.n = n
        self.E = np.array([e for e, _, _ in ic], dtype=np.int64).reshape(-1, n)
        self.clo = np.array([lo for _, lo, _ in ic], dtype=float)
        self.chi = np.array([hi for _, _, hi in ic], dtype=float)
        self.cmid = np.array([float(c) for _, c in poly.terms], dtype=float)
        self.cmag = np.maximum(-self.clo, self.chi)
        self.maxdeg = int(self.E.max()) if self.E.size else 0
        tot = int(self.E.sum(axis=1).max()) if self.E.size else 0
        self.gamma = (len(ic) + tot + 8) * _U
        self.deg = [int(self.E[:, i].max()) if self.E.size else 0 for i in range(n)]
        self.cols = np.arange(n)
        # variables the equation can be solved for as a quadratic
        self.rest_vars = np.array([i for i in range(n) if 1 <= self.deg[i] <= 2], dtype=np.int64)
        self.t_sel = np.stack([self.E == k for k in range(3)], axis=2).astype(float)  # (terms, n, 3)

        self._compile_centered()

    def _compile_centered(self):
        """Linear map from midpoint monomials to Taylor coefficients at the midpoint.

        Binomial factors are powers of two here (degree <= 2 per variable),
        so the weights are exact copies of the rounded coefficients.
        """
        n = self.n
        lay = _centered_layout(tuple(map(tuple, self.E.tolist())), n)
        W = np.zeros(lay["shape"])
        # exact: at most one (term, beta) pair per delta and beta
        np.add.at(W, (lay["di"], lay["bj"]), lay["f"] * self.cmid[lay["t"]])
        self.D, self.Bt = lay["D"], lay["Bt"]
        self.W, self.Wabs = W, np.abs(W)
        self.cgamma = lay["cgamma"]
        self.zero_beta, self.even = lay["zero_beta"], lay["even"]
        self.c_sel, self.c_count = lay["sel"], lay["sel_count"]
        self.c_even, self.c_zero = lay["excl_even"], lay["excl_zero"]

    def taylor(self, MP):
        """Enclosures of the Taylor coefficients at the midpoints (powers ``MP``)."""
        mono = MP[:, self.cols[None, :], self.D].prod(axis=2)
        C = mono @ self.W
        err = 2 * self.cgamma * (mono @ self.Wabs) + _TINY
        return C - err, C + err

    def _shifted(self, Clo, Chi, RP, Bt, even, zero):
        R = RP[:, self.cols[None, :], Bt].prod(axis=2) * (1 + self.cgamma)
        big = np.maximum(-Clo, Chi)
        tlo = np.where(zero, Clo, np.where(even, np.minimum(Clo, 0.0) * R, -big * R))
        thi = np.where(zero, Chi, np.where(even, np.maximum(Chi, 0.0) * R, big * R))
        return tlo, thi

    def enclose_centered(self, C, RP):
        """Centered-form enclosure; ``RP`` holds powers of the half-widths."""
        if not self.E.size:
            z = np.zeros(RP.shape[0])
            return z, z
        tlo, thi = self._shifted(C[0], C[1], RP, self.Bt, self.even, self.zero_beta)
        e = (self.Bt.shape[0] + 4) * _U * (np.abs(tlo) + np.abs(thi)).sum(axis=1) + _TINY
        return tlo.sum(axis=1) - e, thi.sum(axis=1) + e

    def _mono(self, PL, PH, E):
        lo = PL[:, self.cols[None, :], E].prod(axis=2)
        hi = PH[:, self.cols[None, :], E].prod(axis=2)
        return lo, hi

    def _terms(self, mlo, mhi):
        tlo = np.where(self.clo >= 0, self.clo * mlo, self.clo * mhi)
        thi = np.where(self.chi >= 0, self.chi * mhi, self.chi * mlo)
        mag = self.cmag * mhi
        return tlo, thi, mag

    def enclose(self, PL, PH):
        """``(lo, hi, magnitude)`` per box; magnitude bounds the sum of |terms|."""
        if not self.E.size:
            z = np.zeros(PL.shape[0])
            return z, z, z
        tlo, thi, mag = self._terms(*self._mono(PL, PH, self.E))
        amag = mag.sum(axis=1)
        err = 2 * self.gamma * amag + _TINY
        return tlo.sum(axis=1) - err, thi.sum(axis=1) + err, amag * (1 + 2 * self.gamma)

    def split_all(self, PL, PH):
        """Enclosures of the coefficients of ``x_i^0, x_i^1, x_i^2`` for every ``i`` in ``rest_vars``.

        Returns ``(lo, hi)`` arrays of shape ``(3, len(rest_vars), B)``.
        The monomial of the other variables is the product of the factors
        before and after ``i``; boxes are in the positive orthant, so the
        lower and upper factor products are the monomial bounds.
        """
        flo = PL[:, self.cols[None, :], self.E]  # (B, T, n)
        fhi = PH[:, self.cols[None, :], self.E]
        mlo = _excl_prod(flo)
        mhi = _excl_prod(fhi)
        clo, chi = self.clo[None, :, None], self.chi[None, :, None]
        tlo = np.where(clo >= 0, clo * mlo, clo * mhi)
        thi = np.where(chi >= 0, chi * mhi, chi * mlo)
        mag = self.cmag[None, :, None] * mhi
        S = self.t_sel[:, self.rest_vars, :]
        v = self.rest_vars
        slo = np.einsum("btn,tnk->knb", tlo[:, :, v], S)
        shi = np.einsum("btn,tnk->knb", thi[:, :, v], S)
        err = 2 * self.gamma * np.einsum("btn,tnk->knb", mag[:, :, v], S) + _TINY
        return slo - err, shi + err

    def split_centered_all(self, C, RP):
        """The same split on the Taylor form about the midpoints (``RP``: half-width powers)."""
        v = self.rest_vars
        R = _excl_prod(RP[:, self.cols[None, :], self.Bt])[:, :, v] * (1 + self.cgamma)  # (B, betas, nv)
        Clo, Chi = C[0][:, :, None], C[1][:, :, None]
        big = np.maximum(-Clo, Chi)
        even, zero = self.c_even[None, :, v], self.c_zero[None, :, v]
        tlo = np.where(zero, Clo, np.where(even, np.minimum(Clo, 0.0) * R, -big * R))
        thi = np.where(zero, Chi, np.where(even, np.maximum(Chi, 0.0) * R, big * R))
        S = self.c_sel[:, v, :]
        slo = np.einsum("bjn,jnk->knb", tlo, S)
        shi = np.einsum("bjn,jnk->knb", thi, S)
        e = (self.c_count[v, :].T[:, :, None] + 4) * _U * np.einsum("bjn,jnk->knb", np.abs(tlo) + np.abs(thi), S) + _TINY
        return slo - e, shi + e

    def value(self, x):
        return float((self.cmid * np.prod(np.asarray(x, dtype=float)[None, :] ** self.E, axis=1)).sum())

    def magnitude(self, x):
        return float((np.abs(self.cmid) * np.prod(np.abs(np.asarray(x, dtype=float))[None, :] ** self.E, axis=1)).sum())


def _excl_prod(F):
    """Products over the last axis leaving out one factor at a time."""
    n = F.shape[-1]
    out = np.ones_like(F)
    acc = np.ones(F.shape[:-1])
    for i in range(n):
        out[..., i] = acc
        acc = acc * F[..., i]
    acc = np.ones(F.shape[:-1])
    for i in range(n - 1, -1, -1):
        out[..., i] *= acc
        acc = acc * F[..., i]
    return out


def _powers(LO, HI, K):
    PL = np.empty(LO.shape + (K + 1,))
    PH = np.empty(HI.shape + (K + 1,))
    PL[..., 0] = 1.0
    PH[..., 0] = 1.0
    for k in range(1, K + 1):
        PL[..., k] = PL[..., k - 1] * LO
        PH[..., k] = PH[..., k - 1] * HI
    return PL, PH


def _quad_eval(a, b, c, x):
    v = (a * x + b) * x + c
    err = 4 * _U * ((np.abs(a) * x + np.abs(b)) * x + np.abs(c)) + _TINY
    return v, err


def _quad_lower(a, b, c, p, q):
    """Rigorous lower bound of ``a x^2 + b x + c`` over ``[p, q]`` (p >= 0)."""
    vp, ep = _quad_eval(a, b, c, p)
    vq, eq = _quad_eval(a, b, c, q)
    lb = np.minimum(vp - ep, vq - eq)
    convex = a > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        xv = np.where(convex, -b / (2 * np.where(convex, a, 1.0)), 0.0)
        slack = 1e-12 * (np.abs(p) + np.abs(q) + np.abs(xv)) + _TINY
        inside = convex & (xv >= p - slack) & (xv <= q + slack)
        bb = b * b / (4 * np.where(convex, a, 1.0))
        vert = c - bb
        ev = 8 * _U * (np.abs(c) + np.abs(bb)) + _TINY
    return np.where(inside, np.minimum(lb, vert - ev), lb)


def _roots(a, b, c):
    """Real roots ``(r1, r2)``, NaN where absent."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lin = a == 0
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        qq = -0.5 * (b + np.copysign(sq, b))
        r1 = qq / np.where(lin, 1.0, a)
        r2 = np.where(qq != 0, c / np.where(qq != 0, qq, 1.0), np.nan)
        lr = np.where(b != 0, -c / np.where(b != 0, b, 1.0), np.nan)
        r1 = np.where(lin, lr, r1)
        r2 = np.where(lin, np.nan, r2)
        lo = np.fmin(r1, r2)
        hi = np.fmax(r1, r2)
    lo = np.where(np.isfinite(lo), lo, np.nan)
    hi = np.where(np.isfinite(hi), hi, np.nan)
    return lo, hi


def _hull_le0(a, b, c, lo, hi):
    """Hull of ``{x in [lo, hi] : a x^2 + b x + c <= 0}``; third value flags empty.

    Only removals proved by ``_quad_lower`` are applied.
    """
    empty = _quad_lower(a, b, c, lo, hi) > 0
    r1, r2 = _roots(a, b, c)
    vlo, _ = _quad_eval(a, b, c, lo)
    vhi, _ = _quad_eval(a, b, c, hi)
    inf = np.inf
    c1 = np.where((r1 > lo) & (r1 <= hi), r1, inf)
    c2 = np.where((r2 > lo) & (r2 <= hi), r2, inf)
    L = np.where(vlo <= 0, lo, np.minimum(c1, c2))
    L = np.where(np.isfinite(L), L, lo)
    d1 = np.where((r1 >= lo) & (r1 < hi), r1, -inf)
    d2 = np.where((r2 >= lo) & (r2 < hi), r2, -inf)
    R = np.where(vhi <= 0, hi, np.maximum(d1, d2))
    R = np.where(np.isfinite(R), R, hi)
    margin = 1e-9 * (hi - lo)
    Lc = L - margin - 4 * _U * np.abs(L)
    ok = (Lc > lo) & (_quad_lower(a, b, c, lo, np.maximum(Lc, lo)) > 0)
    new_lo = np.where(ok, Lc, lo)
    Rc = R + margin + 4 * _U * np.abs(R)
    ok = (Rc < hi) & (_quad_lower(a, b, c, np.minimum(Rc, hi), hi) > 0)
    new_hi = np.where(ok, Rc, hi)
    return new_lo, new_hi, empty | (new_lo > new_hi)


# ---------------------------------------------------------------------------
# rigorous batched matrix products for the Krawczyk operator

def _err(plo, phi, k, axis):
    return (k + 3) * _U * (np.abs(plo) + np.abs(phi)).sum(axis=axis) + _TINY


def _pm_iv(Y, lo, hi):
    """Point matrices (B,n,m) times interval vectors (B,m)."""
    p1, p2 = Y * lo[:, None, :], Y * hi[:, None, :]
    plo, phi = np.minimum(p1, p2), np.maximum(p1, p2)
    e = _err(plo, phi, Y.shape[2], 2)
    return plo.sum(axis=2) - e, phi.sum(axis=2) + e


def _pm_im(Y, lo, hi):
    """Point matrices (B,n,m) times interval matrices (B,m,k)."""
    p1 = Y[:, :, :, None] * lo[:, None, :, :]
    p2 = Y[:, :, :, None] * hi[:, None, :, :]
    plo, phi = np.minimum(p1, p2), np.maximum(p1, p2)
    e = _err(plo, phi, Y.shape[2], 2)
    return plo.sum(axis=2) - e, phi.sum(axis=2) + e


def _im_iv(Alo, Ahi, lo, hi):
    """Interval matrices (B,n,k) times interval vectors (B,k)."""
    c = np.stack([Alo * lo[:, None, :], Alo * hi[:, None, :], Ahi * lo[:, None, :], Ahi * hi[:, None, :]])
    plo, phi = c.min(axis=0), c.max(axis=0)
    e = _err(plo, phi, Alo.shape[2], 2)
    return plo.sum(axis=2) - e, phi.sum(axis=2) + e


# ---------------------------------------------------------------------------

class _Engine:
    def __init__(self, system: PolySystem, cfg: SolverConfig, init_box):
        self.system = system
        self.cfg = cfg
        self.n = system.nvars
        self.m = len(system.equations)
        self.eqs = [_VPoly(p) for p in system.equations]
        self.grads = [[_VPoly(p.derivative(i)) for i in range(self.n)] for p in system.equations]
        self.K = max([q.maxdeg for q in self.eqs] + [1])
        self.pairs = [(q, int(i)) for q in self.eqs for i in q.rest_vars]
        self.var_rows = [np.array([k for k, (_, i) in enumerate(self.pairs) if i == v], dtype=np.int64) for v in range(self.n)]
        self.kinds = system.kinds
        self.init = np.array(init_box, dtype=float)
        self.is_alpha = np.array([k == "alpha" for k in self.kinds])
        self.is_len = np.array([k == "length" for k in self.kinds])
        span = self.init[:, 1] - self.init[:, 0]
        ref = np.where(self.is_len, self.init[:, 1], np.maximum(span, np.abs(self.init[:, 1])))
        self.abs_tol = cfg.eps_width * np.maximum(ref, _TINY)

    # -- tolerances ------------------------------------------------------

    def tol(self, LO, HI):
        return np.where(self.is_alpha, self.cfg.eps_width * np.maximum(HI, _TINY), self.abs_tol)

    def small(self, LO, HI):
        return np.all(HI - LO <= self.tol(LO, HI), axis=1)

    # -- contractors -------------------------------------------------------

    def check(self, LO, HI):
        """Boolean mask of boxes that no equation excludes."""
        PL, PH = _powers(LO, HI, self.K)
        keep = np.ones(LO.shape[0], dtype=bool)
        for q in self.eqs:
            flo, fhi, mag = q.enclose(PL, PH)
            beta = self.cfg.eps_band * mag
            keep &= ~((flo > beta) | (fhi < -beta))
        return keep

    def _apply_hulls(self, LO, HI, alive, nl, nh, dead):
        """Intersect per-pair hulls ``(P, B)`` into the boxes."""
        alive &= ~np.any(dead, axis=0)
        LO2, HI2 = LO.copy(), HI.copy()
        for i in range(self.n):
            rows = self.var_rows[i]
            if len(rows):
                LO2[:, i] = np.maximum(LO[:, i], nl[rows].max(axis=0))
                HI2[:, i] = np.minimum(HI[:, i], nh[rows].min(axis=0))
        alive &= ~np.any(LO2 > HI2, axis=1)
        keep = alive[:, None]
        return np.where(keep, LO2, LO), np.where(keep, HI2, HI), alive

    def hc_sweep(self, LO, HI, alive):
        """Projection of every equation onto every variable of degree <= 2 in it."""
        if not self.pairs:
            return LO, HI, alive
        PL, PH = _powers(LO, HI, self.K)
        cs = [[], [], [], [], [], [], []]
        for q in self.eqs:
            flo, fhi, mag = q.enclose(PL, PH)
            beta = self.cfg.eps_band * mag
            alive &= ~((flo > beta) | (fhi < -beta))
            band = beta * (1 + _U) + _TINY
            if not len(q.rest_vars):
                continue
            slo, shi = q.split_all(PL, PH)
            for k, v in enumerate((slo[2], slo[1], slo[0] - band, -shi[2], -shi[1], -shi[0] - band, LO[:, q.rest_vars].T)):
                cs[k].append(v)
        a1, b1, c1, a2, b2, c2, lo = (np.concatenate(x) for x in cs)
        hi = np.stack([HI[:, i] for _, i in self.pairs])
        l1, h1, e1 = _hull_le0(a1, b1, c1, lo, hi)
        l2, h2, e2 = _hull_le0(a2, b2, c2, lo, hi)
        return self._apply_hulls(LO, HI, alive, np.maximum(l1, l2), np.minimum(h1, h2), e1 | e2)

    def hc_centered(self, LO, HI, alive):
        """The same projection on the Taylor form about the box midpoints."""
        if not self.pairs:
            return LO, HI, alive
        MID = np.clip(0.5 * LO + 0.5 * HI, LO, HI)
        MP, _ = _powers(MID, MID, self.K)
        TL = (LO - MID) * (1 + 2 * _U) - _TINY
        TH = (HI - MID) * (1 + 2 * _U) + _TINY
        r = np.maximum(-TL, TH)
        RP, _ = _powers(r, r, self.K)
        PL, PH = _powers(LO, HI, self.K)
        cs = [[] for _ in range(6)]
        for q in self.eqs:
            C = q.taylor(MP)
            flo, fhi = q.enclose_centered(C, RP)
            beta = self.cfg.eps_band * q.enclose(PL, PH)[2]
            alive &= ~((flo > beta) | (fhi < -beta))
            band = beta * (1 + _U) + _TINY
            if not len(q.rest_vars):
                continue
            slo, shi = q.split_centered_all(C, RP)
            for k, v in enumerate((slo[2], slo[1], shi[1], slo[0] - band, shi[2], shi[0] + band)):
                cs[k].append(v)
        alo, blo, bhi, clo, ahi, chi = (np.concatenate(x) for x in cs)
        cols = [i for _, i in self.pairs]
        tl, th = TL[:, cols].T, TH[:, cols].T
        # t >= 0 half
        hp = np.maximum(th, 0.0)
        z = np.zeros_like(hp)
        a1, b1, e1 = _hull_le0(alo, blo, clo, z, hp)
        a2, b2, e2 = _hull_le0(-ahi, -bhi, -chi, z, hp)
        plo, phi = np.maximum(a1, a2), np.minimum(b1, b2)
        pe = e1 | e2 | (plo > phi) | (th < 0)
        # t <= 0 half, with s = -t
        hn = np.maximum(-tl, 0.0)
        a1, b1, e1 = _hull_le0(alo, -bhi, clo, z, hn)
        a2, b2, e2 = _hull_le0(-ahi, blo, -chi, z, hn)
        slo, shi = np.maximum(a1, a2), np.minimum(b1, b2)
        ne = e1 | e2 | (slo > shi) | (tl > 0)
        t_lo = np.where(ne, plo, -shi)
        t_hi = np.where(pe, -slo, phi)
        xm = MID[:, cols].T
        nl = xm + t_lo
        nh = xm + t_hi
        nl = nl - 2 * _U * np.abs(nl) - _TINY
        nh = nh + 2 * _U * np.abs(nh) + _TINY
        return self._apply_hulls(LO, HI, alive, nl, nh, pe & ne)

    def krawczyk(self, LO, HI):
        """Returns ``(LO, HI, alive, unique)`` for a batch of boxes."""
        B, n, m = LO.shape[0], self.n, self.m
        alive = np.ones(B, dtype=bool)
        unique = np.zeros(B, dtype=bool)
        if m < n or B == 0:
            return LO, HI, alive, unique
        mid = np.clip(0.5 * LO + 0.5 * HI, LO, HI)
        PL, PH = _powers(LO, HI, self.K)
        Jlo = np.empty((B, m, n))
        Jhi = np.empty((B, m, n))
        for j in range(m):
            for i in range(n):
                Jlo[:, j, i], Jhi[:, j, i], _ = self.grads[j][i].enclose(PL, PH)
        ML, MH = _powers(mid, mid, self.K)
        Flo, Fhi, beta = np.empty((B, m)), np.empty((B, m)), np.empty((B, m))
        for j, q in enumerate(self.eqs):
            Flo[:, j], Fhi[:, j], _ = q.enclose(ML, MH)
            beta[:, j] = self.cfg.eps_band * q.enclose(PL, PH)[2]
        Jc = 0.5 * (Jlo + Jhi)
        good = np.all(np.isfinite(Jc), axis=(1, 2))
        Jc = np.where(good[:, None, None], Jc, 0.0)
        s = np.linalg.svd(Jc, compute_uv=False)
        good &= s[:, -1] > 1e-12 * np.maximum(s[:, 0], _TINY)
        Y = np.linalg.pinv(np.where(good[:, None, None], Jc, np.eye(m, n)[None]))
        yflo, yfhi = _pm_iv(Y, Flo, Fhi)
        yjlo, yjhi = _pm_im(Y, Jlo, Jhi)
        eye = np.eye(n)[None]
        clo, chi = eye - yjhi, eye - yjlo
        ec = 4 * _U * (np.abs(clo) + np.abs(chi) + 1.0)
        clo, chi = clo - ec, chi + ec
        dlo, dhi = LO - mid, HI - mid
        ed = 4 * _U * (np.abs(dlo) + np.abs(dhi) + np.abs(mid))
        cdlo, cdhi = _im_iv(clo, chi, dlo - ed, dhi + ed)
        ye = np.einsum("bij,bj->bi", np.abs(Y), beta) * (1 + (m + 3) * _U) + _TINY
        k0lo = mid - yfhi + cdlo
        k0hi = mid - yflo + cdhi
        ek = 8 * _U * (np.abs(mid) + np.abs(yflo) + np.abs(yfhi) + np.abs(cdlo) + np.abs(cdhi) + ye)
        klo, khi = k0lo - ye - ek, k0hi + ye + ek
        k0lo, k0hi = k0lo - ek, k0hi + ek
        good &= np.all(np.isfinite(klo) & np.isfinite(khi), axis=1)
        nlo = np.where(good[:, None], np.maximum(LO, klo), LO)
        nhi = np.where(good[:, None], np.minimum(HI, khi), HI)
        alive = ~np.any(nlo > nhi, axis=1)
        if m == n:
            unique = good & alive & np.all((k0lo > LO) & (k0hi < HI), axis=1)
        return nlo, np.maximum(nhi, nlo), alive, unique

    def worth_krawczyk(self, LO, HI):
        span = self.init[:, 1] - self.init[:, 0]
        rel = np.where(self.is_alpha, HI <= 1.25 * LO + _TINY, HI - LO <= 0.1 * np.maximum(span, _TINY))
        return np.all(rel, axis=1)

    def contract(self, LO, HI):
        B = LO.shape[0]
        alive = np.ones(B, dtype=bool)
        verified = np.zeros(B, dtype=bool)
        active = np.ones(B, dtype=bool)
        for _ in range(CONTRACT_ROUNDS):
            before = HI - LO
            LO, HI, alive = self.hc_sweep(LO, HI, alive)
            LO, HI, alive = self.hc_centered(LO, HI, alive)
            kw = alive & active & self.worth_krawczyk(LO, HI)
            if kw.any():
                idx = np.nonzero(kw)[0]
                kl, kh, ka, ku = self.krawczyk(LO[idx], HI[idx])
                LO[idx], HI[idx] = kl, kh
                alive[idx] &= ka
                verified[idx] |= ku
            shrunk = np.any(HI - LO < CONTRACT_GAIN * before, axis=1)
            active &= alive & shrunk & ~self.small(LO, HI)
            if not active.any():
                break
        alive &= self.check(LO, HI)
        return LO, HI, alive, verified

    # -- splitting ---------------------------------------------------------

    def split(self, LO, HI, D):
        """Children of every box plus a mask of boxes that may not be split.

        ``D[:, i]`` counts the subdivisions of variable ``i`` along the
        branch; a variable at ``max_depth`` is no longer split, and a box
        whose wide variables are all at the limit is stuck.
        """
        tol = self.tol(LO, HI)
        with np.errstate(divide="ignore", invalid="ignore"):
            geo = self.is_alpha[None, :] & (LO > 0)
            score_geo = np.log(HI / np.where(LO > 0, LO, 1.0)) / np.log1p(tol / np.maximum(HI, _TINY))
            score = np.where(geo, score_geo, (HI - LO) / tol)
        open_ = (D < self.cfg.max_depth) & (HI - LO > tol)
        score = np.where(open_, score, -np.inf)
        best = np.argmax(score, axis=1)
        rows = np.arange(LO.shape[0])
        stuck = ~open_.any(axis=1)
        lo, hi = LO[rows, best], HI[rows, best]
        use_geo = self.is_alpha[best] & (lo > 0) & (hi > 2 * lo)
        cut = np.where(use_geo, np.sqrt(lo) * np.sqrt(np.maximum(hi, 0)), 0.5 * lo + 0.5 * hi)
        cut = np.clip(cut, lo, hi)
        LH = HI.copy()
        LH[rows, best] = cut
        RL = LO.copy()
        RL[rows, best] = cut
        D2 = D.copy()
        D2[rows, best] += 1
        return (LO, LH, D2), (RL, HI, D2.copy()), stuck

    # -- refinement --------------------------------------------------------

    def residual(self, x):
        out = 0.0
        for q in self.eqs:
            mag = q.magnitude(x)
            r = abs(q.value(x))
            out = max(out, r / mag if mag > 0 else r)
        return out

    def refine(self, lo, hi):
        w = hi - lo
        elo, ehi = np.maximum(lo - w, 0.0), hi + w
        x = 0.5 * (lo + hi)
        F = lambda y: np.array([q.value(y) for q in self.eqs])
        fx = F(x)
        nrm = np.linalg.norm(fx)
        for _ in range(30):
            J = np.array([[g.value(x) for g in row] for row in self.grads])
            try:
                step = np.linalg.lstsq(J, -fx, rcond=None)[0]
            except np.linalg.LinAlgError:
                break
            t, moved = 1.0, False
            while t > 1e-4:
                xn = np.clip(x + t * step, elo, ehi)
                fn = F(xn)
                nn = np.linalg.norm(fn)
                if nn < nrm:
                    x, fx, nrm, moved = xn, fn, nn, True
                    break
                t *= 0.5
            if not moved or nrm == 0.0:
                break
        return x, self.residual(x)


def solve_positive(system: PolySystem, box, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Branch-and-prune for the non-negative solutions of ``system`` in ``box``."""
    init = [(float(lo), float(hi)) for lo, hi in box]
    if len(init) != system.nvars:
        raise ValueError("box dimension does not match the system")
    for lo, hi in init:
        if not (0 <= lo <= hi) or not math.isfinite(hi):
            raise ValueError("boxes must be finite and non-negative")
    eng = _Engine(system, cfg, init)
    n = eng.n
    stack = [(np.array([[lo for lo, _ in init]]), np.array([[hi for _, hi in init]]), np.zeros((1, n), dtype=np.int64))]
    leaves = []  # (LO, HI, verified, exhausted) batches
    nleaves = 0
    processed = 0
    aborted = False
    while stack:
        LO, HI, D = _take(stack, _BATCH)
        if processed + LO.shape[0] > cfg.max_boxes or nleaves > cfg.max_leaves:
            aborted = True
            stack.append((LO, HI, D))
            for L_, H_, _ in stack:
                leaves.append((L_, H_, np.zeros(L_.shape[0], bool), np.ones(L_.shape[0], bool)))
            stack = []
            break
        processed += LO.shape[0]
        LO, HI, alive, verified = eng.contract(LO.copy(), HI.copy())
        LO, HI, D, verified = LO[alive], HI[alive], D[alive], verified[alive]
        if not LO.shape[0]:
            continue
        small = eng.small(LO, HI)
        left, right, stuck = eng.split(LO, HI, D)
        done = small | stuck
        if done.any():
            leaves.append((LO[done], HI[done], verified[done], stuck[done] & ~small[done]))
            nleaves += int(done.sum())
        go = ~done
        if go.any():
            kids = tuple(np.concatenate([l[go], r[go]]) for l, r in zip(left, right))
            if kids[0].shape[0] < _MIN_BATCH:
                kids = _expand(eng, *kids)
            stack.append(kids)

    if leaves:
        LL = np.concatenate([l[0] for l in leaves])
        HH = np.concatenate([l[1] for l in leaves])
        VV = np.concatenate([l[2] for l in leaves])
        XX = np.concatenate([l[3] for l in leaves])
    else:
        LL = HH = np.zeros((0, n))
        VV = XX = np.zeros(0, bool)
    clusters = _clusters(eng, LL, HH, VV, XX)
    live = [c for c in clusters if not c.boundary]
    if not live:
        kind = "CertifiedEmpty"
    elif aborted or any(c.exhausted and not c.verified for c in live):
        kind = "Inconclusive"
    else:
        kind = "Clusters"
    stats = {"boxes": processed, "leaves": int(LL.shape[0]), "aborted": aborted}
    return SolveResult(kind, tuple(clusters), tuple(init), system, stats)


def _expand(eng, LO, HI, D):
    """Bisect small batches further before contracting them.

    Each contraction pass has a fixed cost, so narrow searches that would
    otherwise process one or two boxes per pass go deeper per pass instead.
    """
    while LO.shape[0] < _MIN_BATCH:
        left, right, stuck = eng.split(LO, HI, D)
        go = ~(stuck | eng.small(LO, HI))
        if not go.any():
            break
        keep = ~go
        LO, HI, D = (np.concatenate([a[keep], l[go], r[go]]) for a, l, r in zip((LO, HI, D), left, right))
    return LO, HI, D


def _take(stack, size):
    """Pop up to ``size`` boxes from the top of the stack, in stack order."""
    parts, got = [], 0
    while stack and got < size:
        LO, HI, D = stack.pop()
        need = size - got
        if LO.shape[0] > need:
            stack.append((LO[need:], HI[need:], D[need:]))
            LO, HI, D = LO[:need], HI[:need], D[:need]
        parts.append((LO, HI, D))
        got += LO.shape[0]
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def _clusters(eng, LL, HH, VV, XX):
    L = LL.shape[0]
    if L == 0:
        return []
    order = np.lexsort(tuple(LL[:, k] for k in reversed(range(eng.n))))
    LL, HH, VV, XX = LL[order], HH[order], VV[order], XX[order]
    slack = eng.tol(LL, HH)
    parent = list(range(L))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(L):
        touch = np.all((LL[a] <= HH + slack[a]) & (LL <= HH[a] + slack[a]), axis=1)
        for b in np.nonzero(touch)[0]:
            ra, rb = find(a), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for k in range(L):
        groups.setdefault(find(k), []).append(k)
    out = []
    for root in sorted(groups):
        idx = np.array(groups[root])
        lo, hi = LL[idx].min(axis=0), HH[idx].max(axis=0)
        exhausted = bool(XX[idx].any())
        pt, res = eng.refine(lo, hi)
        tol = eng.tol(lo[None], hi[None])[0]
        boundary = (not exhausted) and bool(np.any(eng.is_len & (hi <= 2 * tol)))
        verified = bool(VV[idx].any()) or res <= eng.cfg.eps_res
        out.append(
            Cluster(
                tuple(zip(lo.tolist(), hi.tolist())),
                tuple(float(v) for v in pt),
                float(res),
                verified,
                boundary,
                exhausted,
                len(idx),
            )
        )
    return out


# ---------------------------------------------------------------------------
# feasible boxes

def feasible_box(system: PolySystem, geometry=None, cfg: SolverConfig = SolverConfig()):
    """Initial search box in the system's normalised units.

    ``geometry`` maps variable names to bounds in original units (or has a
    ``free_bounds()`` method doing so); by default the bounds recorded in
    ``system.meta["bounds"]`` are used.  Unbounded variables fall back to
    ``[0, 4]`` after normalisation.  ``alpha`` is searched in
    ``[1/alpha_bound, alpha_bound]``.
    """
    if geometry is None:
        bounds = system.meta.get("bounds", {})
    elif isinstance(geometry, dict):
        bounds = geometry
    else:
        bounds = geometry.free_bounds()
    box = []
    for name, kind, scale in zip(system.variables, system.kinds, system.scales):
        if kind == "alpha":
            box.append((1.0 / cfg.alpha_bound, cfg.alpha_bound))
            continue
        if name in bounds:
            lo, hi = bounds[name]
            s = float(scale)
            lo = max(0.0, lo / s * (1 - 1e-12) - 1e-300)
            hi = hi / s * (1 + 1e-12)
            box.append((_down(lo) if lo > 0 else 0.0, _up(hi)))
        else:
            box.append((0.0, 4.0))
    return box


# ---------------------------------------------------------------------------
# alpha sets

@dataclass(frozen=True)
class AlphaSet:
    """Finite union of closed intervals with a certification flag.

    ``certified`` means the true alpha set is contained in the union.
    """

    intervals: tuple = ()
    certified: bool = True

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    @property
    def empty(self):
        return not self.intervals

    def __contains__(self, x):
        return any(lo <= x <= hi for lo, hi in self.intervals)

    def hull(self):
        if not self.intervals:
            return None
        return self.intervals[0][0], self.intervals[-1][1]

    def intersect(self, other):
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo, hi = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return AlphaSet(tuple(out), self.certified and other.certified)

    def inverted(self):
        return AlphaSet(
            tuple((1.0 / hi, 1.0 / lo if lo > 0 else math.inf) for lo, hi in self.intervals),
            self.certified,
        )

    def to_list(self):
        return [[lo, hi] for lo, hi in self.intervals]

    @classmethod
    def full(cls, lo, hi):
        return cls(((lo, hi),), False)


def _normalize(intervals):
    items = sorted((float(lo), float(hi)) for lo, hi in intervals if lo <= hi)
    out = []
    for lo, hi in items:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return tuple(out)


def intersect_alpha_sets(sets):
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one alpha set")
    acc = sets[0]
    for s in sets[1:]:
        acc = acc.intersect(s)
    return acc


def _inflate(lo, hi, rel):
    return _down(lo * (1 - rel)), _up(hi * (1 + rel))


def project_alpha(result: SolveResult, cfg: SolverConfig = SolverConfig()) -> AlphaSet:
    """Outer enclosure of the alpha values of ``result`` in original units."""
    system = result.system
    k = system.alpha_index
    scale = system.scales[k]
    if result.kind == "CertifiedEmpty":
        return AlphaSet((), True)
    if result.kind == "Inconclusive":
        return AlphaSet((_scale_interval(*result.box[k], scale),), False)
    ivals = []
    for c in result.clusters:
        if c.boundary:
            continue
        lo, hi = _inflate(*c.box[k], cfg.eps_res)
        ivals.append(_scale_interval(lo, hi, scale))
    return AlphaSet(tuple(ivals), True)


def _scale_interval(lo, hi, scale):
    s = Fraction(scale)
    a = iv.from_fraction(Fraction(lo) * s)[0]
    b = iv.from_fraction(Fraction(hi) * s)[1]
    return a, b


def alpha_cover(result: SolveResult, cfg: SolverConfig = SolverConfig()) -> AlphaSet:
    """Union of the alpha ranges of every undiscarded box, uncertified.

    Every solution inside the searched box lies in some undiscarded box,
    including those left over when the budget ran out, so this encloses
    the alpha values the search could reach even when nothing was proved.
    """
    if result.kind != "Inconclusive":
        return project_alpha(result, cfg)
    system = result.system
    k = system.alpha_index
    scale = system.scales[k]
    ivals = [_scale_interval(*_inflate(*c.box[k], cfg.eps_res), scale) for c in result.clusters if not c.boundary]
    return AlphaSet(tuple(ivals), False)
