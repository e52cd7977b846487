"""Outward-rounded interval helpers on ``(lo, hi)`` float pairs.

Every operation rounds to nearest and then steps one ulp outward, which
encloses the exact result of the operation on the exact operands.
"""

from __future__ import annotations

import math
from fractions import Fraction

INF = math.inf
_down = math.nextafter


def down(x):
    return _down(x, -INF)


def up(x):
    return _down(x, INF)


def from_fraction(q: Fraction):
    f = float(q)
    fq = Fraction(f)
    lo = f if fq <= q else down(f)
    hi = f if fq >= q else up(f)
    return lo, hi


def point(x):
    return (x, x)


def add(a, b):
    return down(a[0] + b[0]), up(a[1] + b[1])


def sub(a, b):
    return down(a[0] - b[1]), up(a[1] - b[0])


def neg(a):
    return -a[1], -a[0]


def mul(a, b):
    p = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return down(min(p)), up(max(p))


def sqr(a):
    lo, hi = a
    if lo >= 0:
        return down(lo * lo), up(hi * hi)
    if hi <= 0:
        return down(hi * hi), up(lo * lo)
    return 0.0, up(max(lo * lo, hi * hi))


def div(a, b):
    if b[0] <= 0 <= b[1]:
        return -INF, INF
    p = (a[0] / b[0], a[0] / b[1], a[1] / b[0], a[1] / b[1])
    return down(min(p)), up(max(p))


def contains_zero(a):
    return a[0] <= 0 <= a[1]


def intersect(a, b):
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo <= hi else None


def hull(a, b):
    return min(a[0], b[0]), max(a[1], b[1])


def width(a):
    return a[1] - a[0]


def mid(a):
    lo, hi = a
    if math.isinf(lo) or math.isinf(hi):
        raise ValueError("unbounded interval has no midpoint")
    m = 0.5 * lo + 0.5 * hi
    return min(max(m, lo), hi)


def quad_at(a, b, c, x):
    """Enclosure of ``a x^2 + b x + c`` at the point ``x``."""
    xx = (x, x)
    return add(mul((a, a), sqr(xx)), add(mul((b, b), xx), (c, c)))


def quad_range(a, b, c, lo, hi):
    """Enclosure of the range of ``a x^2 + b x + c`` over ``[lo, hi]``."""
    r = hull(quad_at(a, b, c, lo), quad_at(a, b, c, hi))
    if a != 0.0:
        xv = -b / (2.0 * a)
        slack = 1e-12 * (abs(lo) + abs(hi) + abs(xv)) + 1e-300
        if lo - slack <= xv <= hi + slack:
            aa = (a, a)
            vert = sub((c, c), div(sqr((b, b)), mul((4.0, 4.0), aa)))
            r = hull(r, vert)
    return r
