from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from affinedev import interval as iv
from affinedev.cmgeom import cayley_menger_det
from affinedev.poly import Polynomial, PolySystem, cm_polynomial, interpolate, with_cross_eliminants

fracs = st.fractions(min_value=-20, max_value=20, max_denominator=50)
pos = st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=50)


def test_arithmetic_and_derivative():
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    p = x * x * y - 3 * y + Polynomial.constant(2, 2)
    assert p.evaluate_exact([2, 5]) == 20 - 15 + 2
    assert p.derivative(0).evaluate_exact([2, 5]) == 20
    assert p.degree_in(0) == 2 and p.degree_in(1) == 1
    assert (p - p).terms == ()
    assert p.variables_used == (0, 1)


@given(fracs, fracs, fracs)
def test_interpolation_reproduces_quadratics(a, b, c):
    p = interpolate(lambda t: a * t[0] ** 2 + b * t[0] * t[1] + c, 2)
    assert p.evaluate_exact([3, Fraction(1, 2)]) == a * 9 + b * Fraction(3, 2) + c


@given(pos, pos, pos, pos, pos)
def test_cm_polynomial_matches_direct_determinant(d01, d02, d12, d03, t):
    # tetrahedron with squared lengths |x1 x3| = t (variable) and |x2 x3| = 1
    rows = [
        [0, d01, d02, d03],
        [d01, 0, d12, ("var", 0)],
        [d02, d12, 0, Fraction(1)],
        [d03, ("var", 0), Fraction(1), 0],
    ]
    poly = cm_polynomial([[Fraction(0) if e == 0 else e for e in r] for r in rows], 1)
    direct = [[t if isinstance(e, tuple) else Fraction(e) for e in r] for r in rows]
    assert poly.evaluate_exact([t]) == cayley_menger_det(direct, exact=True)
    assert poly.degree_in(0) == 2


def test_scaling_and_embedding():
    x = Polynomial.variable(1, 0)
    p = x * x + 3 * x
    q = p.substitute_scale([2])
    assert q.evaluate_exact([1]) == p.evaluate_exact([2])
    e = p.embed(3, [2])
    assert e.evaluate_exact([7, 7, 2]) == p.evaluate_exact([2])


def test_cross_eliminants_vanish_on_solutions():
    # a_j(u) - alpha b_j(u) with common root alpha = 2, u = 1
    a, u = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    one = Polynomial.constant(2, 1)
    eqs = (u * u + one - a * (u * u), 3 * u - one - a * u, u + u * u - a * one)
    system = PolySystem(("alpha", "u"), eqs, kinds=("alpha", "length"))
    ext = with_cross_eliminants(system)
    assert len(ext.equations) == 6
    assert all(eq.evaluate_exact([2, 1]) == 0 for eq in ext.equations)
    assert all(eq.degree_in(0) == 0 for eq in ext.equations[3:])


def test_residuals_use_original_units():
    x = Polynomial.variable(1, 0)
    system = PolySystem(("x",), (x - Polynomial.constant(1, 1),), scales=(Fraction(4),))
    assert system.residuals([4.0])[0] == 0.0
    # |y - 1| over the sum of term magnitudes |y| + 1, at y = 2
    assert system.max_relative_residual([8.0]) == pytest.approx(1 / 3)


@given(fracs)
def test_from_fraction_encloses(q):
    lo, hi = iv.from_fraction(q)
    assert Fraction(lo) <= q <= Fraction(hi)


@given(fracs, fracs, fracs, fracs)
def test_interval_operations_enclose(a, b, c, d):
    A = (float(min(a, b)), float(max(a, b)))
    B = (float(min(c, d)), float(max(c, d)))
    for x in (A[0], A[1], sum(A) / 2):
        for y in (B[0], B[1], sum(B) / 2):
            for op, f in ((iv.add, lambda p, q: p + q), (iv.sub, lambda p, q: p - q), (iv.mul, lambda p, q: p * q)):
                lo, hi = op(A, B)
                assert lo <= f(x, y) <= hi
            lo, hi = iv.sqr(A)
            assert lo <= x * x <= hi


@given(fracs, fracs, fracs, fracs, fracs)
def test_quad_range_contains_samples(a, b, c, p, q):
    lo, hi = sorted((float(p), float(q)))
    r = iv.quad_range(float(a), float(b), float(c), lo, hi)
    for k in range(11):
        x = lo + (hi - lo) * k / 10
        v = float(a) * x * x + float(b) * x + float(c)
        assert r[0] - 1e-9 * (1 + abs(v)) <= v <= r[1] + 1e-9 * (1 + abs(v))
