import json
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import decreasing_curves, supplies
from serial_monopoly.curve import (AtomCurve, CurveError, DemandCurve, canonicalize,
                                   revenue_maximizer, to_fraction)


def glued(intercept, knee):
    """Steeper line below ``knee`` glued onto 1 - p above it."""
    return DemandCurve.from_points([(0, intercept), (knee, 1 - knee), (1, 0)])


def second_day_demand():
    # 1/2 - p carried over from day one, plus fresh 1 - p
    return DemandCurve.from_points([(0, F(1, 2)), (F(1, 2), 0)]) + DemandCurve.linear(1, 1)


# ---- evaluation and inversion ----

def test_eval_examples(uniform):
    assert uniform(F(1, 2)) == F(1, 2)
    assert uniform(2) == 0
    d2 = second_day_demand()
    assert d2(F(1, 4)) == 1


def test_eval_below_support_is_constant():
    c = DemandCurve.from_points([(1, 3), (2, 0)])
    assert c(0) == 3 and c(F(1, 2)) == 3


def test_inverse_examples(uniform):
    assert uniform.inverse(1) == 0
    assert uniform.inverse(F(3, 4)) == F(1, 4)
    assert uniform.inverse(F(1, 2)) == F(1, 2)
    with pytest.raises(CurveError):
        uniform.inverse(F(3, 2))
    with pytest.raises(CurveError):
        uniform.inverse(-1)


def test_inverse_on_flat_part_is_largest_price():
    c = DemandCurve.from_points([(0, 2), (1, 1), (2, 1), (3, 0)])
    assert c.inverse(1) == 2


# ---- addition ----

def test_add_examples(uniform):
    double = uniform + uniform
    assert double.points == ((0, 2), (1, 0))
    z1 = DemandCurve.from_points([(0, F(1, 2)), (F(1, 2), 0)])
    d2 = z1 + uniform
    for p in (0, F(1, 8), F(1, 4), F(3, 8)):
        assert d2(p) == F(3, 2) - 2 * p
    assert uniform + DemandCurve.zero() == uniform


@given(decreasing_curves(), decreasing_curves(), st.fractions(0, 12, max_denominator=16))
def test_add_is_pointwise(a, b, p):
    assert (a + b)(p) == a(p) + b(p)


# ---- residual ----

def test_residual_examples(uniform):
    z1 = uniform.residual_after_sale(F(1, 2), F(1, 2))
    assert z1.points == ((0, F(1, 2)), (F(1, 2), 0))
    d2 = second_day_demand()
    z2 = d2.residual_after_sale(F(3, 8), F(3, 4))
    assert z2.points == ((0, F(3, 4)), (F(3, 8), 0))
    assert uniform.residual_after_sale(0, 1) == DemandCurve.zero()


def test_residual_rejects_unclearing_sale(uniform):
    with pytest.raises(CurveError):
        uniform.residual_after_sale(F(1, 2), F(1, 4))


def test_residual_at_atom_keeps_unsold_part():
    c = DemandCurve.from_points([(0, 1), (F(1, 4), F(3, 4)), (F(1, 4), 0)])
    z = c.residual_after_sale(F(1, 4), F(1, 2))
    assert z(F(1, 4)) == F(1, 4) and z.right_limit(F(1, 4)) == 0 and z(0) == F(1, 2)


@given(decreasing_curves(), st.fractions(0, 12, max_denominator=16), st.fractions(0, 12, max_denominator=16))
def test_residual_identity(d, price, probe):
    q = d(price)
    z = d.residual_after_sale(price, q)
    if probe <= price:
        assert z(probe) == d(probe) - q
    else:
        assert z(probe) == 0
    assert z.is_continuous()


# ---- welfare ----

def test_welfare_examples(uniform):
    assert uniform.welfare_above(0) == F(1, 2)
    assert uniform.welfare_above(F(1, 4)) == F(15, 32)
    assert uniform.welfare_above(F(1, 2)) == F(3, 8)


@settings(max_examples=50)
@given(decreasing_curves(), st.fractions(0, 10, max_denominator=8))
def test_welfare_matches_riemann_sum(d, p):
    # midpoint rule on a fine grid, independent of the polygon formula
    top = d.p_max if d.points else 0
    n = 4000
    if top <= p:
        assert d.welfare_above(p) == p * d(p)
        return
    h = (float(top) - float(p)) / n
    approx = float(p) * float(d(p)) + sum(float(d(F(p) + F(h) * (i + F(1, 2)))) * h for i in range(n))
    assert abs(float(d.welfare_above(p)) - approx) < 1e-3


# ---- revenue maximization ----

def test_maximizer_examples(uniform):
    assert revenue_maximizer(uniform, 1) == (F(1, 2), F(1, 2), F(1, 4))
    assert revenue_maximizer(second_day_demand(), 1) == (F(3, 8), F(3, 4), F(9, 32))
    d4 = glued(F(15, 8), F(7, 24))
    assert revenue_maximizer(d4, 1) == (F(1, 2), F(1, 2), F(1, 4))


def test_maximizer_degenerate():
    with pytest.raises(CurveError):
        revenue_maximizer(DemandCurve.zero(), 1)
    atom_at_zero = DemandCurve.from_points([(0, 2), (0, 0)])
    with pytest.raises(CurveError):
        revenue_maximizer(atom_at_zero, 1)
    assert revenue_maximizer(atom_at_zero, 1, zero_revenue="clear") == (0, 1, 0)


def test_maximizer_tie_goes_to_largest_price():
    # revenue 2 at p=1 (capped at s=2) and at p=2 (demand 1)
    c = DemandCurve.from_points([(0, 3), (1, 3), (1, 1), (2, 1), (2, 0)])
    assert revenue_maximizer(c, 2)[0] == 2


@settings(max_examples=60)
@given(decreasing_curves(), supplies)
def test_maximizer_beats_grid(d, s):
    p, q, rev = revenue_maximizer(d, s)
    assert q == min(s, d(p)) and rev == p * q
    top = d.p_max
    for i in range(0, 2001):
        g = top * F(i, 2000)
        assert g * min(s, d(g)) <= rev


def test_maximizer_beats_dense_grid_uniform(uniform):
    _, _, rev = revenue_maximizer(uniform, 1)
    assert max(F(i, 10_000) * uniform(F(i, 10_000)) for i in range(10_001)) <= rev


# ---- canonicalize and validation ----

def test_canonicalize_examples(uniform):
    assert canonicalize([(0, 1), (F(1, 2), F(1, 2)), (1, 0)]) == [(0, 1), (1, 0)]
    assert canonicalize(list(uniform.points)) == list(uniform.points)


def test_double_then_canonical_has_two_points(uniform):
    rng = random.Random(3)
    double = uniform + uniform
    assert len(double) == 2
    for _ in range(1000):
        p = F(rng.randint(0, 10**6), rng.randint(1, 10**6))
        assert double(p) == 2 * uniform(p)


@given(decreasing_curves(strict=False))
def test_canonicalize_idempotent(d):
    assert canonicalize(list(d.points)) == list(d.points)


def test_validation():
    with pytest.raises(CurveError):
        DemandCurve(((0, 1), (1, 2), (2, 0)))
    with pytest.raises(CurveError):
        DemandCurve(((0, 1), (1, F(1, 2))))
    with pytest.raises(CurveError):
        DemandCurve(((-1, 1), (1, 0)))
    with pytest.raises(CurveError):
        to_fraction("abc")


def test_strictness_flags():
    flat = DemandCurve.from_points([(0, 2), (1, 1), (2, 1), (3, 0)])
    assert not flat.is_strictly_decreasing()
    assert DemandCurve.linear(1, 1).is_strictly_decreasing()


def test_exact_parsing():
    assert to_fraction("0.1") == F(1, 10)
    assert to_fraction("7/24") == F(7, 24)
    assert to_fraction(0.5) == F(1, 2)


def test_json_roundtrip():
    c = DemandCurve.from_points([(0, F(3, 2)), (F(3, 8), F(3, 4)), (1, 0)])
    text = c.to_json()
    assert json.loads(text) == [["0", "3/2"], ["3/8", "3/4"], ["1", "0"]]
    assert DemandCurve.from_json(text) == c
    assert DemandCurve.from_json(text).to_json() == text


def test_float_mode_roundtrip(uniform):
    f = uniform.to_float()
    assert not f.is_exact and f(0.25) == 0.75
    assert f.to_exact() == uniform


# ---- atoms ----

def test_atom_curve_multiset():
    a = AtomCurve(((F(5), F(2), 0), (F(5), F(3), 1), (F(10), F(1), 2)))
    assert a(5) == 6 and a(6) == 1 and a(11) == 0
    assert a.prices() == [10, 5] and a.total() == 6
    with pytest.raises(CurveError):
        AtomCurve(((F(1), F(0), 0),))
