from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superode.grassmann import (
    EVEN,
    ODD,
    BudgetExhausted,
    BudgetMismatch,
    ConstantRegistry,
    GrassmannElement,
    SuperVector,
    basis_indices,
    merge_indices,
)

L = 4
fractions = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def elements(parity=None):
    idxs = basis_indices(range(1, L + 1), parity)
    return st.dictionaries(st.sampled_from(idxs), fractions, max_size=6).map(lambda d: GrassmannElement(L, d))


@settings(max_examples=150, deadline=None)
@given(elements(), elements(), elements())
def test_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@settings(max_examples=150, deadline=None)
@given(elements(), elements(), elements())
def test_distributive(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a + b) * c == a * c + b * c


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([EVEN, ODD]), st.sampled_from([EVEN, ODD]), st.data())
def test_graded_commutativity(pa, pb, data):
    a = data.draw(elements(pa))
    b = data.draw(elements(pb))
    sign = -1 if pa == pb == ODD else 1
    assert a * b == (b * a).scale(sign)


@settings(max_examples=100, deadline=None)
@given(elements(ODD))
def test_odd_squares_vanish(a):
    assert (a * a).is_zero()


@settings(max_examples=100, deadline=None)
@given(elements(), elements())
def test_body_is_a_ring_morphism(a, b):
    assert (a * b).body() == a.body() * b.body()
    assert (a + b).body() == a.body() + b.body()


@settings(max_examples=100, deadline=None)
@given(elements())
def test_inverse_when_body_nonzero(a):
    a = a + 1 - a.body() + 2  # body 3
    assert a * a.inverse() == GrassmannElement.one(L)
    assert a.inverse() * a == GrassmannElement.one(L)


def test_generators_anticommute():
    b1, b2 = GrassmannElement.generator(1, 3), GrassmannElement.generator(2, 3)
    assert b1 * b2 == -(b2 * b1)
    assert (b1 * b1).is_zero()
    assert (b1 * b2).coefficient((1, 2)) == 1
    assert (b2 * b1).coefficient((1, 2)) == -1


def test_merge_indices_sign():
    assert merge_indices((2,), (1,)) == (-1, (1, 2))
    assert merge_indices((1, 3), (2,)) == (-1, (1, 2, 3))
    assert merge_indices((1,), (1, 2)) is None


def test_parity_classification():
    b1 = GrassmannElement.generator(1, 2)
    b2 = GrassmannElement.generator(2, 2)
    assert b1.parity() == ODD
    assert (b1 * b2).parity() == EVEN
    assert (b1 + b1 * b2).parity() == "mixed"
    assert GrassmannElement.zero(2).parity() == "zero"


def test_nilpotent_power():
    b = GrassmannElement.generator(1, 2) * GrassmannElement.generator(2, 2)
    assert not (b ** 1).is_zero()
    assert (b ** 2).is_zero()


def test_inverse_of_nilpotent_raises():
    with pytest.raises(ZeroDivisionError):
        GrassmannElement.generator(1, 2).inverse()


def test_budget_mismatch():
    with pytest.raises(BudgetMismatch):
        GrassmannElement.generator(1, 2) + GrassmannElement.generator(1, 3)


def test_generator_out_of_budget():
    with pytest.raises(ValueError):
        GrassmannElement.generator(3, 2)


def test_json_round_trip():
    a = GrassmannElement(3, {(): Fraction(1, 2), (1, 3): -2})
    assert GrassmannElement.from_json(a.to_json()) == a


def test_registry_allocation_and_exhaustion():
    reg = ConstantRegistry(3)
    e = reg.allocate("e", ODD)
    k = reg.allocate("k", EVEN)
    assert e == GrassmannElement.generator(1, 3)
    assert k == GrassmannElement.monomial((2, 3), 3)
    assert reg.used == 3
    assert reg.format(e * k) == "e*k"
    with pytest.raises(BudgetExhausted):
        reg.allocate("f", ODD)
    with pytest.raises(ValueError):
        reg.allocate("e", ODD)


def test_supervector_parity_checked():
    b1 = GrassmannElement.generator(1, 2)
    one = GrassmannElement.one(2)
    v = SuperVector.from_pq([one, b1], 1, 1)
    assert (v.p, v.q) == (1, 1)
    with pytest.raises(ValueError):
        SuperVector.from_pq([b1, one], 1, 1)


def test_supervector_arithmetic():
    b1 = GrassmannElement.generator(1, 2)
    one = GrassmannElement.one(2)
    v = SuperVector.from_pq([one, b1], 1, 1)
    assert (v + v) == v.scale(2)
    assert (v - v).is_zero()
    assert (-v)[1] == -b1
