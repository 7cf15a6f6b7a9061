import random
from fractions import Fraction

import pytest

from idcert.circuit import BudgetExceeded, Circuit
from idcert.field import make_field
from idcert.pit import (
    RationalFunction,
    SparsePoly,
    TowerField,
    equiv,
    equiv_random,
    expand,
    is_defined,
    tower_for,
)

from helpers import random_circuit, random_point


def test_expand_square_over_q():
    st = Circuit(make_field(0))
    x = st.var("x")
    f = st.mul(st.add(x, st.const(1)), st.add(x, st.const(1)))
    p = expand(st, f)
    assert p.terms == {
        (("x", 2),): Fraction(1),
        (("x", 1),): Fraction(2),
        (): Fraction(1),
    }


def test_expand_division_pair_no_reduction():
    st = Circuit(make_field(0), allow_division=True)
    x = st.var("x")
    f = st.mul(st.inv(x), x)
    rf = expand(st, f)
    assert isinstance(rf, RationalFunction)
    assert rf.num == SparsePoly.var(st.field, "x")
    assert rf.den == SparsePoly.var(st.field, "x")


def test_expand_budget():
    st = Circuit(make_field(2))
    # (x1+y1)(x2+y2)... product of 25 distinct sums has 2^25 monomials
    cur = None
    for i in range(25):
        s = st.add(st.var(f"x{i}"), st.var(f"y{i}"))
        cur = s if cur is None else st.mul(cur, s)
    with pytest.raises(BudgetExceeded):
        expand(st, cur, budget=10**4)


def test_equiv_random_commutativity():
    st = Circuit(make_field(5))
    x, y = st.var("x"), st.var("y")
    assert equiv_random(st, st.add(x, y), st.add(y, x))


def test_equiv_random_frobenius_catch_over_gf2():
    st = Circuit(make_field(2))
    x = st.var("x")
    sq = st.mul(x, x)
    res = equiv_random(st, sq, x)
    assert not res.equal
    assert res.witness is not None


def test_equiv_random_agrees_with_expansion():
    rng = random.Random(77)
    fd = make_field(5)
    agree = 0
    for _ in range(150):
        st = Circuit(fd)
        f = random_circuit(st, rng, rng.randrange(1, 20))
        g = random_circuit(st, rng, rng.randrange(1, 20))
        exact = expand(st, f) == expand(st, g)
        randomized = bool(equiv_random(st, f, g, seed=3))
        if exact:
            # zero false negatives allowed
            assert randomized
        agree += exact == randomized
    assert agree == 150  # error prob < 2^-40 makes disagreement implausible


def test_equiv_random_error_bits():
    st = Circuit(make_field(2))
    x, y = st.var("x"), st.var("y")
    res = equiv_random(st, st.add(x, y), st.add(y, x))
    assert res.error_bits >= 40


def test_is_defined_examples():
    st = Circuit(make_field(2), allow_division=True)
    x = st.var("x")
    good = st.inv(st.add(st.mul(x, x), x))  # (x^2+x)^-1 defined over GF(2)
    assert is_defined(st, good)
    bad = st.inv(st.sub(x, x))
    assert not is_defined(st, bad)


def test_is_defined_nested():
    st = Circuit(make_field(3), allow_division=True)
    x = st.var("x")
    inner = st.inv(x)
    outer = st.inv(st.sub(inner, inner))  # (x^-1 - x^-1)^-1 undefined
    assert not is_defined(st, outer)


def test_expand_eval_consistency():
    rng = random.Random(5)
    fd = make_field(11)
    for _ in range(100):
        st = Circuit(fd)
        f = random_circuit(st, rng, rng.randrange(1, 25))
        p = expand(st, f)
        pt = random_point(fd, {"x", "y", "z"}, rng)
        assert p.eval(pt) == st.evaluate(f, pt)


def test_tower_field_axioms():
    base = make_field(2)
    tw = tower_for(base, 2**20)
    assert tw.order >= 2**20
    rng = random.Random(1)
    for _ in range(50):
        a, b, c = tw.rand(rng), tw.rand(rng), tw.rand(rng)
        assert tw.mul(tw.mul(a, b), c) == tw.mul(a, tw.mul(b, c))
        assert tw.mul(a, tw.add(b, c)) == tw.add(tw.mul(a, b), tw.mul(a, c))
        if not tw.is_zero(a):
            assert tw.mul(a, tw.inv(a)) == tw.one()


def test_tower_field_over_extension_base():
    base = make_field(2, 2)
    tw = tower_for(base, 5000)
    rng = random.Random(2)
    for _ in range(25):
        a = tw.rand(rng)
        if not tw.is_zero(a):
            assert tw.mul(tw.inv(a), a) == tw.one()


def test_equiv_exact_and_random_paths():
    st = Circuit(make_field(0), allow_division=True)
    x, y = st.var("x"), st.var("y")
    lhs = st.add(st.inv(x), st.inv(y))  # 1/x + 1/y
    num = st.add(x, y)
    rhs = st.mul(num, st.inv(st.mul(x, y)))  # (x+y)/(xy)
    assert equiv(st, lhs, rhs)
    assert not equiv(st, st.inv(x), st.inv(y))


def test_sparsepoly_homogeneous_component():
    fd = make_field(0)
    st = Circuit(fd)
    x, y = st.var("x"), st.var("y")
    f = st.mul(st.add(x, st.const(1)), st.add(y, st.const(2)))
    p = expand(st, f)
    h1 = p.homogeneous_component(1)
    assert h1.terms == {(("x", 1),): Fraction(2), (("y", 1),): Fraction(1)}


def test_sparsepoly_coeff_of_power():
    fd = make_field(0)
    st = Circuit(fd)
    x, z = st.var("x"), st.var("z")
    f = st.add(st.mul(x, st.mul(z, z)), st.mul(st.var("y"), z))
    p = expand(st, f)
    assert p.coeff_of_power("z", 2) == SparsePoly.var(fd, "x")
    assert p.coeff_of_power("z", 1) == SparsePoly.var(fd, "y")
