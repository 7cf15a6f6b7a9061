import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from idcert.field import (
    ZeroInverse,
    arith,
    base_field,
    make_field,
    parse_field_header,
    regular_rep,
    sample,
)


def brute_force_irreducibles(p, k):
    """All monic irreducible degree-k polynomials over GF(p), by trial division."""
    def poly_mul(a, b):
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
        return out

    all_monic = {}
    for deg in range(1, k + 1):
        polys = []
        for idx in range(p**deg):
            c, t = [], idx
            for _ in range(deg):
                c.append(t % p)
                t //= p
            polys.append(tuple(c) + (1,))
        all_monic[deg] = polys

    reducible = set()
    for d1 in range(1, k):
        d2 = k - d1
        if d2 < 1:
            continue
        for a in all_monic[d1]:
            for b in all_monic[d2]:
                reducible.add(tuple(poly_mul(list(a), list(b))))
    return [q for q in all_monic[k] if q not in reducible]


def test_make_field_prime_and_rationals():
    gf2 = make_field(2, 1)
    assert gf2.kind == "prime" and gf2.modulus is None
    q = make_field(0)
    assert q.kind == "rationals"
    with pytest.raises(ValueError):
        make_field(4)


def test_make_field_gf4_modulus():
    gf4 = make_field(2, 2)
    # the only monic irreducible quadratic over GF(2) is z^2+z+1
    assert gf4.modulus == (1, 1, 1)
    assert brute_force_irreducibles(2, 2) == [(1, 1, 1)]


def test_make_field_gf9_modulus_smallest_lex():
    gf9 = make_field(3, 2)
    irr = brute_force_irreducibles(3, 2)
    smallest = min(irr, key=lambda c: c[:-1])
    assert gf9.modulus == smallest


def test_prime_arith_basics():
    gf5 = make_field(5)
    assert arith("add", gf5, 2, 3) == 0
    assert arith("inv", gf5, 2) == 3
    assert gf5.mul(2, 3) == 1
    with pytest.raises(ZeroInverse):
        gf5.inv(0)


def test_gf4_omega_square():
    gf4 = make_field(2, 2)
    w = gf4.gen()
    assert gf4.mul(w, w) == (1, 1)  # w^2 = w + 1


@pytest.mark.parametrize("p,k", [(2, 1), (3, 1), (2, 2), (2, 3), (3, 2), (2, 4)])
def test_field_axioms_exhaustive_small(p, k):
    fd = make_field(p, k)
    els = fd.elements()
    if len(els) > 16:
        rng = random.Random(7)
        triples = [(rng.choice(els), rng.choice(els), rng.choice(els)) for _ in range(200)]
    else:
        triples = [(a, b, c) for a in els for b in els for c in els]
    for a, b, c in triples:
        assert fd.add(fd.add(a, b), c) == fd.add(a, fd.add(b, c))
        assert fd.mul(fd.mul(a, b), c) == fd.mul(a, fd.mul(b, c))
        assert fd.mul(a, fd.add(b, c)) == fd.add(fd.mul(a, b), fd.mul(a, c))
        assert fd.add(a, fd.neg(a)) == fd.zero()
    for a in els:
        if not fd.is_zero(a):
            assert fd.mul(a, fd.inv(a)) == fd.one()


@pytest.mark.parametrize("p,k", [(2, 2), (2, 3), (3, 2)])
def test_regular_rep_is_ring_homomorphism(p, k):
    fd = make_field(p, k)
    base = base_field(fd)

    def mat_mul(A, B):
        n = len(A)
        return tuple(
            tuple(sum(A[i][t] * B[t][j] for t in range(n)) % p for j in range(n))
            for i in range(n)
        )

    def mat_add(A, B):
        return tuple(tuple((x + y) % p for x, y in zip(ra, rb)) for ra, rb in zip(A, B))

    els = fd.elements()
    for a in els:
        for b in els:
            assert regular_rep(fd, fd.add(a, b)) == mat_add(regular_rep(fd, a), regular_rep(fd, b))
            assert regular_rep(fd, fd.mul(a, b)) == mat_mul(regular_rep(fd, a), regular_rep(fd, b))
    # injectivity
    seen = {regular_rep(fd, a) for a in els}
    assert len(seen) == len(els)
    # base field elements map to scalar matrices
    for n in range(p):
        m = regular_rep(fd, fd.from_int(n))
        for i in range(k):
            for j in range(k):
                assert m[i][j] == (n if i == j else 0)


def test_regular_rep_omega_gf4():
    gf4 = make_field(2, 2)
    assert regular_rep(gf4, gf4.gen()) == ((0, 1), (1, 1))
    assert regular_rep(gf4, gf4.one()) == ((1, 0), (0, 1))


def test_sample_deterministic_and_in_range():
    gf2 = make_field(2)
    assert sample(gf2, 123) in (0, 1)
    assert sample(gf2, 99) == sample(gf2, 99)
    gf4 = make_field(2, 2)
    assert sample(gf4, 5) == sample(gf4, 5)


def test_sample_uniformity_chi_square():
    gf7 = make_field(7)
    n = 10**4
    counts = [0] * 7
    for s in range(n):
        counts[sample(gf7, s)] += 1
    expect = n / 7
    sigma = (n * (1 / 7) * (6 / 7)) ** 0.5
    for c in counts:
        assert abs(c - expect) < 5 * sigma


@given(
    st.integers(min_value=-(2**63), max_value=2**63),
    st.integers(min_value=1, max_value=2**63),
    st.integers(min_value=-(2**63), max_value=2**63),
    st.integers(min_value=1, max_value=2**63),
)
def test_rational_arithmetic_exact(a, b, c, d):
    q = make_field(0)
    x, y = Fraction(a, b), Fraction(c, d)
    assert (q.add(x, y)) * b * d == a * d + c * b
    assert q.mul(x, y) == Fraction(a * c, b * d)


def test_field_header_roundtrip():
    for fd in [make_field(0), make_field(2), make_field(7), make_field(2, 2), make_field(3, 2)]:
        assert parse_field_header(fd.header()) == fd


def test_elem_format_roundtrip():
    rng = random.Random(3)
    for fd in [make_field(0), make_field(5), make_field(2, 3)]:
        for _ in range(20):
            a = fd.rand(rng)
            assert fd.parse_elem(fd.format_elem(a)) == a


def test_pow_matches_repeated_mul():
    gf9 = make_field(3, 2)
    for a in gf9.elements():
        acc = gf9.one()
        for e in range(5):
            assert gf9.pow(a, e) == acc
            acc = gf9.mul(acc, a)
        if not gf9.is_zero(a):
            assert gf9.mul(gf9.pow(a, -1), a) == gf9.one()
