import math
import random

import pytest

from idcert.circuit import (
    BudgetExceeded,
    Circuit,
    CircuitMatrix,
    DivByZero,
    mat_from_vars,
    mat_identity,
    mat_ops,
    parse_bank,
    serialize_bank,
)
from idcert.field import make_field
from idcert.pit import SparsePoly, expand

from helpers import random_circuit, unfold_tree, leibniz_det, random_point


def test_balanced_sum_single_is_identity():
    st = Circuit(make_field(0))
    x = st.var("x")
    assert st.balanced_sum([x]) == x


def test_balanced_sum_four_vars_depth_and_size():
    st = Circuit(make_field(0))
    ids = [st.var(f"x{i}") for i in range(4)]
    root = st.balanced_sum(ids)
    assert st.depth(root) == 2
    assert st.size(root) == 7


def test_balanced_product_eight_vars():
    st = Circuit(make_field(7))
    ids = [st.var(f"x{i}") for i in range(8)]
    root = st.balanced_product(ids)
    assert st.depth(root) == 3
    rng = random.Random(0)
    for _ in range(10):
        pt = {f"x{i}": rng.randrange(7) for i in range(8)}
        want = 1
        for i in range(8):
            want = want * pt[f"x{i}"] % 7
        assert st.evaluate(root, pt) == want


@pytest.mark.parametrize("k", list(range(1, 40)) + [255, 256, 257, 1000, 1024])
def test_balanced_sum_depth_formula(k):
    st = Circuit(make_field(2))
    ids = [st.var(f"v{i}") for i in range(k)]
    assert st.depth(st.balanced_sum(ids)) == (math.ceil(math.log2(k)) if k > 1 else 0)


def test_evaluate_gf2():
    st = Circuit(make_field(2))
    x = st.var("x")
    r = st.add(x, st.const(1))
    assert st.evaluate(r, {"x": 1}) == 0


def test_evaluate_div_by_zero_reports_node():
    st = Circuit(make_field(2), allow_division=True)
    x = st.var("x")
    body = st.add(st.mul(x, x), x)  # x^2 + x vanishes on GF(2)
    iv = st.inv(body)
    with pytest.raises(DivByZero) as e:
        st.evaluate(iv, {"x": 1})
    assert e.value.node == iv


def test_evaluate_missing_binding():
    st = Circuit(make_field(2))
    x = st.var("x")
    with pytest.raises(KeyError):
        st.evaluate(x, {})


def test_metrics_degrees():
    st = Circuit(make_field(0), allow_division=True)
    x = st.var("x")
    assert st.syntactic_degree(st.add(st.mul(x, x), x)) == 2
    assert st.syntactic_degree(st.inv(x)) == 1  # num 1, den x
    assert st.syntactic_degree(st.const(0)) == 0


def test_metrics_size_counts_distinct_reachable():
    st = Circuit(make_field(0))
    x = st.var("x")
    s = st.add(x, x)  # shared leaf
    assert st.size(s) == 2
    assert st.tree_size(s) == 3
    assert not st.is_formula(s)
    t = st.add(st.var("x"), st.var("x"))
    assert st.is_formula(t)


def test_substitute_disjoint_copies():
    st = Circuit(make_field(0))
    x1, x2 = st.var("x"), st.var("x")
    f = st.add(x1, x2)  # x + x with two distinct x nodes
    y = st.var("y")
    g = st.substitute(f, "x", y)
    assert st.kind[g] == 2
    l, r = st.a[g], st.b[g]
    assert l != r and st.a[l] == "y" and st.a[r] == "y"


def test_substitute_preserves_formulas_and_size_bound():
    rng = random.Random(5)
    for _ in range(30):
        st = Circuit(make_field(5))
        f = random_circuit(st, rng, rng.randrange(1, 12))
        g = random_circuit(st, rng, rng.randrange(1, 6), var_names=("u",))
        zcount = sum(1 for i in st.reachable(f) if st.kind[i] == 1 and st.a[i] == "x")
        h = st.substitute(f, "x", g)
        assert st.size(h) <= st.size(f) + zcount * st.size(g)
        if st.is_formula(f) and st.is_formula(g):
            assert st.is_formula(h)


def test_substitute_expansion_commutes():
    rng = random.Random(9)
    fd = make_field(13)
    for _ in range(50):
        st = Circuit(fd)
        f = random_circuit(st, rng, rng.randrange(1, 10))
        g = random_circuit(st, rng, rng.randrange(1, 6))
        h = st.substitute(f, "x", g)
        pf, pg, ph = expand(st, f), expand(st, g), expand(st, h)
        # compose: evaluate both at random points
        for _ in range(5):
            pt = random_point(fd, {"x", "y", "z"}, rng)
            inner = pg.eval(pt)
            pt_comp = dict(pt, x=inner)
            assert ph.eval(pt) == pf.eval(pt_comp)


def test_similar_shared_vs_disjoint():
    st = Circuit(make_field(2))
    x = st.var("x")
    shared = st.add(x, x)
    disjoint = st.add(st.var("x"), st.var("x"))
    assert st.similar(shared, disjoint)
    y = st.var("y")
    assert not st.similar(st.add(x, y), st.add(y, x))


def test_similar_matches_unfolding_oracle():
    rng = random.Random(11)
    st = Circuit(make_field(3))
    roots = [random_circuit(st, rng, rng.randrange(1, 12)) for _ in range(100)]
    for a in roots[:40]:
        for b in roots[:40]:
            assert st.similar(a, b) == (unfold_tree(st, a) == unfold_tree(st, b))


def test_similar_implies_equal_expansion():
    rng = random.Random(12)
    st = Circuit(make_field(5))
    roots = [random_circuit(st, rng, rng.randrange(1, 10)) for _ in range(60)]
    for a in roots:
        for b in roots:
            if st.similar(a, b):
                assert expand(st, a) == expand(st, b)


def test_non_redundant_examples():
    st = Circuit(make_field(0))
    x = st.var("x")
    assert st.non_redundant(st.add(x, st.const(0))) == x
    r = st.non_redundant(st.add(st.mul(st.const(0), x), st.const(0)))
    assert st.is_zero_const(r)
    z = st.const(0)
    assert st.non_redundant(z) == z


def test_non_redundant_preserves_polynomial_and_is_zero_free():
    rng = random.Random(13)
    fd = make_field(7)
    for _ in range(100):
        st = Circuit(fd)
        f = random_circuit(st, rng, rng.randrange(1, 15))
        g = st.non_redundant(f)
        assert expand(st, f) == expand(st, g)
        if not st.is_zero_const(g):
            assert not any(st.is_zero_const(i) for i in st.reachable(g))


def test_unfold_budget():
    st = Circuit(make_field(2))
    x = st.var("x")
    cur = x
    for _ in range(40):
        cur = st.mul(cur, cur)
    with pytest.raises(BudgetExceeded):
        st.unfold(cur, budget=10**6)


def test_unfold_produces_formula():
    rng = random.Random(17)
    st = Circuit(make_field(5))
    f = random_circuit(st, rng, 12)
    t = st.unfold(f)
    assert st.is_formula(t)
    assert st.similar(f, t)


def test_mat_identity_times_x():
    fd = make_field(5)
    st = Circuit(fd)
    X = mat_from_vars(st, "x", 2)
    I = mat_identity(st, 2)
    P = mat_ops(I, X, "mul")
    for i in range(2):
        for j in range(2):
            want = SparsePoly.var(fd, f"x{i+1}{j+1}")
            assert expand(st, P.at(i, j)) == want


def test_mat_add_zero():
    fd = make_field(5)
    st = Circuit(fd)
    X = mat_from_vars(st, "x", 2)
    Z = CircuitMatrix(st, 2, 2, [st.const(0) for _ in range(4)])
    S = mat_ops(X, Z, "add")
    for i in range(2):
        for j in range(2):
            assert expand(st, S.at(i, j)) == SparsePoly.var(fd, f"x{i+1}{j+1}")


def test_mat_mul_associative_expansion():
    fd = make_field(7)
    st = Circuit(fd)
    X = mat_from_vars(st, "x", 2)
    Y = mat_from_vars(st, "y", 2)
    Z = mat_from_vars(st, "z", 2)
    A = mat_ops(mat_ops(X, Y, "mul"), Z, "mul")
    B = mat_ops(X, mat_ops(Y, Z, "mul"), "mul")
    for i in range(4):
        assert expand(st, A.entries[i]) == expand(st, B.entries[i])


def test_mat_dimension_mismatch():
    st = Circuit(make_field(2))
    A = mat_from_vars(st, "a", 2, 3)
    B = mat_from_vars(st, "b", 2, 3)
    with pytest.raises(ValueError):
        mat_ops(A, B, "mul")


def test_evaluate_agrees_with_expansion_corpus():
    rng = random.Random(23)
    fd = make_field(11)
    for _ in range(100):
        st = Circuit(fd)
        f = random_circuit(st, rng, rng.randrange(1, 30))
        poly = expand(st, f)
        for _ in range(3):
            pt = random_point(fd, {"x", "y", "z"}, rng)
            assert st.evaluate(f, pt) == poly.eval(pt)


def test_det_circuit_evaluation_n2_cofactor_oracle():
    # hand-built 2x2 determinant circuit over Q evaluated at [[1,2],[3,4]]
    st = Circuit(make_field(0))
    a, b, c, d = (st.var(v) for v in "abcd")
    det = st.sub(st.mul(a, d), st.mul(b, c))
    from fractions import Fraction
    got = st.evaluate(det, {"a": Fraction(1), "b": Fraction(2),
                            "c": Fraction(3), "d": Fraction(4)})
    assert got == Fraction(-2)


def test_bank_roundtrip():
    rng = random.Random(31)
    for fd in [make_field(0), make_field(2), make_field(2, 2)]:
        st = Circuit(fd, allow_division=True)
        roots = [random_circuit(st, rng, 8, p_div=0.1) for _ in range(3)]
        text = serialize_bank(st, roots)
        st2, idmap = parse_bank(text)
        assert serialize_bank(st2, [idmap[i] for i in sorted(idmap)][-3:]) is not None
        text2 = serialize_bank(st2, sorted(idmap.values()))
        assert text == text2


def test_bank_rejects_forward_reference():
    text = "field gf 2\nn0 add n1 n1\nn1 var x\n"
    with pytest.raises(ValueError):
        parse_bank(text)


def test_dedup_pass_preserves_class():
    st = Circuit(make_field(3))
    a = st.add(st.var("x"), st.var("y"))
    b = st.add(st.var("x"), st.var("y"))
    r = st.mul(a, b)
    d = st.dedup_pass(r)
    assert st.similar(r, d)
    assert st.size(d) < st.size(r)
