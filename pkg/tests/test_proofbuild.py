import random

import pytest

from idcert.circuit import ADD, MUL, Circuit
from idcert.field import make_field
from idcert.pit import SparsePoly, equiv_random, expand
from idcert.proof import SYSTEM_CIRCUIT, SYSTEM_DIVISION, check, metrics
from idcert.proofbuild import NotEqual, Prover

from helpers import random_circuit


def checked(pr, pe):
    """Kernel-check the whole proof and the claimed endpoints of pe."""
    pe = pr.cite(pe)
    v = check(pr.proof)
    assert v is None, str(v)
    lhs, rhs, _ = pr.proof.lines[pe.idx]
    assert pr.st.cls[lhs] == pr.st.cls[pe.lhs]
    assert pr.st.cls[rhs] == pr.st.cls[pe.rhs]
    return pe


def pit_lines(pr, seed=0):
    for lhs, rhs, _ in pr.proof.lines:
        assert equiv_random(pr.st, lhs, rhs, seed=seed), pr.st.to_text(lhs)


def test_primitive_axioms_check():
    pr = Prover(SYSTEM_CIRCUIT, make_field(5))
    x, y, z = pr.var("x"), pr.var("y"), pr.var("z")
    checked(pr, pr.comm(ADD, x, y))
    checked(pr, pr.comm(MUL, x, y))
    checked(pr, pr.assoc(ADD, x, y, z))
    checked(pr, pr.assoc(MUL, x, y, z))
    checked(pr, pr.distrib(x, y, z))
    checked(pr, pr.add_zero(x))
    checked(pr, pr.mul_zero(x))
    checked(pr, pr.mul_one(x))
    checked(pr, pr.const_fact(ADD, 2, 3))
    checked(pr, pr.const_fact(MUL, 2, 3))
    pit_lines(pr)


def test_chain_and_congruence():
    pr = Prover(SYSTEM_CIRCUIT, make_field(5))
    x, y, z = pr.var("x"), pr.var("y"), pr.var("z")
    p1 = pr.comm(ADD, x, y)
    p2 = pr.comm(ADD, y, x)
    pe = pr.chain(p1, p2)  # add(x,y) = add(x,y)
    assert pr.st.cls[pe.lhs] == pr.st.cls[pe.rhs]
    pe2 = pr.congr_mul(p1, pr.refl(z))
    checked(pr, pe2)
    pit_lines(pr)


def test_cancel():
    for p in (0, 2, 5):
        pr = Prover(SYSTEM_CIRCUIT, make_field(p))
        x = pr.var("x")
        pe = pr.cancel(x)
        assert pr.is_zero(pe.rhs)
        checked(pr, pe)
        pit_lines(pr)


def test_to_tree_random_shuffles():
    rng = random.Random(3)
    for trial in range(25):
        pr = Prover(SYSTEM_CIRCUIT, make_field(7))
        leaves = [pr.var(f"v{i}") for i in range(rng.randrange(1, 9))]
        # random source tree
        def rand_tree(ls):
            if len(ls) == 1:
                return ls[0]
            k = rng.randrange(1, len(ls))
            return pr.add(rand_tree(ls[:k]), rand_tree(ls[k:]))
        src = rand_tree(list(leaves))
        perm = list(leaves)
        rng.shuffle(perm)
        tgt = rand_tree(perm)
        pe = pr.to_tree(ADD, src, tgt)
        assert pe.rhs == tgt or pr.st.cls[pe.rhs] == pr.st.cls[tgt]
        checked(pr, pe)
        pit_lines(pr, seed=trial)


def test_to_tree_mul():
    rng = random.Random(4)
    pr = Prover(SYSTEM_CIRCUIT, make_field(7))
    leaves = [pr.var(f"v{i}") for i in range(6)]
    src = pr.build_tree(MUL, leaves)
    perm = list(leaves)
    rng.shuffle(perm)
    tgt = pr.build_tree(MUL, perm)
    pe = pr.to_tree(MUL, src, tgt)
    checked(pr, pe)
    pit_lines(pr)


def test_to_tree_rejects_different_multisets():
    pr = Prover(SYSTEM_CIRCUIT, make_field(7))
    x, y = pr.var("x"), pr.var("y")
    with pytest.raises(NotEqual):
        pr.to_tree(ADD, pr.add(x, x), pr.add(x, y))


def test_collapse_sum():
    pr = Prover(SYSTEM_CIRCUIT, make_field(5))
    x, y = pr.var("x"), pr.var("y")
    z = pr.zero()
    n = pr.add(pr.add(x, z), pr.add(z, y))
    pe, m = pr.collapse_sum(n)
    assert m is not None and pr.st.kind[m] == ADD
    checked(pr, pe)
    n2 = pr.add(z, pr.add(z, z))
    pe2, m2 = pr.collapse_sum(n2)
    assert m2 is None and pr.is_zero(pe2.rhs)
    checked(pr, pe2)
    pit_lines(pr)


def test_collapse_prod():
    pr = Prover(SYSTEM_CIRCUIT, make_field(5))
    x, y = pr.var("x"), pr.var("y")
    one, z = pr.one(), pr.zero()
    pe, m, isz = pr.collapse_prod(pr.mul(pr.mul(x, one), y))
    assert not isz and m is not None
    checked(pr, pe)
    pe2, m2, isz2 = pr.collapse_prod(pr.mul(x, pr.mul(z, y)))
    assert isz2 and m2 is None
    checked(pr, pe2)
    pe3, m3, isz3 = pr.collapse_prod(pr.mul(one, one))
    assert not isz3 and m3 is None
    checked(pr, pe3)
    pit_lines(pr)


def test_distribute():
    pr = Prover(SYSTEM_CIRCUIT, make_field(7))
    x = pr.var("x")
    s = pr.add(pr.add(pr.var("a"), pr.var("b")), pr.var("c"))
    pe = pr.distribute_left(x, s)
    checked(pr, pe)
    pe2 = pr.distribute_right(s, x)
    checked(pr, pe2)
    t = pr.add(pr.var("u"), pr.var("v"))
    pe3 = pr.distribute_full(s, t)
    checked(pr, pe3)
    assert len(pr.op_leaves(ADD, pe3.rhs)) == 6
    pit_lines(pr)


def test_prove_linear_random():
    rng = random.Random(9)
    for p in (2, 5, 0):
        fd = make_field(p)
        for trial in range(20):
            pr = Prover(SYSTEM_CIRCUIT, fd)
            # random linear circuit: sums of consts/vars and const-scalings
            nodes = [pr.var(v) for v in "xyz"] + [pr.const(c) for c in (0, 1, 2, 3)]
            for _ in range(rng.randrange(1, 10)):
                r = rng.random()
                if r < 0.5:
                    nodes.append(pr.add(rng.choice(nodes), rng.choice(nodes)))
                else:
                    c = pr.const(rng.randrange(4))
                    nodes.append(pr.mul(c, rng.choice(nodes)) if rng.random() < 0.5
                                 else pr.mul(rng.choice(nodes), c))
            n = nodes[-1]
            if pr.st.syntactic_degree(n) > 1:
                continue
            poly, pe = pr.prove_linear(n)
            assert poly == expand(pr.st, n)
            assert pr.st.cls[pe.rhs] == pr.st.cls[pr.linform_node(poly)]
            checked(pr, pe)
            pit_lines(pr, seed=trial)


def test_prove_canonical_square():
    pr = Prover(SYSTEM_CIRCUIT, make_field(0))
    x, y = pr.var("x"), pr.var("y")
    s = pr.add(x, y)
    f = pr.mul(s, s)
    poly, pe = pr.prove_canonical(f)
    assert poly == expand(pr.st, f)
    checked(pr, pe)
    pit_lines(pr)


def test_prove_normalize_binomial():
    pr = Prover(SYSTEM_CIRCUIT, make_field(0))
    x, y = pr.var("x"), pr.var("y")
    s = pr.add(x, y)
    lhs = pr.mul(s, s)
    x2 = pr.mul(x, x)
    y2 = pr.mul(y, y)
    xy2 = pr.mul(pr.const(2), pr.mul(x, y))
    rhs = pr.add(pr.add(x2, xy2), y2)
    pe = pr.prove_normalize(lhs, rhs)
    assert (pe.lhs, pe.rhs) == (lhs, rhs)
    checked(pr, pe)
    pit_lines(pr)


def test_prove_normalize_not_equal():
    pr = Prover(SYSTEM_CIRCUIT, make_field(0))
    with pytest.raises(NotEqual):
        pr.prove_normalize(pr.var("x"), pr.var("y"))


def test_prove_normalize_random_corpus():
    rng = random.Random(21)
    fd = make_field(5)
    done = 0
    for trial in range(200):
        st = Circuit(fd, dedup=True)
        pr = Prover(SYSTEM_CIRCUIT, fd, store=st)
        f = random_circuit(st, rng, rng.randrange(1, 9))
        g = random_circuit(st, rng, rng.randrange(1, 9))
        if expand(st, f) != expand(st, g):
            continue
        pe = pr.prove_normalize(f, g)
        checked(pr, pe)
        done += 1
        if done >= 8:
            break
    assert done >= 3


def test_inv_lemmas():
    pr = Prover(SYSTEM_DIVISION, make_field(5))
    x, y = pr.var("x"), pr.var("y")
    pe = pr.inv_both_sides(pr.comm(ADD, x, y))
    checked(pr, pe)
    pe2 = pr.inv_inv(x)
    assert pe2.rhs == x
    checked(pr, pe2)
    pe3 = pr.inv_mul(x, y)
    checked(pr, pe3)
    pe4 = pr.cancel_inv_right(x, y)
    assert pe4.rhs == x
    checked(pr, pe4)
    pit_lines(pr)


def test_import_lines_substitution():
    fd = make_field(7)
    sub = Prover(SYSTEM_CIRCUIT, fd)
    a, b = sub.var("@a"), sub.var("@b")
    sub.comm(ADD, a, b)  # schema: @a+@b = @b+@a

    pr = Prover(SYSTEM_CIRCUIT, fd)
    x, y = pr.var("x"), pr.var("y")
    big = pr.mul(x, pr.add(x, y))
    out = pr.import_lines(sub, {"@a": big, "@b": y})
    pe = out[-1]
    assert pr.st.kind[pe.lhs] == ADD
    checked(pr, pe)
    pit_lines(pr)


def test_metrics_counts():
    pr = Prover(SYSTEM_CIRCUIT, make_field(2))
    x = pr.var("x")
    pr.cite(pr.refl(x))
    m = metrics(pr.proof)
    assert m.line_count == 1
    assert m.size == 2
