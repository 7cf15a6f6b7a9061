import pytest

from idcert.circuit import ADD, MUL, Circuit
from idcert.field import make_field
from idcert.proof import (
    Proof,
    SYSTEM_CIRCUIT,
    SYSTEM_DIVISION,
    SYSTEM_FORMULA,
    ParseError,
    check,
    check_line,
    metrics,
    parse,
    serialize,
)
from idcert.proofbuild import Prover


def test_comm_axiom_line_ok():
    st = Circuit(make_field(5))
    x, y = st.var("x"), st.var("y")
    p = Proof(SYSTEM_CIRCUIT, st, [(st.add(x, y), st.add(y, x), ("ax", "A2"))])
    assert check(p) is None


def test_bad_a8_line():
    st = Circuit(make_field(5))
    x = st.var("x")
    p = Proof(SYSTEM_CIRCUIT, st, [(st.mul(x, st.const(0)), st.const(1), ("ax", "A8"))])
    v = check(p)
    assert v is not None and v.line == 0
    assert str(v).startswith("VIOLATION l0:")


def test_d_axiom_with_side_condition():
    st = Circuit(make_field(2), allow_division=True)
    x = st.var("x")
    f = st.add(st.mul(x, x), x)  # x^2 + x, nonzero as a polynomial
    line = (st.mul(f, st.inv(f)), st.const(1), ("ax", "D"))
    p = Proof(SYSTEM_DIVISION, st, [line])
    assert check(p) is None
    # undefined inverse must be rejected
    g = st.sub(x, x)
    bad = Proof(SYSTEM_DIVISION, st, [(st.mul(g, st.inv(g)), st.const(1), ("ax", "D"))])
    v = check(bad)
    assert v is not None and "defined" in v.reason


def test_d_axiom_forbidden_outside_pci():
    st = Circuit(make_field(2), allow_division=True)
    x = st.var("x")
    line = (st.mul(x, st.inv(x)), st.const(1), ("ax", "D"))
    p = Proof(SYSTEM_CIRCUIT, st, [line])
    assert check(p) is not None


def test_division_gate_rejected_in_pc():
    st = Circuit(make_field(2), allow_division=True)
    x = st.var("x")
    iv = st.inv(x)
    p = Proof(SYSTEM_CIRCUIT, st, [(iv, iv, ("ax", "A1"))])
    v = check(p)
    assert v is not None and "division" in v.reason


def test_pf_requires_formulas():
    st = Circuit(make_field(2))
    x = st.var("x")
    shared = st.add(x, x)
    p = Proof(SYSTEM_FORMULA, st, [(shared, shared, ("ax", "A1"))])
    v = check(p)
    assert v is not None and "formula" in v.reason
    tree = st.add(st.var("x"), st.var("x"))
    p2 = Proof(SYSTEM_FORMULA, st, [(tree, tree, ("ax", "A1"))])
    assert check(p2) is None


def test_three_line_assoc_proof():
    st = Circuit(make_field(5))
    x, y, z = st.var("x"), st.var("y"), st.var("z")
    l0 = (st.add(x, st.add(y, z)), st.add(st.add(x, y), z), ("ax", "A3"))
    l1 = (l0[1], l0[0], ("r1", 0))
    l2 = (l0[0], l0[0], ("r2", 0, 1))
    p = Proof(SYSTEM_CIRCUIT, st, [l0, l1, l2])
    assert check(p) is None


def test_rule_citing_later_line_rejected():
    st = Circuit(make_field(5))
    x, y = st.var("x"), st.var("y")
    l0 = (st.add(x, y), st.add(y, x), ("r1", 1))
    l1 = (st.add(y, x), st.add(x, y), ("ax", "A2"))
    p = Proof(SYSTEM_CIRCUIT, st, [l0, l1])
    v = check(p)
    assert v is not None and v.line == 0


def test_assumption_lines():
    st = Circuit(make_field(2))
    x, y = st.var("x"), st.var("y")
    asm = [(st.mul(x, y), st.const(1))]
    p = Proof(SYSTEM_CIRCUIT, st, [(st.mul(x, y), st.const(1), ("as", 0))], asm)
    assert check(p) is None
    bad = Proof(SYSTEM_CIRCUIT, st, [(st.mul(y, x), st.const(1), ("as", 0))], asm)
    assert check(bad) is not None


def test_d_forbidden_with_assumptions():
    st = Circuit(make_field(2), allow_division=True)
    x = st.var("x")
    asm = [(x, x)]
    line = (st.mul(x, st.inv(x)), st.const(1), ("ax", "D"))
    p = Proof(SYSTEM_DIVISION, st, [line], asm)
    assert check(p) is not None
    p2 = Proof(SYSTEM_DIVISION, st, [line], asm, allow_d_with_assumptions=True)
    assert check(p2) is None


def test_metrics_single_line():
    st = Circuit(make_field(2))
    x = st.var("x")
    p = Proof(SYSTEM_CIRCUIT, st, [(x, x, ("ax", "A1"))])
    m = metrics(p)
    assert m.line_count == 1
    assert m.size == 2
    assert m.max_depth == 0


def test_metrics_size_is_sum_of_sides():
    st = Circuit(make_field(2))
    x, y = st.var("x"), st.var("y")
    s = st.add(x, y)
    p = Proof(SYSTEM_CIRCUIT, st, [(s, s, ("ax", "A1")), (x, x, ("ax", "A1"))])
    assert metrics(p).size == 3 + 3 + 1 + 1


def test_serialize_parse_roundtrip():
    pr = Prover(SYSTEM_DIVISION, make_field(2, 2))
    x, y = pr.var("x"), pr.var("y")
    pr.comm(ADD, x, y)
    pr.congr_mul(pr.comm(ADD, x, y), pr.refl(pr.const(pr.st.field.gen())))
    pr.d_axiom(pr.add(x, pr.const(1)))
    text = serialize(pr.proof)
    p2 = parse(text)
    assert check(p2) is None
    assert serialize(p2) == text
    assert len(p2.lines) == len(pr.proof.lines)


def test_serialize_parse_assumptions():
    st = Circuit(make_field(3))
    x, y = st.var("x"), st.var("y")
    asm = [(st.mul(x, y), st.const(1))]
    p = Proof(SYSTEM_CIRCUIT, st, [(st.mul(x, y), st.const(1), ("as", 0))], asm)
    text = serialize(p)
    p2 = parse(text)
    assert check(p2) is None
    assert serialize(p2) == text


def test_parse_rejects_bad_citation():
    text = "proof pc\nfield gf 2\nn0 var x\nl0 n0 n0 r1 l0\n"
    with pytest.raises(ParseError):
        parse(text)


def test_parse_rejects_forward_node():
    text = "proof pc\nfield gf 2\nn0 add n1 n1\nn1 var x\nl0 n0 n0 ax A1\n"
    with pytest.raises(ParseError):
        parse(text)


def test_check_detects_tampering():
    pr = Prover(SYSTEM_CIRCUIT, make_field(2))
    x, y = pr.var("x"), pr.var("y")
    pr.comm(ADD, x, y)
    text = serialize(pr.proof)
    tampered = text.replace("ax A2", "ax A7")
    p = parse(tampered)
    v = check(p)
    assert v is not None and "A7" in v.reason
