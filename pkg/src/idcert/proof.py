"""Certificate model and trusted kernel.

A proof is a list of equations over one shared circuit store, each line
justified by an axiom, an inference rule citing earlier lines, or an
assumption. The kernel checks structural side conditions only; circuit
equality means structural similarity (equal unfoldings), which the store
provides in O(1). The single semantic side condition, definedness of
inverted circuits in axiom D, is delegated to the pit oracle and recorded.

Axioms:  A1 reflexivity, A2/A3 +-comm/assoc, A4/A5 *-comm/assoc,
         A6 distributivity, A7 F+0=F, A8 F*0=0, A9 F*1=F,
         A10 constant identities, C1/C2 gate/operation bridges,
         D F*F^-1=1, A1p similarity.
Rules:   r1 symmetry, r2 transitivity, r3/r4 +/* congruence.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .circuit import ADD, CONST, INV, MUL, VAR, Circuit, parse_bank_lines, _OPNAME
from .field import parse_field_header

SYSTEM_FORMULA = "pf"
SYSTEM_CIRCUIT = "pc"
SYSTEM_DIVISION = "pci"
SYSTEMS = (SYSTEM_FORMULA, SYSTEM_CIRCUIT, SYSTEM_DIVISION)

AXIOMS = ("A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10",
          "C1", "C2", "D", "A1p")


@dataclass
class Violation:
    line: int
    reason: str

    def __str__(self):
        return f"VIOLATION l{self.line}: {self.reason}"


@dataclass
class ProofMetrics:
    size: int
    line_count: int
    max_depth: int
    max_syntactic_degree: int


@dataclass
class Proof:
    system: str
    store: Circuit
    lines: list[tuple[int, int, tuple]] = dc_field(default_factory=list)
    assumptions: list[tuple[int, int]] = dc_field(default_factory=list)
    allow_d_with_assumptions: bool = False

    @property
    def field(self):
        return self.store.field

    def final(self) -> tuple[int, int]:
        lhs, rhs, _ = self.lines[-1]
        return lhs, rhs


def _is_zero(store, i):
    return store.kind[i] == CONST and store.field.is_zero(store.a[i])


def _is_one(store, i):
    return store.kind[i] == CONST and store.field.is_one(store.a[i])


def _check_axiom(p: Proof, idx: int, name: str) -> str | None:
    """Returns an error string or None. Sides are (lhs, rhs) of line idx."""
    st = p.store
    lhs, rhs, _ = p.lines[idx]
    sim = st.similar
    kind, a, b = st.kind, st.a, st.b

    if name in ("A1", "A1p"):
        if not sim(lhs, rhs):
            return "sides are not similar circuits"
        return None
    if name == "A2":
        if kind[lhs] != ADD or kind[rhs] != ADD:
            return "both sides must be sums"
        if not (sim(a[lhs], b[rhs]) and sim(b[lhs], a[rhs])):
            return "rhs must be the commuted sum"
        return None
    if name == "A3":
        if not (kind[lhs] == ADD and kind[b[lhs]] == ADD and
                kind[rhs] == ADD and kind[a[rhs]] == ADD):
            return "expected F+(G+H) = (F+G)+H shape"
        f1, g1, h1 = a[lhs], a[b[lhs]], b[b[lhs]]
        f2, g2, h2 = a[a[rhs]], b[a[rhs]], b[rhs]
        if not (sim(f1, f2) and sim(g1, g2) and sim(h1, h2)):
            return "reassociated parts differ"
        return None
    if name == "A4":
        if kind[lhs] != MUL or kind[rhs] != MUL:
            return "both sides must be products"
        if not (sim(a[lhs], b[rhs]) and sim(b[lhs], a[rhs])):
            return "rhs must be the commuted product"
        return None
    if name == "A5":
        if not (kind[lhs] == MUL and kind[b[lhs]] == MUL and
                kind[rhs] == MUL and kind[a[rhs]] == MUL):
            return "expected F*(G*H) = (F*G)*H shape"
        f1, g1, h1 = a[lhs], a[b[lhs]], b[b[lhs]]
        f2, g2, h2 = a[a[rhs]], b[a[rhs]], b[rhs]
        if not (sim(f1, f2) and sim(g1, g2) and sim(h1, h2)):
            return "reassociated parts differ"
        return None
    if name == "A6":
        if not (kind[lhs] == MUL and kind[b[lhs]] == ADD and kind[rhs] == ADD and
                kind[a[rhs]] == MUL and kind[b[rhs]] == MUL):
            return "expected F*(G+H) = F*G + F*H shape"
        f, g, h = a[lhs], a[b[lhs]], b[b[lhs]]
        if not (sim(a[a[rhs]], f) and sim(a[b[rhs]], f) and
                sim(b[a[rhs]], g) and sim(b[b[rhs]], h)):
            return "distributed parts differ"
        return None
    if name == "A7":
        if kind[lhs] != ADD or not _is_zero(st, b[lhs]) or not sim(a[lhs], rhs):
            return "expected F+0 = F"
        return None
    if name == "A8":
        if kind[lhs] != MUL or not _is_zero(st, b[lhs]) or not _is_zero(st, rhs):
            return "expected F*0 = 0"
        return None
    if name == "A9":
        if kind[lhs] != MUL or not _is_one(st, b[lhs]) or not sim(a[lhs], rhs):
            return "expected F*1 = F"
        return None
    if name == "A10":
        for x, y in ((lhs, rhs), (rhs, lhs)):
            if kind[x] == CONST and kind[y] in (ADD, MUL) and \
                    kind[a[y]] == CONST and kind[b[y]] == CONST:
                op = st.field.add if kind[y] == ADD else st.field.mul
                if st.a[x] == op(st.a[a[y]], st.a[b[y]]):
                    return None
                return "constant equation does not hold in the field"
        return "expected a constant equation a = b+c or a = b*c"
    if name == "C1":
        if kind[lhs] != ADD or kind[rhs] != ADD or not sim(lhs, rhs):
            return "expected similar sums"
        return None
    if name == "C2":
        if kind[lhs] != MUL or kind[rhs] != MUL or not sim(lhs, rhs):
            return "expected similar products"
        return None
    if name == "D":
        if not (kind[lhs] == MUL and kind[b[lhs]] == INV and
                sim(a[lhs], a[b[lhs]]) and _is_one(st, rhs)):
            return "expected F * F^-1 = 1"
        return None  # definedness handled by caller
    return f"unknown axiom {name!r}"


def check_line(p: Proof, idx: int, pit_defined=None) -> Violation | None:
    """Validate one line assuming earlier lines are structurally valid.

    pit_defined: optional callable (store, inv_node) -> bool used for axiom D
    side conditions; defaults to the pit oracle.
    """
    st = p.store
    lhs, rhs, just = p.lines[idx]
    if not (0 <= lhs < len(st) and 0 <= rhs < len(st)):
        return Violation(idx, "equation references unknown nodes")

    if p.system != SYSTEM_DIVISION:
        if st.has_division(lhs) or st.has_division(rhs):
            return Violation(idx, f"division gate in a {p.system} proof")
    if p.system == SYSTEM_FORMULA:
        if not (st.is_formula(lhs) and st.is_formula(rhs)):
            return Violation(idx, "sides of a pf line must be formulas")

    tag = just[0]
    if tag == "ax":
        name = just[1]
        if name in ("C1", "C2") and p.system == SYSTEM_FORMULA:
            return Violation(idx, f"axiom {name} is not available in pf")
        if name == "D":
            if p.system != SYSTEM_DIVISION:
                return Violation(idx, "axiom D needs the division system")
            if p.assumptions and not p.allow_d_with_assumptions:
                return Violation(idx, "axiom D forbidden in proofs from assumptions")
        err = _check_axiom(p, idx, name)
        if err:
            return Violation(idx, f"axiom {name}: {err}")
        if name == "D":
            checker = pit_defined
            if checker is None:
                from .pit import is_defined
                checker = lambda store, node: is_defined(store, node)
            if not checker(st, p.store.b[lhs]):
                return Violation(idx, "axiom D: inverted circuit is not defined")
        return None

    if tag == "as":
        k = just[1]
        if not 0 <= k < len(p.assumptions):
            return Violation(idx, f"assumption index {k} out of range")
        al, ar = p.assumptions[k]
        if not (st.similar(lhs, al) and st.similar(rhs, ar)):
            return Violation(idx, "line does not match the cited assumption")
        return None

    cits = just[1:]
    for c in cits:
        if not 0 <= c < idx:
            return Violation(idx, f"rule cites line {c}, not strictly earlier")
    if tag == "r1":
        pl, pr, _ = p.lines[cits[0]]
        if not (st.similar(lhs, pr) and st.similar(rhs, pl)):
            return Violation(idx, "r1: not the symmetric equation")
        return None
    if tag == "r2":
        l1, r1, _ = p.lines[cits[0]]
        l2, r2, _ = p.lines[cits[1]]
        if not st.similar(r1, l2):
            return Violation(idx, "r2: middle terms differ")
        if not (st.similar(lhs, l1) and st.similar(rhs, r2)):
            return Violation(idx, "r2: endpoints differ from cited lines")
        return None
    if tag in ("r3", "r4"):
        want = ADD if tag == "r3" else MUL
        if p.store.kind[lhs] != want or p.store.kind[rhs] != want:
            return Violation(idx, f"{tag}: conclusion has the wrong top gate")
        l1, r1, _ = p.lines[cits[0]]
        l2, r2, _ = p.lines[cits[1]]
        if not (st.similar(st.a[lhs], l1) and st.similar(st.b[lhs], l2) and
                st.similar(st.a[rhs], r1) and st.similar(st.b[rhs], r2)):
            return Violation(idx, f"{tag}: sides are not the cited combination")
        return None
    return Violation(idx, f"unknown justification {tag!r}")


def check(p: Proof, pit_verify: bool = False, seed: int = 0,
          pit_defined=None) -> Violation | None:
    """Check the whole proof; returns the first violation, if any.

    pit_verify additionally cross-checks every line with the randomized
    identity oracle (error below 2^-40 per line).
    """
    if p.system not in SYSTEMS:
        return Violation(0, f"unknown system {p.system!r}")
    for idx in range(len(p.lines)):
        v = check_line(p, idx, pit_defined=pit_defined)
        if v:
            return v
    if pit_verify:
        from .pit import equiv_random
        for idx, (lhs, rhs, _) in enumerate(p.lines):
            if p.assumptions:
                break  # lines need not be identities under assumptions
            if not equiv_random(p.store, lhs, rhs, seed=seed):
                return Violation(idx, "randomized identity check failed")
    return None


def metrics(p: Proof) -> ProofMetrics:
    st = p.store
    size = 0
    max_depth = 0
    max_deg = 0
    size_cache: dict[int, int] = {}
    for lhs, rhs, _ in p.lines:
        for side in (lhs, rhs):
            if side not in size_cache:
                size_cache[side] = st.size(side)
            size += size_cache[side]
            max_depth = max(max_depth, st.depth(side))
            max_deg = max(max_deg, st.syntactic_degree(side))
    return ProofMetrics(size, len(p.lines), max_depth, max_deg)


# ---------------------------------------------------------------------------
# proof file format
# ---------------------------------------------------------------------------

def _just_text(just: tuple) -> str:
    tag = just[0]
    if tag == "ax":
        return f"ax {just[1]}"
    if tag == "as":
        return f"as {just[1]}"
    return " ".join([tag] + [f"l{c}" for c in just[1:]])


def serialize(p: Proof) -> str:
    st = p.store
    roots = set()
    for lhs, rhs, _ in p.lines:
        roots.add(lhs)
        roots.add(rhs)
    for al, ar in p.assumptions:
        roots.add(al)
        roots.add(ar)
    nodes = set()
    for r in roots:
        nodes.update(st.reachable(r))
    ordered = sorted(nodes)
    renum = {old: new for new, old in enumerate(ordered)}
    out = [f"proof {p.system}", st.field.header()]
    for i in ordered:
        k = st.kind[i]
        if k == CONST:
            out.append(f"n{renum[i]} const {st.field.format_elem(st.a[i])}")
        elif k == VAR:
            out.append(f"n{renum[i]} var {st.a[i]}")
        elif k == INV:
            out.append(f"n{renum[i]} inv n{renum[st.a[i]]}")
        else:
            out.append(f"n{renum[i]} {_OPNAME[k]} n{renum[st.a[i]]} n{renum[st.b[i]]}")
    for al, ar in p.assumptions:
        out.append(f"assume n{renum[al]} n{renum[ar]}")
    for idx, (lhs, rhs, just) in enumerate(p.lines):
        out.append(f"l{idx} n{renum[lhs]} n{renum[rhs]} {_just_text(just)}")
    return "\n".join(out) + "\n"


class ParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def parse(text: str) -> Proof:
    raw = text.splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw)
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0][1].startswith("proof "):
        raise ParseError(1, "expected `proof <pf|pc|pci>` header")
    system = lines[0][1].split()[1]
    if system not in SYSTEMS:
        raise ParseError(lines[0][0], f"unknown system {system!r}")
    if len(lines) < 2 or not lines[1][1].startswith("field"):
        raise ParseError(lines[0][0] + 1, "expected field header")
    try:
        fd = parse_field_header(lines[1][1])
    except ValueError as e:
        raise ParseError(lines[1][0], str(e))
    store = Circuit(fd, allow_division=(system == SYSTEM_DIVISION))

    node_lines = []
    rest = []
    for no, ln in lines[2:]:
        if ln.startswith("n") and not rest:
            node_lines.append((no, ln))
        else:
            rest.append((no, ln))
    try:
        idmap = parse_bank_lines([ln for _, ln in node_lines], store)
    except ValueError as e:
        raise ParseError(node_lines[0][0] if node_lines else lines[1][0], str(e))

    def ref(tok, lineno):
        if not tok.startswith("n"):
            raise ParseError(lineno, f"expected node ref, got {tok!r}")
        i = int(tok[1:])
        if i not in idmap:
            raise ParseError(lineno, f"unknown node n{i}")
        return idmap[i]

    p = Proof(system, store)
    expect_line = 0
    for no, ln in rest:
        toks = ln.split()
        if toks[0] == "assume":
            if expect_line:
                raise ParseError(no, "assumptions must precede proof lines")
            p.assumptions.append((ref(toks[1], no), ref(toks[2], no)))
            continue
        if not toks[0].startswith("l"):
            raise ParseError(no, f"expected proof line, got {ln!r}")
        k = int(toks[0][1:])
        if k != expect_line:
            raise ParseError(no, f"line ids must ascend from l0, got l{k}")
        expect_line += 1
        lhs, rhs = ref(toks[1], no), ref(toks[2], no)
        jt = toks[3]
        if jt == "ax":
            if len(toks) != 5 or toks[4] not in AXIOMS:
                raise ParseError(no, f"bad axiom justification {ln!r}")
            just = ("ax", toks[4])
        elif jt == "as":
            just = ("as", int(toks[4]))
        elif jt in ("r1", "r2", "r3", "r4"):
            cits = []
            for t in toks[4:]:
                if not t.startswith("l"):
                    raise ParseError(no, f"expected line ref, got {t!r}")
                c = int(t[1:])
                if c >= k:
                    raise ParseError(no, f"rule cites l{c} which is not earlier")
                cits.append(c)
            want = 1 if jt == "r1" else 2
            if len(cits) != want:
                raise ParseError(no, f"{jt} takes {want} premise(s)")
            just = (jt, *cits)
        else:
            raise ParseError(no, f"unknown justification {jt!r}")
        p.lines.append((lhs, rhs, just))
    return p
