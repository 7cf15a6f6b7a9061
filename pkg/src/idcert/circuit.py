"""Arithmetic circuit IR: an append-only DAG store of const/var/add/mul/inv nodes.

Node ids are insertion-ordered ints, children always precede parents. Every
node carries a structural class id computed by interning, so two nodes unfold
to the same formula iff their class ids are equal; `similar` is O(1).

Stores created with dedup=True reuse an existing node instead of appending a
structural duplicate. Proof generators use that mode to keep stores small;
the default mode appends fresh nodes so substitution really produces
disjoint copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .field import FieldDesc, RATIONALS, PRIME, EXTENSION
from fractions import Fraction

CONST, VAR, ADD, MUL, INV = 0, 1, 2, 3, 4
_OPNAME = {CONST: "const", VAR: "var", ADD: "add", MUL: "mul", INV: "inv"}


class DivByZero(ArithmeticError):
    def __init__(self, node: int):
        super().__init__(f"division by zero at node n{node}")
        self.node = node


class BudgetExceeded(RuntimeError):
    pass


class Circuit:
    """A shared store of circuit nodes over one coefficient field."""

    def __init__(self, fd: FieldDesc, allow_division: bool = False, dedup: bool = False):
        self.field = fd
        self.allow_division = allow_division
        self.dedup = dedup
        self.kind: list[int] = []
        self.a: list = []          # const value | var name | left child | inv child
        self.b: list = []          # right child or None
        self.cls: list[int] = []   # structural class id
        self._intern: dict = {}    # structural key -> class id
        self._node_of_cls: dict[int, int] = {}  # class id -> first node
        # lazy per-node caches, extended on demand
        self._depth: list[int] = []
        self._deg: list[tuple[int, int]] = []   # (num degree, den degree)
        self._tree: list[int] = []
        self._has_inv: list[bool] = []

    def __len__(self) -> int:
        return len(self.kind)

    # -- construction ------------------------------------------------------

    def _push(self, kind: int, a, b) -> int:
        if kind == CONST:
            key = (CONST, a)
        elif kind == VAR:
            key = (VAR, a)
        elif kind == INV:
            key = (INV, self.cls[a])
        else:
            key = (kind, self.cls[a], self.cls[b])
        cid = self._intern.get(key)
        if cid is None:
            cid = len(self._intern)
            self._intern[key] = cid
        elif self.dedup:
            return self._node_of_cls[cid]
        nid = len(self.kind)
        self.kind.append(kind)
        self.a.append(a)
        self.b.append(b)
        self.cls.append(cid)
        if cid not in self._node_of_cls:
            self._node_of_cls[cid] = nid
        return nid

    def _coerce(self, v):
        fd = self.field
        if fd.kind == PRIME:
            return v % fd.characteristic
        if fd.kind == RATIONALS:
            return Fraction(v) if not isinstance(v, Fraction) else v
        if isinstance(v, int):
            return fd.from_int(v)
        return v

    def const(self, v) -> int:
        return self._push(CONST, self._coerce(v), None)

    def var(self, name: str) -> int:
        return self._push(VAR, name, None)

    def add(self, x: int, y: int) -> int:
        return self._push(ADD, x, y)

    def mul(self, x: int, y: int) -> int:
        return self._push(MUL, x, y)

    def inv(self, x: int) -> int:
        if not self.allow_division:
            raise ValueError("store does not allow division gates")
        return self._push(INV, x, None)

    def sub(self, x: int, y: int) -> int:
        """x - y as x + (-1) * y."""
        return self.add(x, self.mul(self.const(self.field.neg(self.field.one())), y))

    def build(self, op: str, *args) -> int:
        """String-keyed node construction; raises on unknown child ids."""
        for t in args[1:] if op in ("const", "var") else args:
            if isinstance(t, int) and not 0 <= t < len(self.kind):
                raise ValueError(f"unknown node id {t}")
        if op == "const":
            return self.const(args[0])
        if op == "var":
            return self.var(args[0])
        if op == "add":
            return self.add(*args)
        if op == "mul":
            return self.mul(*args)
        if op == "inv":
            return self.inv(*args)
        raise ValueError(f"unknown op {op!r}")

    def balanced_sum(self, ids: list[int]) -> int:
        if not ids:
            return self.const(0)
        if len(ids) == 1:
            return ids[0]
        h = len(ids) // 2
        return self.add(self.balanced_sum(ids[:h]), self.balanced_sum(ids[h:]))

    def balanced_product(self, ids: list[int]) -> int:
        if not ids:
            return self.const(1)
        if len(ids) == 1:
            return ids[0]
        h = len(ids) // 2
        return self.mul(self.balanced_product(ids[:h]), self.balanced_product(ids[h:]))

    def power(self, x: int, e: int) -> int:
        """x^e as a balanced product of e references to x (e >= 1)."""
        return self.balanced_product([x] * e)

    # -- traversal ---------------------------------------------------------

    def children(self, i: int) -> tuple:
        k = self.kind[i]
        if k in (ADD, MUL):
            return (self.a[i], self.b[i])
        if k == INV:
            return (self.a[i],)
        return ()

    def reachable(self, root: int) -> list[int]:
        """Distinct reachable ids in ascending (hence topological) order."""
        seen = set()
        stack = [root]
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            stack.extend(self.children(i))
        return sorted(seen)

    def similar(self, x: int, y: int) -> bool:
        """True iff both unfold to the same labeled ordered formula tree."""
        return self.cls[x] == self.cls[y]

    def node_of_class(self, cid: int) -> int:
        return self._node_of_cls[cid]

    # -- lazy per-node attributes -------------------------------------------

    def _fill_depth(self):
        d = self._depth
        for i in range(len(d), len(self.kind)):
            k = self.kind[i]
            if k in (CONST, VAR):
                d.append(0)
            elif k == INV:
                d.append(1 + d[self.a[i]])
            else:
                d.append(1 + max(d[self.a[i]], d[self.b[i]]))

    def depth(self, root: int) -> int:
        self._fill_depth()
        return self._depth[root]

    def _fill_deg(self):
        d = self._deg
        for i in range(len(d), len(self.kind)):
            k = self.kind[i]
            if k == CONST:
                d.append((0, 0))
            elif k == VAR:
                d.append((1, 0))
            elif k == INV:
                n, dn = d[self.a[i]]
                d.append((dn, n))
            elif k == MUL:
                n1, d1 = d[self.a[i]]
                n2, d2 = d[self.b[i]]
                d.append((n1 + n2, d1 + d2))
            else:
                n1, d1 = d[self.a[i]]
                n2, d2 = d[self.b[i]]
                d.append((max(n1 + d2, n2 + d1), d1 + d2))

    def syntactic_degree(self, root: int) -> int:
        """Structural degree; for division circuits deg(num) + deg(den)."""
        self._fill_deg()
        n, d = self._deg[root]
        return n + d

    def _fill_tree(self):
        t = self._tree
        for i in range(len(t), len(self.kind)):
            k = self.kind[i]
            if k in (CONST, VAR):
                t.append(1)
            elif k == INV:
                t.append(1 + t[self.a[i]])
            else:
                t.append(1 + t[self.a[i]] + t[self.b[i]])

    def tree_size(self, root: int) -> int:
        """Node count of the full unfolding (no sharing)."""
        self._fill_tree()
        return self._tree[root]

    def _fill_has_inv(self):
        h = self._has_inv
        for i in range(len(h), len(self.kind)):
            k = self.kind[i]
            if k == INV:
                h.append(True)
            elif k in (ADD, MUL):
                h.append(h[self.a[i]] or h[self.b[i]])
            else:
                h.append(False)

    def has_division(self, root: int) -> bool:
        self._fill_has_inv()
        return self._has_inv[root]

    def size(self, root: int) -> int:
        """Number of distinct reachable nodes."""
        return len(self.reachable(root))

    def is_formula(self, root: int) -> bool:
        return self.tree_size(root) == self.size(root)

    def metrics(self, root: int) -> dict:
        return {
            "size": self.size(root),
            "depth": self.depth(root),
            "syntactic_degree": self.syntactic_degree(root),
        }

    def weighted_degree(self, root: int, weight) -> dict[int, int]:
        """Per-node structural degree where leaf degrees come from weight(node).

        Division gates are rejected; used for gradings such as the degree in
        one distinguished variable.
        """
        out = {}
        for i in self.reachable(root):
            k = self.kind[i]
            if k == INV:
                raise ValueError("weighted_degree needs a division-free circuit")
            if k in (CONST, VAR):
                out[i] = weight(i)
            elif k == ADD:
                out[i] = max(out[self.a[i]], out[self.b[i]])
            else:
                out[i] = out[self.a[i]] + out[self.b[i]]
        return out

    def vars_of(self, root: int) -> set[str]:
        return {self.a[i] for i in self.reachable(root) if self.kind[i] == VAR}

    def inv_nodes(self, root: int) -> list[int]:
        return [i for i in self.reachable(root) if self.kind[i] == INV]

    def is_zero_const(self, i: int) -> bool:
        return self.kind[i] == CONST and self.field.is_zero(self.a[i])

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, root: int, assignment: dict):
        """Exact value at a point; raises DivByZero with the offending node."""
        fd = self.field
        val = {}
        for i in self.reachable(root):
            k = self.kind[i]
            if k == CONST:
                val[i] = self.a[i]
            elif k == VAR:
                try:
                    val[i] = assignment[self.a[i]]
                except KeyError:
                    raise KeyError(f"missing binding for variable {self.a[i]!r}")
            elif k == ADD:
                val[i] = fd.add(val[self.a[i]], val[self.b[i]])
            elif k == MUL:
                val[i] = fd.mul(val[self.a[i]], val[self.b[i]])
            else:
                child = val[self.a[i]]
                if fd.is_zero(child):
                    raise DivByZero(i)
                val[i] = fd.inv(child)
        return val[root]

    # -- structural passes ---------------------------------------------------

    def substitute(self, root: int, var: str, g: int) -> int:
        """Replace every node labeled `var` by a disjoint copy of g."""
        return self.substitute_many(root, {var: g})

    def substitute_many(self, root: int, bindings: dict[str, int]) -> int:
        m = {}
        for i in self.reachable(root):
            k = self.kind[i]
            if k == VAR and self.a[i] in bindings:
                m[i] = self.copy_node(bindings[self.a[i]])
            elif k == CONST or k == VAR:
                m[i] = i
            elif k == INV:
                m[i] = i if m[self.a[i]] == self.a[i] else self.inv(m[self.a[i]])
            else:
                x, y = m[self.a[i]], m[self.b[i]]
                if x == self.a[i] and y == self.b[i]:
                    m[i] = i
                else:
                    m[i] = self._push(k, x, y)
        return m[root]

    def copy_node(self, root: int) -> int:
        """A disjoint copy of the subcircuit (fresh ids unless deduping)."""
        m = {}
        for i in self.reachable(root):
            k = self.kind[i]
            if k in (CONST, VAR):
                m[i] = self._push(k, self.a[i], None)
            elif k == INV:
                m[i] = self.inv(m[self.a[i]])
            else:
                m[i] = self._push(k, m[self.a[i]], m[self.b[i]])
        return m[root]

    def unfold(self, root: int, budget: int | None = None) -> int:
        """Materialize the formula tree of root; refuses above the node budget."""
        from . import config

        cap = config.UNFOLD_BUDGET if budget is None else budget
        if self.tree_size(root) > cap:
            raise BudgetExceeded(
                f"unfolding needs {self.tree_size(root)} nodes, cap {cap}")

        def walk(i):
            # iterative post-order with duplication of shared interior nodes
            out = []
            stack = [(i, False)]
            results = []
            while stack:
                node, done = stack.pop()
                k = self.kind[node]
                if k in (CONST, VAR):
                    results.append(self._push(k, self.a[node], None))
                    continue
                if not done:
                    stack.append((node, True))
                    for c in reversed(self.children(node)):
                        stack.append((c, False))
                else:
                    if k == INV:
                        c = results.pop()
                        results.append(self._push(INV, c, None))
                    else:
                        r = results.pop()
                        l = results.pop()
                        results.append(self._push(k, l, r))
            return results[-1]

        return walk(root)

    def non_redundant(self, root: int) -> int:
        """Fixpoint of u+0 -> u, 0+u -> u, u*0 -> 0, 0*u -> 0 (division-free)."""
        m = {}
        zero = None
        for i in self.reachable(root):
            k = self.kind[i]
            if k == INV:
                raise ValueError("non_redundant needs a division-free circuit")
            if k == CONST:
                m[i] = i
            elif k == VAR:
                m[i] = i
            elif k == ADD:
                x, y = m[self.a[i]], m[self.b[i]]
                if self.is_zero_const(x):
                    m[i] = y
                elif self.is_zero_const(y):
                    m[i] = x
                elif x == self.a[i] and y == self.b[i]:
                    m[i] = i
                else:
                    m[i] = self.add(x, y)
            else:
                x, y = m[self.a[i]], m[self.b[i]]
                if self.is_zero_const(x) or self.is_zero_const(y):
                    if zero is None:
                        zero = x if self.is_zero_const(x) else y
                    m[i] = zero
                elif x == self.a[i] and y == self.b[i]:
                    m[i] = i
                else:
                    m[i] = self.mul(x, y)
        return m[root]

    def dedup_pass(self, root: int) -> int:
        """Collapse structurally equal nodes onto one physical node each."""
        phys: dict = {}
        m = {}
        for i in self.reachable(root):
            k = self.kind[i]
            if k in (CONST, VAR):
                key = (k, self.a[i])
                if key not in phys:
                    phys[key] = self._node_of_cls[self.cls[i]]
                m[i] = phys[key]
            else:
                ka = m[self.a[i]]
                kb = m[self.b[i]] if k != INV else None
                key = (k, ka, kb)
                if key not in phys:
                    if ka == self.a[i] and (k == INV or kb == self.b[i]):
                        phys[key] = i
                    else:
                        phys[key] = self._push(k, ka, kb)
                m[i] = phys[key]
        return m[root]

    def copy_into(self, other: "Circuit", root: int, const_map=None, var_map=None) -> int:
        """Rebuild the subcircuit in another store, mapping leaves on the way."""
        m = {}
        for i in self.reachable(root):
            k = self.kind[i]
            if k == CONST:
                v = self.a[i]
                m[i] = other.const(const_map(v) if const_map else v)
            elif k == VAR:
                name = self.a[i]
                m[i] = other.var(var_map(name) if var_map else name)
            elif k == INV:
                m[i] = other.inv(m[self.a[i]])
            else:
                m[i] = other._push(k, m[self.a[i]], m[self.b[i]])
        return m[root]

    def to_text(self, root: int) -> str:
        """Debug rendering of a subcircuit as a nested expression."""
        txt = {}
        fd = self.field
        for i in self.reachable(root):
            k = self.kind[i]
            if k == CONST:
                txt[i] = fd.format_elem(self.a[i])
            elif k == VAR:
                txt[i] = self.a[i]
            elif k == ADD:
                txt[i] = f"({txt[self.a[i]]} + {txt[self.b[i]]})"
            elif k == MUL:
                txt[i] = f"({txt[self.a[i]]} * {txt[self.b[i]]})"
            else:
                txt[i] = f"{txt[self.a[i]]}^-1"
        return txt[root]


# ---------------------------------------------------------------------------
# matrices of circuits
# ---------------------------------------------------------------------------

@dataclass
class CircuitMatrix:
    store: Circuit
    rows: int
    cols: int
    entries: list[int] = dc_field(default_factory=list)  # row-major root ids

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entry count does not match dimensions")

    def at(self, i: int, j: int) -> int:
        return self.entries[i * self.cols + j]

    def set(self, i: int, j: int, v: int):
        self.entries[i * self.cols + j] = v


def mat_identity(store: Circuit, n: int) -> CircuitMatrix:
    one, zero = store.const(1), store.const(0)
    return CircuitMatrix(store, n, n, [one if i == j else zero for i in range(n) for j in range(n)])


def mat_from_vars(store: Circuit, prefix: str, rows: int, cols: int | None = None) -> CircuitMatrix:
    cols = rows if cols is None else cols
    ents = [store.var(f"{prefix}{i + 1}{j + 1}" if max(rows, cols) < 10 else f"{prefix}{i + 1}_{j + 1}")
            for i in range(rows) for j in range(cols)]
    return CircuitMatrix(store, rows, cols, ents)


def mat_ops(a: CircuitMatrix, b, op: str) -> CircuitMatrix:
    """Matrix add/mul and scalar multiplication over one shared store."""
    st = a.store
    if op == "add":
        if (a.rows, a.cols) != (b.rows, b.cols):
            raise ValueError("dimension mismatch")
        return CircuitMatrix(st, a.rows, a.cols,
                             [st.add(x, y) for x, y in zip(a.entries, b.entries)])
    if op == "mul":
        if a.cols != b.rows:
            raise ValueError("dimension mismatch")
        ents = []
        for i in range(a.rows):
            for j in range(b.cols):
                terms = [st.mul(a.at(i, p), b.at(p, j)) for p in range(a.cols)]
                ents.append(st.balanced_sum(terms))
        return CircuitMatrix(st, a.rows, b.cols, ents)
    if op == "scalar":
        # b is a scalar circuit id
        return CircuitMatrix(st, a.rows, a.cols, [st.mul(b, x) for x in a.entries])
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# circuit bank file format
# ---------------------------------------------------------------------------

def serialize_bank(store: Circuit, roots: list[int]) -> str:
    """Write the union of subcircuits, ids renumbered ascending from 0."""
    lines = [store.field.header()]
    ordered = sorted(set().union(*[set(store.reachable(r)) for r in roots])) if roots else []
    renum = {}
    for i in ordered:
        renum[i] = len(renum)
        k = store.kind[i]
        if k == CONST:
            lines.append(f"n{renum[i]} const {store.field.format_elem(store.a[i])}")
        elif k == VAR:
            lines.append(f"n{renum[i]} var {store.a[i]}")
        elif k == INV:
            lines.append(f"n{renum[i]} inv n{renum[store.a[i]]}")
        else:
            lines.append(f"n{renum[i]} {_OPNAME[k]} n{renum[store.a[i]]} n{renum[store.b[i]]}")
    return "\n".join(lines) + "\n"


def _parse_ref(tok: str, limit: int) -> int:
    if not tok.startswith("n"):
        raise ValueError(f"expected node reference, got {tok!r}")
    i = int(tok[1:])
    if i >= limit:
        raise ValueError(f"forward or unknown reference {tok}")
    return i


def parse_bank_lines(lines: list[str], store: Circuit, start_index: int = 0):
    """Parse `n<k> ...` node lines into store; returns old-id -> new-id map."""
    idmap = {}
    expect = start_index
    for ln in lines:
        toks = ln.split()
        if not toks:
            continue
        nid = int(toks[0][1:])
        if nid != expect:
            raise ValueError(f"node ids must ascend without gaps at {ln!r}")
        expect += 1
        op = toks[1]
        if op == "const":
            idmap[nid] = store.const(store.field.parse_elem(toks[2]))
        elif op == "var":
            idmap[nid] = store.var(toks[2])
        elif op == "inv":
            idmap[nid] = store.inv(idmap[_parse_ref(toks[2], nid)])
        elif op in ("add", "mul"):
            x = idmap[_parse_ref(toks[2], nid)]
            y = idmap[_parse_ref(toks[3], nid)]
            idmap[nid] = store.add(x, y) if op == "add" else store.mul(x, y)
        else:
            raise ValueError(f"unknown node op {op!r}")
    return idmap


def parse_bank(text: str) -> tuple[Circuit, dict[int, int]]:
    from .field import parse_field_header

    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    fd = parse_field_header(lines[0])
    store = Circuit(fd, allow_division=True)
    idmap = parse_bank_lines(lines[1:], store)
    return store, idmap
