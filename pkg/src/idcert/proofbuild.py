"""Proof-construction toolkit.

A Prover wraps a store plus a growing line list and offers combinators that
emit kernel-checkable lines: primitive axioms, rule applications, and
structural engines (tree reshaping, zero/one collapse, distribution, linear
forms, full normalization to a canonical sum of monomials).

Proved equations are passed around as PE(lhs, rhs, idx) handles; idx None
marks a trivial similarity that is only materialized when cited. All
matching is by structural class, so reusing a cached line for a similar
circuit is always sound.
"""

from __future__ import annotations

from collections import Counter, namedtuple

from .circuit import ADD, CONST, INV, MUL, VAR, Circuit, CircuitMatrix, mat_from_vars
from .pit import SparsePoly, expand
from .proof import Proof, SYSTEM_CIRCUIT, SYSTEM_DIVISION, SYSTEM_FORMULA

PE = namedtuple("PE", "lhs rhs idx")


class NotEqual(ValueError):
    pass


class Prover:
    def __init__(self, system: str, fd=None, store: Circuit | None = None,
                 assumptions=None, allow_d_with_assumptions: bool = False,
                 tree_mode: bool = False):
        if store is None:
            store = Circuit(fd, allow_division=(system == SYSTEM_DIVISION),
                            dedup=not tree_mode)
        self.st = store
        self.tree_mode = tree_mode
        self.proof = Proof(system, store, [], list(assumptions or []),
                           allow_d_with_assumptions)
        self._cache: dict[tuple[int, int], int] = {}

    # -- node shorthands -----------------------------------------------------

    def const(self, v):
        return self.st.const(v)

    def var(self, name):
        return self.st.var(name)

    def add(self, x, y):
        return self.st.add(x, y)

    def mul(self, x, y):
        return self.st.mul(x, y)

    def inv(self, x):
        return self.st.inv(x)

    def op(self, kind, x, y):
        return self.add(x, y) if kind == ADD else self.mul(x, y)

    def zero(self):
        return self.const(0)

    def one(self):
        return self.const(1)

    def is_zero(self, i):
        return self.st.is_zero_const(i)

    def is_one(self, i):
        return self.st.kind[i] == CONST and self.st.field.is_one(self.st.a[i])

    # -- line emission ---------------------------------------------------------

    def _emit(self, lhs, rhs, just) -> PE:
        key = (self.st.cls[lhs], self.st.cls[rhs])
        got = self._cache.get(key)
        if got is not None:
            return PE(lhs, rhs, got)
        self.proof.lines.append((lhs, rhs, just))
        idx = len(self.proof.lines) - 1
        self._cache[key] = idx
        return PE(lhs, rhs, idx)

    def cite(self, pe: PE) -> PE:
        """Materialize a virtual similarity so a rule can reference it."""
        if pe.idx is not None:
            return pe
        name = "A1" if pe.lhs == pe.rhs else "A1p"
        return self._emit(pe.lhs, pe.rhs, ("ax", name))

    def refl(self, x) -> PE:
        return PE(x, x, None)

    def sim_eq(self, x, y) -> PE:
        """x = y for structurally similar circuits."""
        if self.st.cls[x] != self.st.cls[y]:
            raise NotEqual("circuits are not similar")
        return PE(x, y, None)

    def assume(self, k: int) -> PE:
        lhs, rhs = self.proof.assumptions[k]
        return self._emit(lhs, rhs, ("as", k))

    # -- rules ------------------------------------------------------------------

    def sym(self, pe: PE) -> PE:
        if pe.idx is None:
            return PE(pe.rhs, pe.lhs, None)
        got = self._cache.get((self.st.cls[pe.rhs], self.st.cls[pe.lhs]))
        if got is not None:
            return PE(pe.rhs, pe.lhs, got)
        return self._emit(pe.rhs, pe.lhs, ("r1", pe.idx))

    def trans(self, p1: PE, p2: PE) -> PE:
        if self.st.cls[p1.rhs] != self.st.cls[p2.lhs]:
            raise NotEqual("transitivity endpoints do not meet")
        if p1.idx is None:
            return PE(p1.lhs, p2.rhs, p2.idx)
        if p2.idx is None:
            return PE(p1.lhs, p2.rhs, p1.idx)
        return self._emit(p1.lhs, p2.rhs, ("r2", p1.idx, p2.idx))

    def chain(self, *pes) -> PE:
        cur = None
        for pe in pes:
            if pe is None:
                continue
            cur = pe if cur is None else self.trans(cur, pe)
        return cur

    def congr(self, kind, p1: PE, p2: PE) -> PE:
        lhs = self.op(kind, p1.lhs, p2.lhs)
        rhs = self.op(kind, p1.rhs, p2.rhs)
        if p1.idx is None and p2.idx is None:
            return PE(lhs, rhs, None)
        p1, p2 = self.cite(p1), self.cite(p2)
        return self._emit(lhs, rhs, ("r3" if kind == ADD else "r4", p1.idx, p2.idx))

    def congr_add(self, p1, p2):
        return self.congr(ADD, p1, p2)

    def congr_mul(self, p1, p2):
        return self.congr(MUL, p1, p2)

    # -- primitive axioms ---------------------------------------------------------

    def comm(self, kind, x, y) -> PE:
        name = "A2" if kind == ADD else "A4"
        return self._emit(self.op(kind, x, y), self.op(kind, y, x), ("ax", name))

    def assoc(self, kind, x, y, z) -> PE:
        """x o (y o z) = (x o y) o z."""
        name = "A3" if kind == ADD else "A5"
        lhs = self.op(kind, x, self.op(kind, y, z))
        rhs = self.op(kind, self.op(kind, x, y), z)
        return self._emit(lhs, rhs, ("ax", name))

    def distrib(self, f, g, h) -> PE:
        """f*(g+h) = f*g + f*h."""
        lhs = self.mul(f, self.add(g, h))
        rhs = self.add(self.mul(f, g), self.mul(f, h))
        return self._emit(lhs, rhs, ("ax", "A6"))

    def add_zero(self, f, zero=None) -> PE:
        """f + 0 = f."""
        z = self.zero() if zero is None else zero
        return self._emit(self.add(f, z), f, ("ax", "A7"))

    def mul_zero(self, f, zero=None) -> PE:
        """f * 0 = 0."""
        z = self.zero() if zero is None else zero
        return self._emit(self.mul(f, z), z, ("ax", "A8"))

    def mul_one(self, f, one=None) -> PE:
        """f * 1 = f."""
        o = self.one() if one is None else one
        return self._emit(self.mul(f, o), f, ("ax", "A9"))

    def const_fact(self, kind, b, c) -> PE:
        """Const(b o c) = Const(b) o Const(c), evaluated in the field."""
        fd = self.st.field
        b, c = self.st._coerce(b), self.st._coerce(c)
        v = fd.add(b, c) if kind == ADD else fd.mul(b, c)
        lhs = self.const(v)
        rhs = self.op(kind, self.const(b), self.const(c))
        return self._emit(lhs, rhs, ("ax", "A10"))

    def d_axiom(self, f) -> PE:
        """f * f^-1 = 1 (division system; definedness checked by the kernel)."""
        return self._emit(self.mul(f, self.inv(f)), self.one(), ("ax", "D"))

    # -- small derived lemmas ---------------------------------------------------

    def zero_add(self, f, zero=None) -> PE:
        """0 + f = f."""
        z = self.zero() if zero is None else zero
        return self.chain(self.comm(ADD, z, f), self.add_zero(f, z))

    def one_mul(self, f, one=None) -> PE:
        """1 * f = f."""
        o = self.one() if one is None else one
        return self.chain(self.comm(MUL, o, f), self.mul_one(f, o))

    def zero_mul(self, f, zero=None) -> PE:
        """0 * f = 0."""
        z = self.zero() if zero is None else zero
        return self.chain(self.comm(MUL, z, f), self.mul_zero(f, z))

    def const_eq(self, x, v) -> PE:
        """x = Const(v) when x is a Const node computing v."""
        v = self.st._coerce(v)
        assert self.st.kind[x] == CONST and self.st.a[x] == v
        return self.sim_eq(x, self.const(v))

    def cancel(self, f) -> PE:
        """f + (-1)*f = 0."""
        fd = self.st.field
        mone = self.const(fd.neg(fd.one()))
        lhs = self.add(f, self.mul(mone, f))
        s1 = self.congr_add(self.sym(self.mul_one(f)), self.comm(MUL, mone, f))
        s2 = self.sym(self.distrib(f, self.one(), mone))
        s3 = self.congr_mul(self.refl(f), self.sym(self.const_fact(ADD, 1, -1)))
        s4 = self.mul_zero(f)
        return self.chain(s1, s2, s3, s4)

    # -- tree reshaping engine ----------------------------------------------------

    def op_leaves(self, kind, n, is_leaf=None) -> list[int]:
        st = self.st
        stop = is_leaf or (lambda i: st.kind[i] != kind)
        out = []
        stack = [n]
        while stack:
            i = stack.pop()
            if not stop(i) and st.kind[i] == kind:
                stack.append(st.b[i])
                stack.append(st.a[i])
            else:
                out.append(i)
        return out

    def build_tree(self, kind, leaves: list[int]) -> int:
        if not leaves:
            raise ValueError("empty tree")
        if len(leaves) == 1:
            return leaves[0]
        h = len(leaves) // 2
        return self.op(kind, self.build_tree(kind, leaves[:h]),
                       self.build_tree(kind, leaves[h:]))

    def _medial(self, kind, a, b, c, d) -> PE:
        """(a o b) o (c o d) = (a o c) o (b o d)."""
        cd = self.op(kind, c, d)
        s1 = self.sym(self.assoc(kind, a, b, cd))
        s2 = self.congr(kind, self.refl(a), self.assoc(kind, b, c, d))
        s3 = self.congr(kind, self.refl(a),
                        self.congr(kind, self.comm(kind, b, c), self.refl(d)))
        s4 = self.congr(kind, self.refl(a), self.sym(self.assoc(kind, c, b, d)))
        s5 = self.assoc(kind, a, c, self.op(kind, b, d))
        return self.chain(s1, s2, s3, s4, s5)

    def _extract(self, kind, n, want: Counter, is_leaf):
        """Prove n = A o B where A collects exactly the wanted leaf classes.

        Consumes `want` greedily left to right. Returns (pe, A, B); A or B
        may be None when its side is empty, in which case pe ends at the
        other side alone.
        """
        st = self.st
        stop = is_leaf or (lambda i: st.kind[i] != kind)
        if stop(n) or st.kind[n] != kind:
            c = st.cls[n]
            if want.get(c, 0) > 0:
                want[c] -= 1
                return self.refl(n), n, None
            return self.refl(n), None, n
        pel, lA, lB = self._extract(kind, st.a[n], want, is_leaf)
        per, rA, rB = self._extract(kind, st.b[n], want, is_leaf)
        base = self.congr(kind, pel, per)
        if lA is None and rA is None:
            return base, None, base.rhs
        if lB is None and rB is None:
            return base, base.rhs, None
        if lA is not None and lB is None:          # left all wanted
            if rA is None:                          # right none wanted
                return base, lA, rB
            # right split: (lA) o (rA o rB) = (lA o rA) o rB
            pe = self.chain(base, self.assoc(kind, lA, rA, rB))
            return pe, self.op(kind, lA, rA), rB
        if lA is None and lB is not None:          # left none wanted
            if rB is None:                          # right all wanted
                pe = self.chain(base, self.comm(kind, lB, rA))
                return pe, rA, lB
            # right split: lB o (rA o rB) = rA o (rB o lB)
            s1 = self.comm(kind, lB, self.op(kind, rA, rB))
            s2 = self.sym(self.assoc(kind, rA, rB, lB))
            pe = self.chain(base, s1, s2)
            return pe, rA, self.op(kind, rB, lB)
        # left split
        if rA is None and rB is not None:           # right none
            # (lA o lB) o rB = lA o (lB o rB)
            pe = self.chain(base, self.sym(self.assoc(kind, lA, lB, rB)))
            return pe, lA, self.op(kind, lB, rB)
        if rB is None and rA is not None:           # right all
            # (lA o lB) o rA = (lA o rA) o lB
            s1 = self.congr(kind, self.comm(kind, lA, lB), self.refl(rA))
            s2 = self.sym(self.assoc(kind, lB, lA, rA))
            s3 = self.comm(kind, lB, self.op(kind, lA, rA))
            pe = self.chain(base, s1, s2, s3)
            return pe, self.op(kind, lA, rA), lB
        # both split: medial
        pe = self.chain(base, self._medial(kind, lA, lB, rA, rB))
        return pe, self.op(kind, lA, rA), self.op(kind, lB, rB)

    def to_tree(self, kind, n, target, is_leaf=None) -> PE:
        """Prove n = target for op-trees over the same leaf-class multiset."""
        st = self.st
        tgt_leaves = self.op_leaves(kind, target, is_leaf)
        if Counter(st.cls[x] for x in self.op_leaves(kind, n, is_leaf)) != \
                Counter(st.cls[x] for x in tgt_leaves):
            raise NotEqual("leaf multisets differ")
        if len(tgt_leaves) == 1:
            return self.sim_eq(n, target)
        t1, t2 = st.a[target], st.b[target]
        want = Counter(st.cls[x] for x in self.op_leaves(kind, t1, is_leaf))
        pe, A, B = self._extract(kind, n, want, is_leaf)
        if A is None or B is None:
            raise NotEqual("leaf multisets differ")
        peA = self.to_tree(kind, A, t1, is_leaf)
        peB = self.to_tree(kind, B, t2, is_leaf)
        return self.chain(pe, self.congr(kind, peA, peB))

    def reorder(self, kind, n, leaves: list[int], is_leaf=None) -> tuple[PE, int]:
        """Prove n = balanced tree over the given leaf order."""
        target = self.build_tree(kind, leaves)
        return self.to_tree(kind, n, target, is_leaf), target

    def sort_tree(self, kind, n, is_leaf=None, key=None) -> tuple[PE, int]:
        leaves = self.op_leaves(kind, n, is_leaf)
        k = key or (lambda i: self.st.cls[i])
        return self.reorder(kind, n, sorted(leaves, key=k), is_leaf)

    def tree_eq(self, kind, n, m, is_leaf=None) -> PE:
        """Prove n = m for op-trees over the same leaf-class multiset."""
        pe1, t = self.sort_tree(kind, n, is_leaf)
        pe2, t2 = self.sort_tree(kind, m, is_leaf)
        return self.chain(pe1, self.sim_eq(t, t2), self.sym(pe2))

    def map_leaves(self, kind, n, leaf_pe, is_leaf=None) -> PE:
        """Congruence over a tree: rewrite each leaf by leaf_pe(leaf)."""
        st = self.st
        stop = is_leaf or (lambda i: st.kind[i] != kind)

        def go(i):
            if stop(i) or st.kind[i] != kind:
                return leaf_pe(i)
            return self.congr(kind, go(st.a[i]), go(st.b[i]))

        return go(n)

    # -- zero/one collapse ---------------------------------------------------------

    def collapse_sum(self, n, zero_pes: dict[int, PE] | None = None,
                     is_leaf=None) -> tuple[PE, int | None]:
        """Drop zero leaves from a sum tree.

        zero_pes maps leaf node -> PE(leaf = Const 0); leaves that are
        literal zero constants are dropped automatically. Returns (pe, m)
        where m is the surviving tree, or None when everything vanished and
        pe ends at a zero constant.
        """
        st = self.st
        stop = is_leaf or (lambda i: st.kind[i] != ADD)
        zp = zero_pes or {}

        def leaf_zero(i):
            if i in zp:
                return zp[i]
            if self.is_zero(i):
                return self.refl(i)
            return None

        def go(i):
            if stop(i) or st.kind[i] != ADD:
                z = leaf_zero(i)
                return (z, None) if z is not None else (self.refl(i), i)
            pl, l = go(st.a[i])
            pr, r = go(st.b[i])
            base = self.congr_add(pl, pr)
            if l is None and r is None:
                return self.chain(base, self.add_zero(pl.rhs, pr.rhs)), None
            if r is None:
                return self.chain(base, self.add_zero(l, pr.rhs)), l
            if l is None:
                s = self.chain(base, self.comm(ADD, pl.rhs, r),
                               self.add_zero(r, pl.rhs))
                return s, r
            return base, base.rhs

        return go(n)

    def collapse_prod(self, n, zero_pes=None, one_pes=None,
                      is_leaf=None) -> tuple[PE, int | None, bool]:
        """Zero leaves annihilate, one leaves elide.

        Returns (pe, m, is_zero); m None with is_zero True means the product
        collapsed to a zero constant, m None with is_zero False means it
        collapsed to a one constant.
        """
        st = self.st
        stop = is_leaf or (lambda i: st.kind[i] != MUL)
        zp, op_ = zero_pes or {}, one_pes or {}

        def leaf(i):
            if i in zp:
                return zp[i], "zero"
            if i in op_:
                return op_[i], "one"
            if self.is_zero(i):
                return self.refl(i), "zero"
            if self.is_one(i):
                return self.refl(i), "one"
            return self.refl(i), "keep"

        def go(i):
            if stop(i) or st.kind[i] != MUL:
                return leaf(i)
            pl, sl = go(st.a[i])
            pr, sr = go(st.b[i])
            base = self.congr_mul(pl, pr)
            if sr == "zero":
                return self.chain(base, self.mul_zero(pl.rhs, pr.rhs)), "zero"
            if sl == "zero":
                return self.chain(base, self.zero_mul(pr.rhs, pl.rhs)), "zero"
            if sr == "one":
                return self.chain(base, self.mul_one(pl.rhs, pr.rhs)), sl
            if sl == "one":
                return self.chain(base, self.one_mul(pr.rhs, pl.rhs)), sr
            return base, "keep"

        pe, s = go(n)
        if s == "zero":
            return pe, None, True
        if s == "one":
            return pe, None, False
        return pe, pe.rhs, False

    # -- distribution -----------------------------------------------------------------

    def distribute_left(self, x, n, is_leaf=None) -> PE:
        """x * (sum tree) = sum tree of x * leaf."""
        st = self.st
        stop = is_leaf or (lambda i: st.kind[i] != ADD)

        def go(i):
            if stop(i) or st.kind[i] != ADD:
                return self.refl(self.mul(x, i))
            l, r = st.a[i], st.b[i]
            s1 = self.distrib(x, l, r)
            s2 = self.congr_add(go(l), go(r))
            return self.chain(s1, s2)

        return go(n)

    def distribute_right(self, n, x, is_leaf=None) -> PE:
        """(sum tree) * x = sum tree of leaf * x."""
        st = self.st
        stop = is_leaf or (lambda i: st.kind[i] != ADD)

        def go(i):
            if stop(i) or st.kind[i] != ADD:
                return self.refl(self.mul(i, x))
            l, r = st.a[i], st.b[i]
            s1 = self.comm(MUL, i, x)
            s2 = self.distrib(x, l, r)
            s3 = self.congr_add(self.comm(MUL, x, l), self.comm(MUL, x, r))
            s4 = self.congr_add(go(l), go(r))
            return self.chain(s1, s2, s3, s4)

        return go(n)

    def distribute_full(self, a, b, is_leaf_a=None, is_leaf_b=None) -> PE:
        """a * b = sum over pairs (la * lb), grouped by a's tree.

        Leaves of the result are the products mul(la, lb) in row-major
        order (a's leaves outer, b's leaves inner).
        """
        pe1 = self.distribute_right(a, b, is_leaf_a)

        def per_leaf(t):
            # t = mul(la, b); la is a leaf of a's sum tree
            return self.distribute_left(self.st.a[t], self.st.b[t], is_leaf_b)

        pe2 = self.map_leaves(ADD, pe1.rhs, per_leaf)
        return self.chain(pe1, pe2)

    # -- linear forms --------------------------------------------------------------

    def _lin_term_node(self, c, v: str | None) -> int:
        fd = self.st.field
        if v is None:
            return self.const(c)
        if fd.is_one(c):
            return self.var(v)
        return self.mul(self.const(c), self.var(v))

    def linform_node(self, poly: SparsePoly) -> int:
        """Canonical circuit of a polynomial of total degree <= 1."""
        if poly.is_zero():
            return self.zero()
        terms = []
        const_term = None
        for mono, c in sorted(poly.terms.items()):
            if mono == ():
                const_term = self.const(c)
            else:
                (v, e), = mono
                assert e == 1
                terms.append(self._lin_term_node(c, v))
        if const_term is not None:
            terms.append(const_term)
        return self.build_tree(ADD, terms)

    def _lin_leaf_info(self, i):
        """(key, coeff, varname|None) of a canonical linear term node."""
        st = self.st
        if st.kind[i] == VAR:
            return (0, st.a[i]), st.field.one(), st.a[i]
        if st.kind[i] == CONST:
            return (1, ""), st.a[i], None
        assert st.kind[i] == MUL and st.kind[st.a[i]] == CONST and st.kind[st.b[i]] == VAR
        return (0, st.a[st.b[i]]), st.a[st.a[i]], st.a[st.b[i]]

    def _lin_pair_merge(self, x, y) -> tuple[PE, int | None]:
        """x + y = merged term for canonical terms with one shared key."""
        fd = self.st.field
        kx, cx, vx = self._lin_leaf_info(x)
        ky, cy, vy = self._lin_leaf_info(y)
        assert kx == ky
        total = fd.add(cx, cy)
        if vx is None:
            pe = self.sym(self.const_fact(ADD, cx, cy))
            pe = self.chain(self.congr_add(self.refl(x), self.refl(y)), pe)
            return (pe, None) if fd.is_zero(total) else (pe, pe.rhs)
        vn = self.var(vx)
        # lift both terms to (var * coeff) form
        def lift(t, c):
            if self.st.kind[t] == VAR:
                return self.sym(self.mul_one(t))       # x = x*1
            return self.comm(MUL, self.st.a[t], self.st.b[t])  # c*x = x*c
        s1 = self.congr_add(lift(x, cx), lift(y, cy))
        s2 = self.sym(self.distrib(vn, self.const(cx), self.const(cy)))
        s3 = self.congr_mul(self.refl(vn), self.sym(self.const_fact(ADD, cx, cy)))
        pe = self.chain(s1, s2, s3)  # x+y = var * Const(total)
        if fd.is_zero(total):
            return self.chain(pe, self.mul_zero(vn, self.const(total))), None
        if fd.is_one(total):
            return self.chain(pe, self.mul_one(vn, self.const(total))), vn
        pe = self.chain(pe, self.comm(MUL, vn, self.const(total)))
        return pe, pe.rhs

    def _fold_merge(self, node, size, pair_merge):
        """Merge a left-comb of `size` equal-key terms into one (or zero)."""
        if size == 1:
            return self.refl(node), node
        l, r = self.st.a[node], self.st.b[node]
        pl, lm = self._fold_merge(l, size - 1, pair_merge)
        base = self.congr_add(pl, self.refl(r))
        if lm is None:
            return self.chain(base, self.zero_add(r, pl.rhs)), r
        mpe, m = pair_merge(lm, r)
        return self.chain(base, mpe), m

    def combine_terms(self, n, keyfn, pair_merge, is_leaf=None) -> tuple[PE, int | None]:
        """Sort a sum tree by term key, merge equal-key runs, drop zeros.

        pair_merge(x, y) must prove x+y = combined-term (or = a zero const,
        returning None for the node). Returns (pe, m); m None means the
        whole sum vanished and pe ends at a zero constant.
        """
        leaves = self.op_leaves(ADD, n, is_leaf)
        order = sorted(range(len(leaves)),
                       key=lambda t: (keyfn(leaves[t]), self.st.cls[leaves[t]], t))
        groups: list[list[int]] = []
        for t in order:
            i = leaves[t]
            if groups and keyfn(groups[-1][0]) == keyfn(i):
                groups[-1].append(i)
            else:
                groups.append([i])
        group_nodes = []
        for g in groups:
            t = g[0]
            for x in g[1:]:
                t = self.add(t, x)
            group_nodes.append(t)
        tree = self.build_tree(ADD, group_nodes)
        pe = self.to_tree(ADD, n, tree, is_leaf)
        results = {}
        for gnode, g in zip(group_nodes, groups):
            if gnode not in results:
                results[gnode] = self._fold_merge(gnode, len(g), pair_merge)
        pe2 = self.map_leaves(ADD, tree, lambda i: results[i][0],
                              is_leaf=lambda i: i in results)
        pe = self.chain(pe, pe2)
        cpe, m = self.collapse_sum(pe.rhs)
        return self.chain(pe, cpe), m

    def prove_linear(self, n) -> tuple[SparsePoly, PE]:
        """n = canonical linear form, for circuits of syntactic degree <= 1."""
        st = self.st
        fd = st.field
        memo: dict[int, tuple[SparsePoly, PE]] = {}

        def clf_eq(poly, pe):
            # pe ends at some tree over the canonical terms; reshape if needed
            target = self.linform_node(poly)
            if pe.rhs == target:
                return poly, pe
            if st.cls[pe.rhs] == st.cls[target]:
                return poly, self.chain(pe, self.sim_eq(pe.rhs, target))
            return poly, self.chain(pe, self.to_tree(ADD, pe.rhs, target))

        def go(i):
            if i in memo:
                return memo[i]
            k = st.kind[i]
            if k == VAR:
                res = (SparsePoly.var(fd, st.a[i]), self.refl(i))
            elif k == CONST:
                poly = SparsePoly.const(fd, st.a[i])
                res = (poly, self.sim_eq(i, self.linform_node(poly)))
            elif k == ADD:
                p1, pe1 = go(st.a[i])
                p2, pe2 = go(st.b[i])
                res = self._lin_add(i, p1, pe1, p2, pe2)
            else:
                p1, pe1 = go(st.a[i])
                p2, pe2 = go(st.b[i])
                res = self._lin_mul(i, p1, pe1, p2, pe2)
            memo[i] = res
            return res

        poly, pe = go(n)
        return clf_eq(poly, pe)

    def _lin_add(self, i, p1, pe1, p2, pe2):
        st = self.st
        poly = p1.add(p2)
        base = self.congr_add(pe1, pe2)
        if p1.is_zero():
            pe = self.chain(base, self.zero_add(pe2.rhs, pe1.rhs))
            return poly, pe
        if p2.is_zero():
            pe = self.chain(base, self.add_zero(pe1.rhs, pe2.rhs))
            return poly, pe
        tpe, m = self.combine_terms(
            base.rhs, keyfn=lambda t: self._lin_leaf_info(t)[0],
            pair_merge=self._lin_pair_merge)
        pe = self.chain(base, tpe)
        if m is None:
            pe = self.chain(pe, self.sim_eq(pe.rhs, self.zero()))
        return poly, pe

    def _lin_mul(self, i, p1, pe1, p2, pe2):
        fd = self.st.field
        base = self.congr_mul(pe1, pe2)
        if p1.total_degree() == 0 and p2.total_degree() > 0:
            c = p1.terms.get((), fd.zero())
            pe = self.chain(base, self._lin_scale(c, pe1.rhs, pe2.rhs, p2))
            return self._scale_poly(p1, p2), pe
        if p2.total_degree() == 0:
            c = p2.terms.get((), fd.zero())
            s = self.comm(MUL, pe1.rhs, pe2.rhs)
            pe = self.chain(base, s, self._lin_scale(c, pe2.rhs, pe1.rhs, p1))
            return self._scale_poly(p2, p1), pe
        raise NotEqual("product of two non-constant linear forms is not linear")

    def _scale_poly(self, cpoly, poly):
        fd = self.st.field
        c = cpoly.terms.get((), fd.zero())
        return SparsePoly(fd, {}) if fd.is_zero(c) else \
            SparsePoly(fd, {m: fd.mul(c, v) for m, v in poly.terms.items()})

    def _lin_scale(self, c, cnode, tree, poly) -> PE:
        """cnode * tree = canonical linear form of c * poly (cnode = Const c)."""
        fd = self.st.field
        if fd.is_zero(c):
            return self.zero_mul(tree, cnode)
        if fd.is_one(c):
            return self.one_mul(tree, cnode)
        pe = self.distribute_left(cnode, tree)

        def scale_leaf(t):
            # t = mul(cnode, term)
            term = self.st.b[t]
            k = self.st.kind[term]
            if k == CONST:
                return self.sym(self.const_fact(MUL, c, self.st.a[term]))
            if k == VAR:
                return self.refl(t)  # already Const(c) * var, canonical
            # c * (c2 * x) = (c*c2) * x
            c2node, vnode = self.st.a[term], self.st.b[term]
            s1 = self.assoc(MUL, cnode, c2node, vnode)
            s2 = self.congr_mul(self.sym(self.const_fact(MUL, c, self.st.a[c2node])),
                                self.refl(vnode))
            s3 = None
            prod = fd.mul(c, self.st.a[c2node])
            if fd.is_one(prod):
                s3 = self.one_mul(vnode, self.const(prod))
            return self.chain(s1, s2, s3)

        pe2 = self.map_leaves(ADD, pe.rhs, scale_leaf,
                              is_leaf=lambda t: self.st.kind[t] == MUL and self.st.a[t] == cnode)
        return self.chain(pe, pe2)

    # -- canonical sum of monomials ---------------------------------------------

    def monomial_node(self, c, mono: tuple) -> int:
        """Canonical term circuit Const(c) * x^e1 * ..., coefficient-1 elided."""
        fd = self.st.field
        if not mono:
            return self.const(c)
        factors = []
        for v, e in mono:
            factors.extend([self.var(v)] * e)
        prod = self.build_tree(MUL, factors)
        if fd.is_one(c):
            return prod
        return self.mul(self.const(c), prod)

    def canonical_node(self, poly: SparsePoly) -> int:
        if poly.is_zero():
            return self.zero()
        terms = [self.monomial_node(c, m) for m, c in sorted(poly.terms.items())]
        return self.build_tree(ADD, terms)

    def _mono_leaf_info(self, i):
        """(monomial, coeff) of a canonical monomial node."""
        st, fd = self.st, self.st.field
        if st.kind[i] == CONST:
            return (), st.a[i]
        c = fd.one()
        body = i
        if st.kind[i] == MUL and st.kind[st.a[i]] == CONST:
            c, body = st.a[st.a[i]], st.b[i]
        counts: dict[str, int] = {}
        for leaf in self.op_leaves(MUL, body):
            assert st.kind[leaf] == VAR
            counts[st.a[leaf]] = counts.get(st.a[leaf], 0) + 1
        return tuple(sorted(counts.items())), c

    def _mono_pair_merge(self, x, y):
        """x + y = combined canonical monomial (same monomial key)."""
        fd = self.st.field
        mx, cx = self._mono_leaf_info(x)
        my, cy = self._mono_leaf_info(y)
        assert mx == my
        total = fd.add(cx, cy)
        if mx == ():
            pe = self.chain(self.congr_add(self.refl(x), self.refl(y)),
                            self.sym(self.const_fact(ADD, cx, cy)))
            return (pe, None) if fd.is_zero(total) else (pe, pe.rhs)
        body = self.monomial_node(fd.one(), mx)

        def lift(t, c):
            if fd.is_one(c):
                return self.sym(self.mul_one(t))           # P = P*1
            return self.comm(MUL, self.const(c), body)      # c*P = P*c
        s1 = self.congr_add(lift(x, cx), lift(y, cy))
        s2 = self.sym(self.distrib(body, self.const(cx), self.const(cy)))
        s3 = self.congr_mul(self.refl(body), self.sym(self.const_fact(ADD, cx, cy)))
        pe = self.chain(s1, s2, s3)
        if fd.is_zero(total):
            return self.chain(pe, self.mul_zero(body, self.const(total))), None
        if fd.is_one(total):
            return self.chain(pe, self.mul_one(body, self.const(total))), body
        pe = self.chain(pe, self.comm(MUL, body, self.const(total)))
        return pe, pe.rhs

    def _mono_product(self, x, y):
        """x * y = canonical monomial of the product of two canonical monomials."""
        fd = self.st.field
        mx, cx = self._mono_leaf_info(x)
        my, cy = self._mono_leaf_info(y)
        md = dict(mx)
        for v, e in my:
            md[v] = md.get(v, 0) + e
        mono = tuple(sorted(md.items()))
        c = fd.mul(cx, cy)
        target = self.monomial_node(c, mono)
        if not mono:  # two constants
            return self.chain(self.congr_mul(self.refl(x), self.refl(y)),
                              self.sym(self.const_fact(MUL, cx, cy))), target
        # flatten the product tree: leaves are vars plus at most two consts
        def is_leaf(i):
            return self.st.kind[i] in (CONST, VAR)
        leaves = self.op_leaves(MUL, self.mul(x, y), is_leaf)
        consts = [t for t in leaves if self.st.kind[t] == CONST]
        vels = sorted((t for t in leaves if self.st.kind[t] == VAR),
                      key=lambda t: self.st.a[t])
        ordered = consts + vels
        pe, tree = self.reorder(MUL, self.mul(x, y), ordered, is_leaf)
        # fold the leading constants
        if len(consts) == 2:
            # tree = balanced over [c1, c2, vars...]; bring to (c1*c2)*vars shape
            shaped = self.mul(self.mul(consts[0], consts[1]),
                              self.build_tree(MUL, vels))
            pe = self.chain(pe, self.to_tree(MUL, tree, shaped, is_leaf))
            fold = self.congr_mul(self.sym(self.const_fact(MUL, cx, cy)),
                                  self.refl(self.st.b[shaped]))
            pe = self.chain(pe, fold)
            cnode = self.const(c)
            body = self.st.b[shaped]
        elif len(consts) == 1:
            shaped = self.mul(consts[0], self.build_tree(MUL, vels))
            pe = self.chain(pe, self.to_tree(MUL, tree, shaped, is_leaf))
            cnode, body = consts[0], self.st.b[shaped]
        else:
            shaped = self.build_tree(MUL, vels)
            pe = self.chain(pe, self.to_tree(MUL, tree, shaped, is_leaf))
            cnode, body = None, shaped
        # normalize to target shape
        if cnode is None:
            pe = self.chain(pe, self.to_tree(MUL, body, target, is_leaf))
            return pe, target
        if fd.is_one(fd.mul(cx, cy) if len(consts) == 2 else
                     self.st.a[cnode]):
            pe = self.chain(pe, self.one_mul(body, cnode))
            pe = self.chain(pe, self.to_tree(MUL, pe.rhs, target, is_leaf))
            return pe, target
        want_body = target if self.st.kind[target] != MUL or \
            self.st.kind[self.st.a[target]] != CONST else self.st.b[target]
        pe = self.chain(pe, self.congr_mul(self.sim_eq(cnode, self.const(c)),
                                           self.to_tree(MUL, body, want_body, is_leaf)))
        return pe, pe.rhs

    def prove_canonical(self, n) -> tuple[SparsePoly, PE]:
        """n = canonical sum of monomials (exponential in general; keep small)."""
        st, fd = self.st, self.st.field
        memo: dict[int, tuple[SparsePoly, PE]] = {}

        def reshape(poly, pe):
            target = self.canonical_node(poly)
            if pe.rhs == target:
                return poly, pe
            if st.cls[pe.rhs] == st.cls[target]:
                return poly, self.chain(pe, self.sim_eq(pe.rhs, target))
            return poly, self.chain(pe, self.to_tree(ADD, pe.rhs, target))

        def go(i):
            if i in memo:
                return memo[i]
            k = st.kind[i]
            if k == VAR:
                res = (SparsePoly.var(fd, st.a[i]), self.refl(i))
            elif k == CONST:
                poly = SparsePoly.const(fd, st.a[i])
                res = (poly, self.sim_eq(i, self.canonical_node(poly)))
            elif k == INV:
                raise NotEqual("normalization needs a division-free circuit")
            elif k == ADD:
                p1, pe1 = go(st.a[i])
                p2, pe2 = go(st.b[i])
                poly = p1.add(p2)
                base = self.congr_add(pe1, pe2)
                if p1.is_zero():
                    res = (poly, self.chain(base, self.zero_add(pe2.rhs, pe1.rhs)))
                elif p2.is_zero():
                    res = (poly, self.chain(base, self.add_zero(pe1.rhs, pe2.rhs)))
                else:
                    tpe, m = self.combine_terms(base.rhs,
                                                keyfn=lambda t: self._mono_leaf_info(t)[0],
                                                pair_merge=self._mono_pair_merge)
                    res = (poly, self.chain(base, tpe))
            else:
                p1, pe1 = go(st.a[i])
                p2, pe2 = go(st.b[i])
                poly = p1.mul(p2)
                base = self.congr_mul(pe1, pe2)
                if p1.is_zero():
                    res = (poly, self.chain(base, self.zero_mul(pe2.rhs, pe1.rhs)))
                elif p2.is_zero():
                    res = (poly, self.chain(base, self.mul_zero(pe1.rhs, pe2.rhs)))
                else:
                    pe = self.chain(base, self.distribute_full(pe1.rhs, pe2.rhs))
                    results = {}

                    def per_pair(t):
                        if t not in results:
                            results[t] = self._mono_product(self.st.a[t], self.st.b[t])
                        return results[t][0]

                    pe = self.chain(pe, self.map_leaves(ADD, pe.rhs, per_pair))
                    tpe, m = self.combine_terms(pe.rhs,
                                                keyfn=lambda t: self._mono_leaf_info(t)[0],
                                                pair_merge=self._mono_pair_merge)
                    res = (poly, self.chain(pe, tpe))
            memo[i] = res
            return res

        poly, pe = go(n)
        return reshape(poly, pe)

    def prove_normalize(self, f, g) -> PE:
        """Prove f = g by normalizing both to a canonical sum of monomials."""
        p1, pe1 = self.prove_canonical(f)
        p2, pe2 = self.prove_canonical(g)
        if p1 != p2:
            raise NotEqual("circuits expand to different polynomials")
        return self.chain(pe1, self.sym(pe2))

    # -- congruence and substitution ------------------------------------------------

    def congr_subst(self, root, var_pes: dict[str, PE],
                    defined_guard=None) -> PE:
        """From per-variable proofs x = H_x derive F = F(x̄/H̄)."""
        st = self.st
        m: dict[int, PE] = {}
        for i in st.reachable(root):
            k = st.kind[i]
            if k == VAR and st.a[i] in var_pes:
                pe = var_pes[st.a[i]]
                m[i] = PE(i, pe.rhs, pe.idx)
            elif k in (CONST, VAR):
                m[i] = self.refl(i)
            elif k == INV:
                m[i] = self.inv_both_sides(m[st.a[i]])
            else:
                m[i] = self.congr(k, m[st.a[i]], m[st.b[i]])
        return m[root]

    # -- division helpers (pci) ---------------------------------------------------

    def inv_both_sides(self, pe: PE) -> PE:
        """From F = G derive F^-1 = G^-1 (both inverses must be defined)."""
        if pe.idx is None and pe.lhs == pe.rhs:
            return self.refl(self.inv(pe.lhs))
        f, g = pe.lhs, pe.rhs
        fi, gi = self.inv(f), self.inv(g)
        s1 = self.sym(self.mul_one(fi))                       # fi = fi*1
        s2 = self.congr_mul(self.refl(fi), self.sym(self.d_axiom(g)))
        s3 = self.assoc(MUL, fi, g, gi)                       # fi*(g*gi) = (fi*g)*gi
        s4 = self.congr_mul(self.refl(fi), self.sym(pe))      # fi*g = fi*f
        s5 = self.comm(MUL, fi, f)
        s6 = self.d_axiom(f)                                  # f*fi = 1
        inner = self.chain(s4, s5, s6)                        # fi*g = 1
        s7 = self.congr_mul(inner, self.refl(gi))             # (fi*g)*gi = 1*gi
        s8 = self.one_mul(gi)
        return self.chain(s1, s2, s3, s7, s8)

    def inv_inv(self, f) -> PE:
        """(F^-1)^-1 = F."""
        fi = self.inv(f)
        fii = self.inv(fi)
        s1 = self.sym(self.mul_one(fii))                      # fii = fii*1
        one_eq = self.sym(self.chain(self.comm(MUL, fi, f), self.d_axiom(f)))
        s2 = self.congr_mul(self.refl(fii), one_eq)           # fii*1 = fii*(fi*f)
        s3 = self.assoc(MUL, fii, fi, f)
        s4 = self.congr_mul(self.chain(self.comm(MUL, fii, fi), self.d_axiom(fi)),
                            self.refl(f))                     # (fii*fi)*f = 1*f
        s5 = self.one_mul(f)
        return self.chain(s1, s2, s3, s4, s5)

    def inv_mul(self, f, g) -> PE:
        """(F*G)^-1 = G^-1 * F^-1."""
        p = self.mul(f, g)
        pi, fi, gi = self.inv(p), self.inv(f), self.inv(g)
        tgt = self.mul(gi, fi)
        s1 = self.sym(self.mul_one(pi))
        # 1 = f*fi -> 1 = (f*(g*gi))*fi via g*gi = 1
        t1 = self.sym(self.d_axiom(f))                       # 1 = f*fi
        t2 = self.congr_mul(
            self.sym(self.chain(
                self.congr_mul(self.refl(f), self.d_axiom(g)),
                self.mul_one(f))),
            self.refl(fi))                                    # f*fi = (f*(g*gi))*fi
        # f*(g*gi) = (f*g)*gi
        t3 = self.congr_mul(self.assoc(MUL, f, g, gi), self.refl(fi))
        t4 = self.sym(self.assoc(MUL, p, gi, fi))             # ((f*g)*gi)*fi = (f*g)*(gi*fi)
        one_eq = self.chain(t1, t2, t3, t4)                   # 1 = (f*g)*(gi*fi)
        s2 = self.congr_mul(self.refl(pi), one_eq)
        s3 = self.assoc(MUL, pi, p, tgt)
        s4 = self.congr_mul(self.chain(self.comm(MUL, pi, p), self.d_axiom(p)),
                            self.refl(tgt))
        s5 = self.one_mul(tgt)
        return self.chain(s1, s2, s3, s4, s5)

    def mul_both_sides(self, pe: PE, h, side="right") -> PE:
        if side == "right":
            return self.congr_mul(pe, self.refl(h))
        return self.congr_mul(self.refl(h), pe)

    def cancel_inv_right(self, f, g) -> PE:
        """(F*G)*G^-1 = F."""
        gi = self.inv(g)
        s1 = self.sym(self.assoc(MUL, f, g, gi))
        s2 = self.congr_mul(self.refl(f), self.d_axiom(g))
        s3 = self.mul_one(f)
        return self.chain(s1, s2, s3)

    # -- importing sub-proofs with substitution ------------------------------------

    def import_lines(self, src: "Prover", bindings: dict[str, int]) -> list[PE]:
        """Append all lines of src, substituting variables by local circuits.

        Returns the translated lines as PEs (same order). Assumption lines
        are not supported in imported fragments.
        """
        node_map: dict[int, int] = {}
        sst = src.st

        def tr(i):
            if i in node_map:
                return node_map[i]
            for j in sst.reachable(i):
                if j in node_map:
                    continue
                k = sst.kind[j]
                if k == VAR and sst.a[j] in bindings:
                    node_map[j] = bindings[sst.a[j]]
                elif k == CONST:
                    node_map[j] = self.const(sst.a[j])
                elif k == VAR:
                    node_map[j] = self.var(sst.a[j])
                elif k == INV:
                    node_map[j] = self.inv(node_map[sst.a[j]])
                else:
                    node_map[j] = self.op(k, node_map[sst.a[j]], node_map[sst.b[j]])
            return node_map[i]

        out: list[PE] = []
        idx_map: dict[int, int] = {}
        for idx, (lhs, rhs, just) in enumerate(src.proof.lines):
            tl, trh = tr(lhs), tr(rhs)
            tag = just[0]
            if tag == "as":
                raise ValueError("cannot import assumption lines")
            if tag == "ax":
                pe = self._emit(tl, trh, just)
            else:
                cits = tuple(idx_map[c] for c in just[1:])
                key = (self.st.cls[tl], self.st.cls[trh])
                if key in self._cache:
                    pe = PE(tl, trh, self._cache[key])
                else:
                    pe = self._emit(tl, trh, (tag, *cits))
            idx_map[idx] = pe.idx
            out.append(pe)
        return out


# ---------------------------------------------------------------------------
# matrix-equation layer
# ---------------------------------------------------------------------------

class MatEq:
    """A proved entrywise equality of two circuit matrices."""

    def __init__(self, A: CircuitMatrix, B: CircuitMatrix, pes: list[PE]):
        assert (A.rows, A.cols) == (B.rows, B.cols)
        self.A, self.B, self.pes = A, B, pes

    def at(self, i, j) -> PE:
        return self.pes[i * self.A.cols + j]


def mat_refl(pr: Prover, A: CircuitMatrix) -> MatEq:
    return MatEq(A, A, [pr.refl(e) for e in A.entries])


def mat_sym(pr: Prover, me: MatEq) -> MatEq:
    return MatEq(me.B, me.A, [pr.sym(p) for p in me.pes])


def mat_trans(pr: Prover, m1: MatEq, m2: MatEq) -> MatEq:
    return MatEq(m1.A, m2.B, [pr.trans(a, b) for a, b in zip(m1.pes, m2.pes)])


def mat_chain(pr: Prover, *mes) -> MatEq:
    cur = None
    for me in mes:
        if me is None:
            continue
        cur = me if cur is None else mat_trans(pr, cur, me)
    return cur


def _sum_tree_congr(pr: Prover, pes: list[PE]) -> PE:
    """Congruence over the balanced sum of a list of proved terms."""
    if len(pes) == 1:
        return pes[0]
    h = len(pes) // 2
    return pr.congr_add(_sum_tree_congr(pr, pes[:h]), _sum_tree_congr(pr, pes[h:]))


def mat_congr_add(pr: Prover, m1: MatEq, m2: MatEq) -> MatEq:
    from .circuit import mat_ops
    A = mat_ops(m1.A, m2.A, "add")
    B = mat_ops(m1.B, m2.B, "add")
    return MatEq(A, B, [pr.congr_add(a, b) for a, b in zip(m1.pes, m2.pes)])


def mat_congr_mul(pr: Prover, m1: MatEq, m2: MatEq) -> MatEq:
    from .circuit import mat_ops
    A = mat_ops(m1.A, m2.A, "mul")
    B = mat_ops(m1.B, m2.B, "mul")
    pes = []
    for i in range(A.rows):
        for j in range(A.cols):
            terms = [pr.congr_mul(m1.at(i, p), m2.at(p, j))
                     for p in range(m1.A.cols)]
            pes.append(_sum_tree_congr(pr, terms))
    return MatEq(A, B, pes)

