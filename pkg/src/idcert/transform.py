"""Proof-producing structural passes.

Homogenization splits circuits and proofs into graded components, the
degree bound rebuilds a proof using only circuits of the endpoint degree,
and balancing rewrites circuits and proofs into logarithmic depth.
"""

from __future__ import annotations

from .circuit import ADD, CONST, INV, MUL, VAR, Circuit
from .grading import Parts, PartsTranslator, SingleVarGrading, TotalGrading
from .pit import SparsePoly, expand
from .proof import Proof, SYSTEM_CIRCUIT, SYSTEM_FORMULA
from .proofbuild import PE, NotEqual, Prover


# ---------------------------------------------------------------------------
# homogeneous parts
# ---------------------------------------------------------------------------

def homogeneous_part(store: Circuit, root: int, k: int) -> int:
    """Circuit computing the degree-k homogeneous component, non-redundant."""
    pr = Prover(SYSTEM_CIRCUIT, store.field, store=store)
    parts = Parts(pr, TotalGrading(store))
    return parts.part_node(root, k)


def adopt_proof(pr: Prover, p: Proof) -> list[tuple[int, int, tuple]]:
    """Copy a proof's lines into the prover's store (field must match)."""
    m: dict[int, int] = {}
    st = p.store

    def tr(root):
        for i in st.reachable(root):
            if i in m:
                continue
            k = st.kind[i]
            if k == CONST:
                m[i] = pr.const(st.a[i])
            elif k == VAR:
                m[i] = pr.var(st.a[i])
            elif k == INV:
                m[i] = pr.inv(m[st.a[i]])
            else:
                m[i] = pr.op(k, m[st.a[i]], m[st.b[i]])
        return m[root]

    return [(tr(lhs), tr(rhs), just) for lhs, rhs, just in p.lines]


def finalize(pr: Prover, pe: PE) -> Proof:
    """Make pe the last line of the proof and return it."""
    pe = pr.cite(pe)
    if pe.idx != len(pr.proof.lines) - 1:
        r = pr.cite(pr.refl(pe.rhs))
        pr.proof.lines.append((pe.lhs, pe.rhs, ("r2", pe.idx, r.idx)))
    return pr.proof


def prove_homogeneous_parts(p: Proof, k: int) -> Proof:
    """From a proof of F = G derive a proof of the degree-k components."""
    pr = Prover(SYSTEM_CIRCUIT, p.field)
    lines = adopt_proof(pr, p)
    tr = PartsTranslator(pr, TotalGrading(pr.st), k)
    table = tr.translate(lines, p.assumptions)
    return finalize(pr, table[(len(lines) - 1, k)])


def prove_degree_bound(p: Proof) -> Proof:
    """Rebuild a proof of F = G using only syntactic degree <= deg(F = G)."""
    pr = Prover(SYSTEM_CIRCUIT, p.field)
    lines = adopt_proof(pr, p)
    f, g = lines[-1][0], lines[-1][1]
    d = max(pr.st.syntactic_degree(f), pr.st.syntactic_degree(g))
    tr = PartsTranslator(pr, TotalGrading(pr.st), d)
    table = tr.translate(lines, p.assumptions)
    pe = _decompose_to_common(pr, tr, f, g, d, table, len(lines) - 1)
    return finalize(pr, pe)


def _decompose_to_common(pr: Prover, tr: PartsTranslator, f, g, d, table, last):
    """f = g via the padded part sums over the common grade range."""
    P = tr.parts
    _, hf = P.bounds(f)
    _, hg = P.bounds(g)
    D = max(hf, hg)
    dec_f = tr.decompose(f)
    dec_g = tr.decompose(g)
    sum_f = pr.build_tree(ADD, [P.part_node(f, kk) for kk in range(D + 1)])
    sum_g = pr.build_tree(ADD, [P.part_node(g, kk) for kk in range(D + 1)])
    atoms_f = tr.part_atoms(f) | {P.part_node(f, kk) for kk in range(D + 1)}
    atoms_g = tr.part_atoms(g) | {P.part_node(g, kk) for kk in range(D + 1)}
    ext_f = tr.sums_eq(dec_f.rhs, atoms_f, sum_f, atoms_f) if dec_f.rhs != sum_f \
        else pr.refl(sum_f)
    ext_g = tr.sums_eq(dec_g.rhs, atoms_g, sum_g, atoms_g) if dec_g.rhs != sum_g \
        else pr.refl(sum_g)
    mid = tr._tree_congr([table[(last, kk)] for kk in range(D + 1)])
    return pr.chain(dec_f, ext_f, mid, pr.sym(ext_g), pr.sym(dec_g))


# ---------------------------------------------------------------------------
# depth balancing
# ---------------------------------------------------------------------------

class BalanceContext:
    """Balanced value and derivative-coefficient nodes over one store.

    value(v) is the depth-reduced circuit for the subcircuit at v of a
    syntactically homogeneous circuit. deriv(w, v) is the balanced circuit
    for the linear coefficient of gate w inside v (demanded only when
    2*deg(w) > deg(v)). Split equations between these nodes are produced on
    demand and cached; they are the backbone of balanced proofs.
    """

    def __init__(self, pr: Prover):
        assert pr.st.dedup
        self.pr = pr
        self.st = pr.st
        self.parts = Parts(pr, TotalGrading(pr.st))
        self._val: dict[int, int] = {}
        self._deriv: dict[tuple[int, int], int] = {}
        self._val_pe: dict[int, PE] = {}
        self._deriv_pe: dict[tuple[int, int], PE] = {}
        self._contains: dict[int, dict[int, bool]] = {}
        self._frontier: dict[tuple[int, int], tuple[int, ...]] = {}
        self._dpoly: dict[tuple[int, int], SparsePoly] = {}
        self._balanced: dict[int, int] = {}
        self._l15: dict[int, PE] = {}

    # -- structural helpers ------------------------------------------------

    def deg(self, v: int) -> int:
        return self.st.syntactic_degree(v)

    def is_homogeneous(self, root: int) -> bool:
        st = self.st
        for i in st.reachable(root):
            if st.kind[i] == ADD and self.deg(st.a[i]) != self.deg(st.b[i]):
                return False
        return True

    def contains(self, w: int, v: int) -> bool:
        """Is w a node of the subcircuit at v? Pruned by degree monotony."""
        memo = self._contains.setdefault(w, {})
        st, dw = self.st, self.deg(w)

        def go(u):
            if u in memo:
                return memo[u]
            if u == w:
                memo[u] = True
            elif self.deg(u) < dw or st.kind[u] in (CONST, VAR):
                memo[u] = False
            else:
                memo[u] = any(go(c) for c in st.children(u))
            return memo[u]

        return go(v)

    def frontier(self, v: int, m: int) -> tuple[int, ...]:
        """Product gates below v of degree > m whose factors have degree <= m,
        in deterministic first-visit DFS order."""
        key = (v, m)
        if key in self._frontier:
            return self._frontier[key]
        st = self.st
        out: list[int] = []
        seen: set[int] = set()

        def go(u):
            if u in seen or self.deg(u) <= m:
                return
            seen.add(u)
            if st.kind[u] == MUL and self.deg(st.a[u]) <= m and self.deg(st.b[u]) <= m:
                out.append(u)
                return
            for c in st.children(u):
                go(c)

        go(v)
        res = tuple(out)
        self._frontier[key] = res
        return res

    def route(self, t: int) -> tuple[int, int]:
        """(carrier, other): the factor of higher degree first, ties left."""
        l, r = self.st.a[t], self.st.b[t]
        return (l, r) if self.deg(l) >= self.deg(r) else (r, l)

    @staticmethod
    def stage(d: int) -> int:
        """m = 2^i with 2^i < d <= 2^(i+1), for d >= 2."""
        return 1 << ((d - 1).bit_length() - 1)

    def dpoly(self, w: int, v: int) -> SparsePoly:
        """The coefficient polynomial of gate w in v (exact, linear cases)."""
        key = (w, v)
        if key in self._dpoly:
            return self._dpoly[key]
        fd = self.st.field
        if not self.contains(w, v):
            out = SparsePoly(fd, {})
        elif w == v:
            out = SparsePoly.const(fd, fd.one())
        elif self.st.kind[v] == ADD:
            out = self.dpoly(w, self.st.a[v]).add(self.dpoly(w, self.st.b[v]))
        else:
            carrier, other = self.route(v)
            out = self.dpoly(w, carrier).mul(expand(self.st, other))
        self._dpoly[key] = out
        return out

    # -- node construction ------------------------------------------------------

    def value(self, v: int) -> int:
        if v in self._val:
            return self._val[v]
        pr, st = self.pr, self.st
        d = self.deg(v)
        if d <= 1:
            node = pr.linform_node(expand(st, v))
        else:
            m = self.stage(d)
            terms = []
            for t in self.frontier(v, m):
                tl, tr_ = st.a[t], st.b[t]
                terms.append(st.mul(st.mul(self.deriv(t, v), self.value(tl)),
                                    self.value(tr_)))
            node = pr.build_tree(ADD, terms)
        self._val[v] = node
        return node

    def deriv(self, w: int, v: int) -> int:
        key = (w, v)
        if key in self._deriv:
            return self._deriv[key]
        pr, st = self.pr, self.st
        assert 2 * self.deg(w) > self.deg(v)
        if not self.contains(w, v):
            node = pr.zero()
        else:
            gap = self.deg(v) - self.deg(w)
            if gap <= 1:
                node = pr.linform_node(self.dpoly(w, v))
            else:
                m = self.stage(gap) + self.deg(w)
                terms = []
                for t in self.frontier(v, m):
                    carrier, other = self.route(t)
                    terms.append(st.mul(st.mul(self.deriv(t, v),
                                               self.deriv(w, carrier)),
                                        self.value(other)))
                node = pr.build_tree(ADD, terms)
        self._deriv[key] = node
        return node

    def balanced(self, root: int) -> int:
        """The top-level balanced form: direct for homogeneous circuits,
        the sum of balanced graded parts otherwise."""
        if root in self._balanced:
            return self._balanced[root]
        if self.is_homogeneous(root):
            node = self.value(root)
        else:
            _, hi = self.parts.bounds(root)
            node = self.pr.build_tree(
                ADD, [self.value(self.parts.part_node(root, k))
                      for k in range(hi + 1)])
        self._balanced[root] = node
        return node

    # -- zero-aware sum matching --------------------------------------------------

    def prod_zero(self, term: int, atom_pred) -> PE | None:
        """PE(term = 0) when some atom factor is a zero constant, else None."""
        pr, st = self.pr, self.st

        def go(i):
            if atom_pred(i) or st.kind[i] != MUL:
                return (pr.refl(i), True) if pr.is_zero(i) else (pr.refl(i), False)
            pl, zl = go(st.a[i])
            pright, zr = go(st.b[i])
            base = pr.congr_mul(pl, pright)
            if zr:
                return pr.chain(base, pr.mul_zero(pl.rhs, pright.rhs)), True
            if zl:
                return pr.chain(base, pr.zero_mul(pright.rhs, pl.rhs)), True
            return base, False

        pe, z = go(term)
        return pe if z else None

    def _normalize(self, tree: int, term_pred, atom_pred):
        """Drop terms that are zero constants or contain a zero atom factor."""
        pr, st = self.pr, self.st

        def go(i):
            if term_pred(i) or st.kind[i] != ADD:
                if pr.is_zero(i):
                    return pr.refl(i), None
                z = self.prod_zero(i, atom_pred)
                if z is not None:
                    return z, None
                return pr.refl(i), i
            pl, l = go(st.a[i])
            pright, r = go(st.b[i])
            base = pr.congr_add(pl, pright)
            if l is None and r is None:
                return pr.chain(base, pr.add_zero(pl.rhs, pright.rhs)), None
            if r is None:
                return pr.chain(base, pr.add_zero(l, pright.rhs)), l
            if l is None:
                return pr.chain(base, pr.comm(ADD, pl.rhs, r),
                                pr.add_zero(r, pl.rhs)), r
            return base, base.rhs

        return go(tree)

    def sums_match(self, a: int, b: int, term_pred, atom_pred) -> PE:
        """a = b for sum trees equal up to zero terms and reordering."""
        pr = self.pr
        pa, ma = self._normalize(a, term_pred, atom_pred)
        pb, mb = self._normalize(b, term_pred, atom_pred)
        if ma is None and mb is None:
            return pr.chain(pa, pr.sim_eq(pa.rhs, pb.rhs), pr.sym(pb))
        if ma is None or mb is None:
            raise NotEqual("sums differ after dropping zero terms")
        stop = lambda i: term_pred(i) or self.st.kind[i] != ADD
        mid = pr.to_tree(ADD, ma, mb, stop)
        return pr.chain(pa, mid, pr.sym(pb))

    # -- split equations -----------------------------------------------------------

    def val_split(self, v: int) -> PE:
        """[H_v] = [H_a] + [H_b] or [H_a] * [H_b] over the literal children."""
        if v in self._val_pe:
            return self._val_pe[v]
        pr, st = self.pr, self.st
        kind = st.kind[v]
        assert kind in (ADD, MUL)
        a, b = st.a[v], st.b[v]
        if self.deg(v) <= 1:
            comb = pr.op(kind, self.value(a), self.value(b))
            _, pe = pr.prove_linear(comb)
            out = pr.chain(pr.sim_eq(self.value(v), pe.rhs), pr.sym(pe))
        elif kind == ADD:
            out = self._val_split_add(v)
        else:
            out = self._val_split_mul(v)
        self._val_pe[v] = out
        return out

    def _term_atoms(self, v, m) -> set[int]:
        out = set()
        for t in self.frontier(v, m):
            out.add(self.deriv(t, v))
            out.add(self.value(st_a := self.st.a[t]))
            out.add(self.value(self.st.b[t]))
        return out

    def _val_split_add(self, v: int) -> PE:
        pr, st = self.pr, self.st
        a, b = st.a[v], st.b[v]
        m = self.stage(self.deg(v))
        lhs = self.value(v)
        B = self.frontier(v, m)
        atoms = set()
        steps = {}
        for t in B:
            tl, tr_ = st.a[t], st.b[t]
            term = st.mul(st.mul(self.deriv(t, v), self.value(tl)), self.value(tr_))
            dpe = self.deriv_split(t, v)  # deriv(t,v) = deriv(t,a) + deriv(t,b)
            da, db = self.deriv(t, a), self.deriv(t, b)
            s = pr.congr_mul(pr.congr_mul(dpe, pr.refl(self.value(tl))),
                             pr.refl(self.value(tr_)))
            s = pr.chain(s, pr.congr_mul(
                pr.distrib_right(da, db, self.value(tl)), pr.refl(self.value(tr_))))
            s = pr.chain(s, pr.distrib_right(
                st.mul(da, self.value(tl)), st.mul(db, self.value(tl)),
                self.value(tr_)))
            if term not in steps:
                steps[term] = s
            atoms |= {da, db, self.value(tl), self.value(tr_)}
        mid = pr.map_leaves(ADD, lhs, lambda t: steps[t],
                            is_leaf=lambda t: t in steps)
        target = st.add(self.value(a), self.value(b))
        term_pred = self._mk_term_pred(atoms)
        out = pr.chain(mid, self.sums_match(mid.rhs, target, term_pred,
                                            lambda i: i in atoms))
        assert st.cls[out.lhs] == st.cls[lhs]
        return out

    def _mk_term_pred(self, atoms):
        # terms are the (d * val) * val products; atoms are their factors
        def pred(i):
            st = self.st
            if st.kind[i] != MUL:
                return False
            x = st.a[i]
            return (st.kind[x] == MUL and st.a[x] in atoms and st.b[x] in atoms
                    and st.b[i] in atoms)
        return pred

    def _val_split_mul(self, v: int) -> PE:
        pr, st = self.pr, self.st
        l, r = st.a[v], st.b[v]
        carrier, other = self.route(v)
        m = self.stage(self.deg(v))
        lhs = self.value(v)
        B = self.frontier(v, m)
        if B == (v,):
            # value(v) is (deriv(v,v) * value(l)) * value(r) with deriv(v,v)=1
            one_node = self.deriv(v, v)
            s = pr.congr_mul(pr.one_mul(self.value(l), one_node),
                             pr.refl(self.value(r)))
            return s
        atoms = set()
        steps = {}
        vo = self.value(other)
        for t in B:
            tl, tr_ = st.a[t], st.b[t]
            dt, vl_, vr_ = self.deriv(t, v), self.value(tl), self.value(tr_)
            term = st.mul(st.mul(dt, vl_), vr_)
            dpe = self.deriv_split(t, v)  # deriv(t,v) = deriv(t,carrier)*value(other)
            dtc = self.deriv(t, carrier)
            s = pr.congr_mul(pr.congr_mul(dpe, pr.refl(vl_)), pr.refl(vr_))
            # ((dtc*vo)*vl)*vr -> ((dtc*vl)*vr)*vo
            shuffled = st.mul(st.mul(st.mul(dtc, vl_), vr_), vo)
            leafset = {dtc, vo, vl_, vr_}
            s = pr.chain(s, pr.to_tree(MUL, s.rhs, shuffled,
                                       lambda i: i in leafset))
            if term not in steps:
                steps[term] = s
            atoms |= {dtc, vl_, vr_}
        mid = pr.map_leaves(ADD, lhs, lambda t: steps[t],
                            is_leaf=lambda t: t in steps)
        # pull value(other) out of the sum
        dist = pr.distribute_right(self.value(carrier), vo,
                                   self._mk_term_pred(atoms))
        term_pred = lambda i: (st.kind[i] == MUL and st.b[i] == vo)
        out = pr.chain(mid, self.sums_match(mid.rhs, dist.rhs, term_pred,
                                            lambda i: i in atoms or i == vo),
                       pr.sym(dist))
        if carrier != l:
            out = pr.chain(out, pr.comm(MUL, self.value(carrier), vo))
        assert st.cls[out.rhs] == st.cls[st.mul(self.value(l), self.value(r))]
        return out

    def deriv_split(self, w: int, v: int) -> PE:
        """deriv(w,v) = deriv(w,a)+deriv(w,b) (add) or deriv(w,carrier)*value(other)."""
        key = (w, v)
        if key in self._deriv_pe:
            return self._deriv_pe[key]
        pr, st = self.pr, self.st
        kind = st.kind[v]
        assert kind in (ADD, MUL) and w != v
        gap = self.deg(v) - self.deg(w)
        if gap <= 1:
            out = self._deriv_split_linear(w, v)
        elif kind == ADD:
            out = self._deriv_split_add(w, v)
        else:
            out = self._deriv_split_mul(w, v)
        self._deriv_pe[key] = out
        return out

    def _deriv_split_linear(self, w: int, v: int) -> PE:
        pr, st = self.pr, self.st
        if st.kind[v] == ADD:
            comb = st.add(self.deriv(w, st.a[v]), self.deriv(w, st.b[v]))
        else:
            carrier, other = self.route(v)
            comb = st.mul(self.deriv(w, carrier), self.value(other))
        _, pe = pr.prove_linear(comb)
        return pr.chain(pr.sim_eq(self.deriv(w, v), pe.rhs), pr.sym(pe))

    def _deriv_split_add(self, w: int, v: int) -> PE:
        pr, st = self.pr, self.st
        a, b = st.a[v], st.b[v]
        gap = self.deg(v) - self.deg(w)
        m = self.stage(gap) + self.deg(w)
        lhs = self.deriv(w, v)
        B = self.frontier(v, m)
        atoms = set()
        steps = {}
        for t in B:
            carrier, other = self.route(t)
            dt, dw_, vo = self.deriv(t, v), self.deriv(w, carrier), self.value(other)
            term = st.mul(st.mul(dt, dw_), vo)
            dpe = self.deriv_split(t, v)
            da, db = self.deriv(t, a), self.deriv(t, b)
            s = pr.congr_mul(pr.congr_mul(dpe, pr.refl(dw_)), pr.refl(vo))
            s = pr.chain(s, pr.congr_mul(pr.distrib_right(da, db, dw_), pr.refl(vo)))
            s = pr.chain(s, pr.distrib_right(st.mul(da, dw_), st.mul(db, dw_), vo))
            if term not in steps:
                steps[term] = s
            atoms |= {da, db, dw_, vo}
        mid = pr.map_leaves(ADD, lhs, lambda t: steps[t],
                            is_leaf=lambda t: t in steps)
        target = st.add(self.deriv(w, a), self.deriv(w, b))
        out = pr.chain(mid, self.sums_match(mid.rhs, target,
                                            self._mk_term_pred(atoms),
                                            lambda i: i in atoms))
        assert st.cls[out.lhs] == st.cls[lhs]
        return out

    def _deriv_split_mul(self, w: int, v: int) -> PE:
        pr, st = self.pr, self.st
        carrier, other = self.route(v)
        gap = self.deg(v) - self.deg(w)
        m = self.stage(gap) + self.deg(w)
        lhs = self.deriv(w, v)
        vo = self.value(other)
        B = self.frontier(v, m)
        if B == (v,):
            one_node = self.deriv(v, v)
            s = pr.congr_mul(pr.one_mul(self.deriv(w, st.a[v] if carrier == st.a[v]
                                                   else carrier), one_node),
                             pr.refl(vo))
            # value(v)'s frontier is {v}: deriv(w,v) = (1 * deriv(w,carrier)) * value(other)
            return s
        atoms = set()
        steps = {}
        for t in B:
            tc, to = self.route(t)
            dt, dwc, vto = self.deriv(t, v), self.deriv(w, tc), self.value(to)
            term = st.mul(st.mul(dt, dwc), vto)
            dpe = self.deriv_split(t, v)  # deriv(t,v) = deriv(t,carrier)*value(other)
            dtc = self.deriv(t, carrier)
            s = pr.congr_mul(pr.congr_mul(dpe, pr.refl(dwc)), pr.refl(vto))
            shuffled = st.mul(st.mul(st.mul(dtc, dwc), vto), vo)
            leafset = {dtc, vo, dwc, vto}
            s = pr.chain(s, pr.to_tree(MUL, s.rhs, shuffled,
                                       lambda i: i in leafset))
            if term not in steps:
                steps[term] = s
            atoms |= {dtc, dwc, vto}
        mid = pr.map_leaves(ADD, lhs, lambda t: steps[t],
                            is_leaf=lambda t: t in steps)
        dist = pr.distribute_right(self.deriv(w, carrier), vo,
                                   self._mk_term_pred(atoms))
        term_pred = lambda i: (st.kind[i] == MUL and st.b[i] == vo)
        out = pr.chain(mid, self.sums_match(mid.rhs, dist.rhs, term_pred,
                                            lambda i: i in atoms or i == vo),
                       pr.sym(dist))
        assert st.cls[out.rhs] == st.cls[st.mul(self.deriv(w, carrier), vo)]
        return out
