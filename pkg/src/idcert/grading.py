"""Graded decomposition of circuits and line-by-line proof translation.

A grading assigns a weight to every leaf (1 per variable for total degree,
or 1 for one distinguished variable only). part(u, k) builds a circuit for
the weight-k component of u with zero branches absorbed on the fly, so the
result is non-redundant by construction.

PartsTranslator turns a valid division-free proof of F = G into proofs of
the component equations part(F, j) = part(G, j) for all j <= k, handling
every axiom and rule structurally. Special lines (for example
truncated-inverse equations during division elimination) are caught by a
caller-supplied hook.
"""

from __future__ import annotations

from .circuit import ADD, CONST, INV, MUL, VAR, Circuit
from .proofbuild import PE, NotEqual, Prover


class Grading:
    """Leaf weights plus the leaf part rule."""

    keeps_var = True

    def __init__(self, store: Circuit, var_weight=None):
        self.st = store
        self.var_weight = var_weight or (lambda name: 1)

    def leaf_weight(self, i: int) -> int:
        if self.st.kind[i] == VAR:
            return self.var_weight(self.st.a[i])
        return 0

    def leaf_part(self, i: int, k: int, pr: Prover) -> int | None:
        """The weight-k component of a leaf; None encodes the zero circuit."""
        st = self.st
        if st.kind[i] == CONST:
            if st.field.is_zero(st.a[i]):
                return None
            return i if k == 0 else None
        w = self.leaf_weight(i)
        if k != w:
            return None
        if w == 0 or self.keeps_var:
            return i
        return pr.one()  # coefficient extraction strips the variable


class TotalGrading(Grading):
    """Weight 1 on every variable; components keep their variables."""


class SingleVarGrading(Grading):
    """Weight 1 on one distinguished variable only; components are its
    coefficients, so the weight-1 part of that leaf is the constant 1."""

    keeps_var = False

    def __init__(self, store: Circuit, var: str):
        super().__init__(store, lambda name: 1 if name == var else 0)
        self.var = var


class Parts:
    """Graded components per node, with absorbed zeros and range pruning."""

    def __init__(self, pr: Prover, grading: Grading):
        self.pr = pr
        self.st = pr.st
        self.g = grading
        self._memo: dict[tuple[int, int], int | None] = {}
        self._lo: dict[int, int] = {}
        self._hi: dict[int, int] = {}

    def bounds(self, u: int) -> tuple[int, int]:
        if u in self._hi:
            return self._lo[u], self._hi[u]
        st = self.st
        for i in st.reachable(u):
            if i in self._hi:
                continue
            k = st.kind[i]
            if k == CONST:
                lo = hi = 0
            elif k == VAR:
                lo = hi = self.g.leaf_weight(i)
            elif k == INV:
                raise NotEqual("graded parts need a division-free circuit")
            elif k == ADD:
                lo = min(self._lo[st.a[i]], self._lo[st.b[i]])
                hi = max(self._hi[st.a[i]], self._hi[st.b[i]])
            else:
                lo = self._lo[st.a[i]] + self._lo[st.b[i]]
                hi = self._hi[st.a[i]] + self._hi[st.b[i]]
            self._lo[i], self._hi[i] = lo, hi
        return self._lo[u], self._hi[u]

    def part(self, u: int, k: int) -> int | None:
        key = (u, k)
        if key in self._memo:
            return self._memo[key]
        st, pr = self.st, self.pr
        lo, hi = self.bounds(u)
        if k < lo or k > hi:
            self._memo[key] = None
            return None
        kind = st.kind[u]
        if kind in (CONST, VAR):
            out = self.g.leaf_part(u, k, pr)
        elif kind == ADD:
            pa, pb = self.part(st.a[u], k), self.part(st.b[u], k)
            if pa is None:
                out = pb
            elif pb is None:
                out = pa
            else:
                out = st.add(pa, pb)
        else:
            terms = []
            for j in range(k + 1):
                pa, pb = self.part(st.a[u], j), self.part(st.b[u], k - j)
                if pa is not None and pb is not None:
                    terms.append(st.mul(pa, pb))
            out = st.balanced_sum(terms) if terms else None
        self._memo[key] = out
        return out

    def part_node(self, u: int, k: int) -> int:
        p = self.part(u, k)
        return self.pr.zero() if p is None else p


class PartsTranslator:
    """Translate a proof line-by-line into its graded component equations."""

    def __init__(self, pr: Prover, grading: Grading, k: int, line_hook=None):
        assert pr.st.dedup, "graded translation needs a deduplicating store"
        self.pr = pr
        self.st = pr.st
        self.parts = Parts(pr, grading)
        self.k = k
        self.line_hook = line_hook

    # -- padded normal forms --------------------------------------------------

    def pad_add(self, u: int, k: int) -> PE:
        """part(u,k) = part(a,k) + part(b,k) for a sum gate u (padded)."""
        st, pr = self.st, self.pr
        pa, pb = self.parts.part(st.a[u], k), self.parts.part(st.b[u], k)
        pan = self.parts.part_node(st.a[u], k)
        pbn = self.parts.part_node(st.b[u], k)
        if pa is not None and pb is not None:
            return pr.refl(st.add(pan, pbn))
        if pa is None and pb is None:
            return pr.sym(pr.add_zero(pan, pbn))
        if pa is None:
            return pr.sym(pr.zero_add(pbn, pan))
        return pr.sym(pr.add_zero(pan, pbn))

    def full_product_row(self, u: int, k: int) -> int:
        """The fully padded sum over j of part(a,j) * part(b,k-j)."""
        st = self.st
        terms = [st.mul(self.parts.part_node(st.a[u], j),
                        self.parts.part_node(st.b[u], k - j))
                 for j in range(k + 1)]
        return self.pr.build_tree(ADD, terms)

    def row_terms(self, row: int) -> list[int]:
        return self.pr.op_leaves(ADD, row, lambda i: self.st.kind[i] != ADD)

    def pad_mul(self, u: int, k: int) -> PE:
        """part(u,k) = fully padded product row, for a product gate u."""
        pr = self.pr
        row = self.full_product_row(u, k)
        pe, m = self.sum_normalize(row, set(self.row_terms(row)))
        tgt = self.parts.part(u, k)
        if tgt is None:
            assert m is None, "padded row did not vanish"
            return pr.sym(pe)
        assert m is not None, "padded row vanished unexpectedly"
        fix = pr.to_tree(ADD, m, tgt, self._set_pred(set(self.row_terms(m))))
        return pr.sym(pr.chain(pe, fix))

    def _set_pred(self, s: set[int]):
        return lambda i: i in s

    # -- zero-dropping sum normalizer ---------------------------------------------

    def _term_zero(self, t) -> tuple[PE, int | None]:
        """Detect a zero term: a zero constant or a product with a top-level
        zero-constant factor (padded rows never bury zeros deeper)."""
        pr, st = self.pr, self.st
        if pr.is_zero(t):
            return pr.refl(t), None
        if st.kind[t] == MUL:
            x, y = st.a[t], st.b[t]
            if pr.is_zero(y):
                return pr.mul_zero(x, y), None
            if pr.is_zero(x):
                return pr.zero_mul(y, x), None
        return pr.refl(t), t

    def sum_normalize(self, tree: int, term_set: set[int]) -> tuple[PE, int | None]:
        """Drop zero terms from a sum tree; terms listed in term_set are atomic."""
        pr, st = self.pr, self.st

        def go(i):
            if i in term_set or st.kind[i] != ADD:
                return self._term_zero(i)
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

    def sums_eq(self, a: int, terms_a: set[int], b: int, terms_b: set[int]) -> PE:
        """a = b for sum trees equal up to zero terms and term reordering."""
        pr = self.pr
        pa, ma = self.sum_normalize(a, terms_a)
        pb, mb = self.sum_normalize(b, terms_b)
        if ma is None and mb is None:
            return pr.chain(pa, pr.sim_eq(pa.rhs, pb.rhs), pr.sym(pb))
        if ma is None or mb is None:
            raise NotEqual("sums differ after dropping zero terms")
        surv = set(self.row_terms(ma)) | set(self.row_terms(mb))
        mid = pr.to_tree(ADD, ma, mb, self._set_pred(surv))
        return pr.chain(pa, mid, pr.sym(pb))

    # -- axiom translation ------------------------------------------------------

    def _translate_axiom(self, lhs: int, rhs: int, name: str, j: int) -> PE:
        pr, st = self.pr, self.st
        P = self.parts

        if name in ("A1", "A1p", "C1", "C2", "A7", "A8"):
            # similar sides, or shapes whose parts absorb to similar circuits
            return pr.sim_eq(P.part_node(lhs, j), P.part_node(rhs, j))

        if name == "A9":
            pl = P.part(lhs, j)
            rn = P.part_node(rhs, j)
            if pl is None:
                return pr.sim_eq(P.part_node(lhs, j), rn)
            # pl is the single term part(f,j) * 1
            pe = pr.mul_one(st.a[pl], st.b[pl])
            return pr.chain(pe, pr.sim_eq(pe.rhs, rn))

        if name == "A10":
            return self._const_parts_eq(lhs, rhs, j)

        if name == "A2":
            pe1 = self.pad_add(lhs, j)
            mid = pr.comm(ADD, P.part_node(st.a[lhs], j), P.part_node(st.b[lhs], j))
            pe2 = pr.sym(self.pad_add(rhs, j))
            return pr.chain(pe1, mid, pe2)

        if name == "A3":
            f, gh = st.a[lhs], st.b[lhs]
            fg, h = st.a[rhs], st.b[rhs]
            g = st.a[gh]
            pf, pg, ph = (P.part_node(x, j) for x in (f, g, st.b[gh]))
            s1 = self.pad_add(lhs, j)
            s2 = pr.congr_add(pr.refl(pf), self.pad_add(gh, j))
            s3 = pr.assoc(ADD, pf, pg, ph)
            s4 = pr.sym(pr.congr_add(self.pad_add(fg, j), pr.refl(ph)))
            s5 = pr.sym(self.pad_add(rhs, j))
            return pr.chain(s1, s2, s3, s4, s5)

        if name == "A4":
            pe1 = self.pad_mul(lhs, j)
            row = self.full_product_row(lhs, j)
            mid = pr.map_leaves(ADD, row,
                                lambda t: pr.comm(MUL, st.a[t], st.b[t]))
            row_r = self.full_product_row(rhs, j)
            fix = pr.to_tree(ADD, mid.rhs, row_r,
                             self._set_pred(set(self.row_terms(mid.rhs)) |
                                            set(self.row_terms(row_r))))
            pe2 = pr.sym(self.pad_mul(rhs, j))
            return pr.chain(pe1, mid, fix, pe2)

        if name == "A6":
            return self._translate_distrib(lhs, rhs, j)

        if name == "A5":
            return self._translate_assoc_mul(lhs, rhs, j)

        raise NotEqual(f"cannot translate axiom {name}")

    def _const_parts_eq(self, lhs, rhs, j) -> PE:
        """Constant equation: every graded part is a constant circuit."""
        pr, st = self.pr, self.st
        P = self.parts
        ln, rn = P.part_node(lhs, j), P.part_node(rhs, j)
        if j > 0:
            return pr.sim_eq(ln, rn)

        def to_const(u):
            if st.kind[u] == CONST:
                return pr.refl(u)
            x, y = st.a[u], st.b[u]
            return pr.sym(pr.const_fact(st.kind[u], st.a[x], st.a[y]))

        p1, p2 = to_const(ln), to_const(rn)
        return pr.chain(p1, pr.sim_eq(p1.rhs, p2.rhs), pr.sym(p2))

    def _translate_distrib(self, lhs, rhs, j) -> PE:
        # f*(g+h) = f*g + f*h at grade j
        pr, st = self.pr, self.st
        P = self.parts
        f, gh = st.a[lhs], st.b[lhs]
        g, h = st.a[gh], st.b[gh]
        pe1 = self.pad_mul(lhs, j)
        row = self.full_product_row(lhs, j)
        steps = {}
        for a_ in range(j + 1):
            pf = P.part_node(f, a_)
            m = j - a_
            t = st.mul(pf, P.part_node(gh, m))
            if t in steps:
                continue
            s = pr.congr_mul(pr.refl(pf), self.pad_add(gh, m))
            s = pr.chain(s, pr.distrib(pf, P.part_node(g, m), P.part_node(h, m)))
            steps[t] = s
        mid = pr.map_leaves(ADD, row, lambda t: steps[t],
                            is_leaf=lambda t: t in steps)
        rowg = self.full_product_row(st.a[rhs], j)
        rowh = self.full_product_row(st.b[rhs], j)
        target = st.add(rowg, rowh)
        atoms = (set(self.row_terms(mid.rhs)) | set(self.row_terms(rowg)) |
                 set(self.row_terms(rowh)))
        fix = self.sums_eq(mid.rhs, atoms, target, atoms)
        back = pr.sym(pr.congr_add(self.pad_mul(st.a[rhs], j),
                                   self.pad_mul(st.b[rhs], j)))
        pe2 = pr.sym(self.pad_add(rhs, j))
        return pr.chain(pe1, mid, fix, back, pe2)

    def _translate_assoc_mul(self, lhs, rhs, j) -> PE:
        # f*(g*h) = (f*g)*h at grade j
        pr, st = self.pr, self.st
        P = self.parts
        f, gh = st.a[lhs], st.b[lhs]
        fg, h = st.a[rhs], st.b[rhs]
        g, hh = st.a[gh], st.b[gh]

        pe1 = self.pad_mul(lhs, j)
        row = self.full_product_row(lhs, j)
        steps = {}
        for a_ in range(j + 1):
            pf = P.part_node(f, a_)
            m = j - a_
            t = st.mul(pf, P.part_node(gh, m))
            if t in steps:
                continue
            s = pr.congr_mul(pr.refl(pf), self.pad_mul(gh, m))
            inner = self.full_product_row(gh, m)
            inner_terms = set(self.row_terms(inner))
            s = pr.chain(s, pr.distribute_left(pf, inner, self._set_pred(inner_terms)))

            def fix_term(t2, pf=pf):
                return pr.assoc(MUL, pf, st.a[st.b[t2]], st.b[st.b[t2]])

            s = pr.chain(s, pr.map_leaves(ADD, s.rhs, fix_term))
            steps[t] = s
        mid = pr.map_leaves(ADD, row, lambda t: steps[t],
                            is_leaf=lambda t: t in steps)

        pe2 = pr.sym(self.pad_mul(rhs, j))
        row_r = self.full_product_row(rhs, j)
        steps_r = {}
        for m in range(j + 1):
            ph = P.part_node(h, j - m)
            t = st.mul(P.part_node(fg, m), ph)
            if t in steps_r:
                continue
            s = pr.congr_mul(self.pad_mul(fg, m), pr.refl(ph))
            inner = self.full_product_row(fg, m)
            inner_terms = set(self.row_terms(inner))
            s = pr.chain(s, pr.distribute_right(inner, ph, self._set_pred(inner_terms)))
            steps_r[t] = s
        mid_r = pr.map_leaves(ADD, row_r, lambda t: steps_r[t],
                              is_leaf=lambda t: t in steps_r)

        atoms = set(self.row_terms(mid.rhs)) | set(self.row_terms(mid_r.rhs))
        fix = self.sums_eq(mid.rhs, atoms, mid_r.rhs, atoms)
        return pr.chain(pe1, mid, fix, pr.sym(mid_r), pe2)

    # -- whole-proof translation -----------------------------------------------

    def translate(self, lines, assumptions=()) -> dict[tuple[int, int], PE]:
        """Translate lines into grade-j equations for j = 0..k."""
        if assumptions:
            raise NotEqual("graded translation needs an assumption-free proof")
        pr = self.pr
        P = self.parts
        out: dict[tuple[int, int], PE] = {}
        for idx, (lhs, rhs, just) in enumerate(lines):
            tag = just[0]
            for j in range(self.k + 1):
                if self.line_hook is not None:
                    hooked = self.line_hook(self, idx, lhs, rhs, just, j)
                    if hooked is not None:
                        out[(idx, j)] = hooked
                        continue
                if tag == "ax":
                    out[(idx, j)] = self._translate_axiom(lhs, rhs, just[1], j)
                elif tag == "r1":
                    out[(idx, j)] = pr.sym(out[(just[1], j)])
                elif tag == "r2":
                    out[(idx, j)] = pr.trans(out[(just[1], j)], out[(just[2], j)])
                elif tag == "r3":
                    a, b = out[(just[1], j)], out[(just[2], j)]
                    pe = self.pad_add(lhs, j)
                    mid = pr.congr_add(a, b)
                    pe2 = pr.sym(self.pad_add(rhs, j))
                    out[(idx, j)] = pr.chain(pe, mid, pe2)
                elif tag == "r4":
                    a_idx, b_idx = just[1], just[2]
                    pe = self.pad_mul(lhs, j)
                    terms = [pr.congr_mul(out[(a_idx, jj)], out[(b_idx, j - jj)])
                             for jj in range(j + 1)]
                    mid = self._tree_congr(terms)
                    pe2 = pr.sym(self.pad_mul(rhs, j))
                    out[(idx, j)] = pr.chain(pe, mid, pe2)
                else:
                    raise NotEqual(f"cannot translate justification {tag}")
        return out

    def _tree_congr(self, pes: list[PE]) -> PE:
        if len(pes) == 1:
            return pes[0]
        h = len(pes) // 2
        return self.pr.congr_add(self._tree_congr(pes[:h]), self._tree_congr(pes[h:]))

    # -- graded decomposition (sum of all parts) ----------------------------------

    def padded_sum(self, u: int) -> int:
        _, hi = self.parts.bounds(u)
        return self.pr.build_tree(
            ADD, [self.parts.part_node(u, k) for k in range(hi + 1)])

    def part_atoms(self, u: int) -> set[int]:
        _, hi = self.parts.bounds(u)
        return {self.parts.part_node(u, k) for k in range(hi + 1)}

    def decompose(self, u: int) -> PE:
        """u = padded sum of its parts (grades 0..hi(u))."""
        pr, st = self.pr, self.st
        P = self.parts
        memo: dict[int, PE] = {}

        def go(i) -> PE:
            if i in memo:
                return memo[i]
            kind = st.kind[i]
            _, hi = P.bounds(i)
            target = self.padded_sum(i)
            tset = self.part_atoms(i)
            if kind in (CONST, VAR):
                pe_n, m = self.sum_normalize(target, tset)
                head = pr.sim_eq(i, pe_n.rhs if m is None else m)
                pe = pr.chain(head, pr.sym(pe_n))
            elif kind == ADD:
                base = pr.congr_add(go(st.a[i]), go(st.b[i]))
                pairs = [st.add(P.part_node(st.a[i], kk), P.part_node(st.b[i], kk))
                         for kk in range(hi + 1)]
                paired = pr.build_tree(ADD, pairs)
                atoms = (self.part_atoms(st.a[i]) | self.part_atoms(st.b[i]) |
                         {P.part_node(st.a[i], kk) for kk in range(hi + 1)} |
                         {P.part_node(st.b[i], kk) for kk in range(hi + 1)})
                fix = self.sums_eq(base.rhs, atoms, paired, atoms)
                pads = {}
                for kk in range(hi + 1):
                    key = pairs[kk]
                    if key not in pads:
                        pads[key] = pr.sym(self.pad_add(i, kk))
                mid = pr.map_leaves(ADD, paired, lambda t: pads[t],
                                    is_leaf=lambda t: t in pads)
                pe = pr.chain(base, fix, mid,
                              pr.sim_eq(mid.rhs, target))
            else:
                base = pr.congr_mul(go(st.a[i]), go(st.b[i]))
                suma, sumb = self.padded_sum(st.a[i]), self.padded_sum(st.b[i])
                seta, setb = self.part_atoms(st.a[i]), self.part_atoms(st.b[i])
                dist = pr.distribute_full(suma, sumb, self._set_pred(seta),
                                          self._set_pred(setb))
                rows = [self.full_product_row(i, kk) for kk in range(hi + 1)]
                grouped = pr.build_tree(ADD, rows)
                atoms = set(self.row_terms(dist.rhs))
                for r in rows:
                    atoms |= set(self.row_terms(r))
                fix = self.sums_eq(dist.rhs, atoms, grouped, atoms)
                pads = {}
                for kk, r in enumerate(rows):
                    if r not in pads:
                        pads[r] = pr.sym(self.pad_mul(i, kk))
                mid = pr.map_leaves(ADD, grouped, lambda t: pads[t],
                                    is_leaf=lambda t: t in pads)
                pe = pr.chain(base, dist, fix, mid,
                              pr.sim_eq(mid.rhs, target))
            memo[i] = pe
            return pe

        return go(u)
