"""Independent polynomial-identity oracle.

Exact sparse expansion for small circuits, randomized point-evaluation
equivalence for everything else. Division circuits are compared by
cross-multiplying their numerator/denominator pairs, so no sample point ever
triggers a division.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from . import config
from .circuit import ADD, CONST, INV, MUL, VAR, BudgetExceeded, Circuit
from .field import EXTENSION, PRIME, RATIONALS, FieldDesc


# ---------------------------------------------------------------------------
# exact sparse polynomials
# ---------------------------------------------------------------------------

class SparsePoly:
    """Exact multivariate polynomial: {sorted((var, exp), ...): coeff != 0}."""

    __slots__ = ("fd", "terms")

    def __init__(self, fd: FieldDesc, terms: dict | None = None):
        self.fd = fd
        self.terms = terms or {}

    @classmethod
    def const(cls, fd, v):
        return cls(fd, {(): v} if not fd.is_zero(v) else {})

    @classmethod
    def var(cls, fd, name):
        return cls(fd, {((name, 1),): fd.one()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, SparsePoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def add(self, other: "SparsePoly") -> "SparsePoly":
        fd = self.fd
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = fd.add(out.get(m, fd.zero()), c)
            if fd.is_zero(s):
                out.pop(m, None)
            else:
                out[m] = s
        return SparsePoly(fd, out)

    def neg(self) -> "SparsePoly":
        fd = self.fd
        return SparsePoly(fd, {m: fd.neg(c) for m, c in self.terms.items()})

    def mul(self, other: "SparsePoly", budget: int | None = None) -> "SparsePoly":
        fd = self.fd
        cap = budget or config.EXPAND_BUDGET
        if len(self.terms) * len(other.terms) > 8 * cap:
            raise BudgetExceeded("expansion budget exceeded")
        out: dict = {}
        for m1, c1 in self.terms.items():
            d1 = dict(m1)
            for m2, c2 in other.terms.items():
                d = dict(d1)
                for v, e in m2:
                    d[v] = d.get(v, 0) + e
                key = tuple(sorted(d.items()))
                s = fd.add(out.get(key, fd.zero()), fd.mul(c1, c2))
                if fd.is_zero(s):
                    out.pop(key, None)
                else:
                    out[key] = s
        if len(out) > cap:
            raise BudgetExceeded("expansion budget exceeded")
        return SparsePoly(fd, out)

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e for _, e in m) for m in self.terms)

    def degree_in(self, var: str) -> int:
        d = 0
        for m in self.terms:
            for v, e in m:
                if v == var:
                    d = max(d, e)
        return d

    def homogeneous_component(self, k: int) -> "SparsePoly":
        return SparsePoly(self.fd, {m: c for m, c in self.terms.items()
                                    if sum(e for _, e in m) == k})

    def coeff_of_power(self, var: str, k: int) -> "SparsePoly":
        """Coefficient of var^k, as a polynomial in the remaining variables."""
        out = {}
        for m, c in self.terms.items():
            d = dict(m)
            if d.pop(var, 0) == k:
                out[tuple(sorted(d.items()))] = c
        return SparsePoly(self.fd, out)

    def eval(self, assignment: dict):
        fd = self.fd
        acc = fd.zero()
        for m, c in self.terms.items():
            t = c
            for v, e in m:
                t = fd.mul(t, fd.pow(assignment[v], e))
            acc = fd.add(acc, t)
        return acc

    def vars(self) -> set[str]:
        return {v for m in self.terms for v, _ in m}

    def __repr__(self):
        return f"SparsePoly({self.terms!r})"


@dataclass
class RationalFunction:
    num: SparsePoly
    den: SparsePoly


def expand(store: Circuit, root: int, budget: int | None = None):
    """Exact expansion; SparsePoly if division-free, else a Num/Den pair."""
    fd = store.field
    cap = budget or config.EXPAND_BUDGET
    if not store.has_division(root):
        val: dict[int, SparsePoly] = {}
        for i in store.reachable(root):
            k = store.kind[i]
            if k == CONST:
                val[i] = SparsePoly.const(fd, store.a[i])
            elif k == VAR:
                val[i] = SparsePoly.var(fd, store.a[i])
            elif k == ADD:
                val[i] = val[store.a[i]].add(val[store.b[i]])
            else:
                val[i] = val[store.a[i]].mul(val[store.b[i]], cap)
        return val[root]
    one = SparsePoly.const(fd, fd.one())
    pv: dict[int, tuple[SparsePoly, SparsePoly]] = {}
    for i in store.reachable(root):
        k = store.kind[i]
        if k == CONST:
            pv[i] = (SparsePoly.const(fd, store.a[i]), one)
        elif k == VAR:
            pv[i] = (SparsePoly.var(fd, store.a[i]), one)
        elif k == INV:
            n, d = pv[store.a[i]]
            pv[i] = (d, n)
        elif k == MUL:
            n1, d1 = pv[store.a[i]]
            n2, d2 = pv[store.b[i]]
            pv[i] = (n1.mul(n2, cap), d1.mul(d2, cap))
        else:
            n1, d1 = pv[store.a[i]]
            n2, d2 = pv[store.b[i]]
            pv[i] = (n1.mul(d2, cap).add(n2.mul(d1, cap)), d1.mul(d2, cap))
    n, d = pv[root]
    return RationalFunction(n, d)


# ---------------------------------------------------------------------------
# tower extensions for sampling over small fields
# ---------------------------------------------------------------------------

class TowerField:
    """GF(q^j) built directly over an arbitrary finite FieldDesc base.

    Elements are tuples of j base elements (coefficients low -> high). Only
    used internally for randomized evaluation, never serialized.
    """

    def __init__(self, base: FieldDesc, j: int, modulus: tuple):
        self.base = base
        self.j = j
        self.modulus = modulus  # length j+1, monic
        self.order = base.order ** j

    def zero(self):
        return (self.base.zero(),) * self.j

    def one(self):
        return self.embed(self.base.one())

    def embed(self, a):
        return (a,) + (self.base.zero(),) * (self.j - 1)

    def is_zero(self, x) -> bool:
        return all(self.base.is_zero(c) for c in x)

    def add(self, x, y):
        b = self.base
        return tuple(b.add(u, v) for u, v in zip(x, y))

    def neg(self, x):
        return tuple(self.base.neg(u) for u in x)

    def mul(self, x, y):
        b, j = self.base, self.j
        raw = [b.zero()] * (2 * j - 1)
        for i, xi in enumerate(x):
            if not b.is_zero(xi):
                for k, yk in enumerate(y):
                    raw[i + k] = b.add(raw[i + k], b.mul(xi, yk))
        for i in range(2 * j - 2, j - 1, -1):
            c = raw[i]
            if not b.is_zero(c):
                raw[i] = b.zero()
                for k in range(j + 1):
                    if not b.is_zero(self.modulus[k]):
                        raw[i - j + k] = b.sub(raw[i - j + k], b.mul(c, self.modulus[k]))
        return tuple(raw[:j])

    def inv(self, x):
        # extended Euclid over base[y]
        b = self.base

        def trim(p):
            while p and b.is_zero(p[-1]):
                p.pop()
            return p

        def pmul(p, q):
            out = [b.zero()] * (len(p) + len(q) - 1) if p and q else []
            for i, pi in enumerate(p):
                if not b.is_zero(pi):
                    for k, qk in enumerate(q):
                        out[i + k] = b.add(out[i + k], b.mul(pi, qk))
            return trim(out)

        def psub(p, q):
            n = max(len(p), len(q))
            p = p + [b.zero()] * (n - len(p))
            q = q + [b.zero()] * (n - len(q))
            return trim([b.sub(u, v) for u, v in zip(p, q)])

        def pdivmod(p, q):
            p = list(p)
            il = b.inv(q[-1])
            quo = [b.zero()] * max(0, len(p) - len(q) + 1)
            for i in range(len(p) - len(q), -1, -1):
                c = b.mul(p[i + len(q) - 1], il)
                if not b.is_zero(c):
                    quo[i] = c
                    for k, qk in enumerate(q):
                        p[i + k] = b.sub(p[i + k], b.mul(c, qk))
            return quo, trim(p)

        r0, r1 = list(self.modulus), trim(list(x))
        s0, s1 = [], [b.one()]
        while r1:
            q, r = pdivmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, psub(s0, pmul(q, s1))
        if len(r0) != 1:
            raise ZeroDivisionError("element not invertible modulo the modulus")
        scale = b.inv(r0[0])
        out = [b.mul(c, scale) for c in s0]
        out += [b.zero()] * (self.j - len(out))
        return tuple(out[: self.j])

    def rand(self, rng: random.Random):
        return tuple(self.base.rand(rng) for _ in range(self.j))


def _tower_irreducible(base: FieldDesc, j: int, seed: int = 0) -> tuple:
    """Seeded search for a monic irreducible of degree j over the base."""
    q = base.order
    rng = random.Random((seed, q, j).__hash__())

    def primes(n):
        out, d = [], 2
        while d * d <= n:
            if n % d == 0:
                out.append(d)
                while n % d == 0:
                    n //= d
            d += 1
        if n > 1:
            out.append(n)
        return out

    pr = primes(j)
    for _ in range(10000):
        cand = tuple(base.rand(rng) for _ in range(j)) + (base.one(),)
        tf = TowerField(base, j, cand)
        # Rabin: y^(q^j) == y mod g and gcd(y^(q^(j/t)) - y, g) = 1
        y = tuple([base.zero(), base.one()] + [base.zero()] * (j - 2))

        def powq(x, e):
            acc = tf.one()
            b = x
            while e:
                if e & 1:
                    acc = tf.mul(acc, b)
                b = tf.mul(b, b)
                e >>= 1
            return acc

        if powq(y, q ** j) != y:
            continue
        ok = True
        for t in pr:
            z = tf.add(powq(y, q ** (j // t)), tf.neg(y))
            # z must be invertible mod g, i.e. gcd(z, g) = 1
            if tf.is_zero(z):
                ok = False
                break
            try:
                tf.inv(z)
            except ZeroDivisionError:
                ok = False
                break
        if ok:
            return cand
    raise RuntimeError("no irreducible found")  # pragma: no cover


_TOWER_CACHE: dict = {}


def tower_for(base: FieldDesc, min_order: int) -> TowerField:
    j = 2
    while base.order ** j < min_order:
        j += 1
    key = (base, j)
    if key not in _TOWER_CACHE:
        _TOWER_CACHE[key] = TowerField(base, j, _tower_irreducible(base, j))
    return _TOWER_CACHE[key]


# ---------------------------------------------------------------------------
# randomized equivalence
# ---------------------------------------------------------------------------

@dataclass
class EquivResult:
    equal: bool
    witness: dict | None = None
    error_bits: float = float("inf")  # bound: P(wrong "equal") <= 2^-error_bits

    def __bool__(self):
        return self.equal


def _eval_pair(store: Circuit, root: int, ops, assignment: dict, embed):
    """Evaluate the Num/Den pair of a circuit at a point, never dividing."""
    one = ops.one()
    val = {}
    for i in store.reachable(root):
        k = store.kind[i]
        if k == CONST:
            val[i] = (embed(store.a[i]), one)
        elif k == VAR:
            val[i] = (assignment[store.a[i]], one)
        elif k == INV:
            n, d = val[store.a[i]]
            val[i] = (d, n)
        elif k == MUL:
            n1, d1 = val[store.a[i]]
            n2, d2 = val[store.b[i]]
            val[i] = (ops.mul(n1, n2), ops.mul(d1, d2))
        else:
            n1, d1 = val[store.a[i]]
            n2, d2 = val[store.b[i]]
            val[i] = (ops.add(ops.mul(n1, d2), ops.mul(n2, d1)), ops.mul(d1, d2))
    return val[root]


class _IntSampler:
    """Integer points for rational-field circuits; exact arithmetic."""

    def __init__(self, span: int):
        self.span = span

    def zero(self):
        return 0

    def one(self):
        return 1

    def is_zero(self, x):
        return x == 0

    def add(self, x, y):
        return x + y

    def mul(self, x, y):
        return x * y

    def rand(self, rng):
        return rng.randrange(self.span)


def equiv_random(store: Circuit, f: int, g: int, trials: int | None = None,
                 seed: int = 0) -> EquivResult:
    """Randomized rational-function equality via cross-multiplied evaluation."""
    fd = store.field
    d = max(store.syntactic_degree(f), store.syntactic_degree(g), 1)
    s = 1 + len(store.inv_nodes(f)) + len(store.inv_nodes(g))
    sd = 2 * s * d  # degree bound of the cross-multiplied difference, padded

    if not (store.vars_of(f) | store.vars_of(g)):
        # constant circuits: single exact evaluation
        nf, df = _eval_pair(store, f, fd, {}, lambda c: c)
        ng, dg = _eval_pair(store, g, fd, {}, lambda c: c)
        eq = fd.mul(nf, dg) == fd.mul(ng, df)
        return EquivResult(eq, None if eq else {}, float("inf"))

    trials_given = trials
    if fd.kind == RATIONALS:
        span = sd << config.PIT_ERROR_BITS
        ops, embed = _IntSampler(span), lambda c: c
        bits_per_trial = config.PIT_ERROR_BITS
    else:
        q = fd.order
        target = sd << config.PIT_ERROR_BITS
        if trials_given and q > 2 * sd:
            # caller fixed the trial count; the base field may already do
            need = sd * 2 ** math.ceil(config.PIT_ERROR_BITS / trials_given)
            target = min(target, need)
        if q >= target:
            ops, embed = fd, lambda c: c
            bits_per_trial = math.log2(q / sd)
        else:
            tw = tower_for(fd, target)
            ops, embed = tw, tw.embed
            bits_per_trial = math.log2(tw.order / sd)

    if trials is None:
        trials = max(1, math.ceil(config.PIT_ERROR_BITS / bits_per_trial))
    rng = random.Random((seed, store.cls[f], store.cls[g]).__hash__())
    names = sorted(store.vars_of(f) | store.vars_of(g))
    for _ in range(trials):
        pt = {x: ops.rand(rng) for x in names}
        nf, df = _eval_pair(store, f, ops, pt, embed)
        ng, dg = _eval_pair(store, g, ops, pt, embed)
        if ops.mul(nf, dg) != ops.mul(ng, df):
            return EquivResult(False, pt, 0.0)
    return EquivResult(True, None, trials * bits_per_trial)


def is_defined(store: Circuit, root: int, seed: int = 0,
               exact_budget: int = 2000) -> bool:
    """True iff no division gate inverts the zero rational function."""
    for inv_node in store.inv_nodes(root):
        child = store.a[inv_node]
        try:
            e = expand(store, child, exact_budget)
            num = e.num if isinstance(e, RationalFunction) else e
            if num.is_zero():
                return False
            continue
        except BudgetExceeded:
            pass
        zero = store.const(0)
        if equiv_random(store, child, zero, seed=seed):
            return False
    return True


def equiv(store: Circuit, f: int, g: int, seed: int = 0,
          exact_budget: int = 4000) -> bool:
    """Exact expansion when affordable, randomized fallback otherwise."""
    try:
        ef, eg = expand(store, f, exact_budget), expand(store, g, exact_budget)
        if isinstance(ef, RationalFunction) or isinstance(eg, RationalFunction):
            nf, df = (ef.num, ef.den) if isinstance(ef, RationalFunction) else (ef, None)
            ng, dg = (eg.num, eg.den) if isinstance(eg, RationalFunction) else (eg, None)
            one = SparsePoly.const(store.field, store.field.one())
            df, dg = df or one, dg or one
            return nf.mul(dg, 10 * exact_budget) == ng.mul(df, 10 * exact_budget)
        return ef == eg
    except BudgetExceeded:
        return bool(equiv_random(store, f, g, seed=seed))
