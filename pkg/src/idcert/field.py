"""Exact coefficient arithmetic: GF(p), GF(p^k) and arbitrary-precision rationals.

Element representations are plain immutable values:
  - prime field: int in [0, p)
  - extension field: tuple of k ints (coefficients low -> high)
  - rationals: fractions.Fraction (always in lowest terms, positive denominator)

A FieldDesc carries the operations; there is no wrapper class around single
elements, so hot loops stay cheap.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

RATIONALS = "rationals"
PRIME = "prime"
EXTENSION = "extension"


class ZeroInverse(ZeroDivisionError):
    """Raised when inverting the zero element."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond 64-bit inputs."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# dense polynomial helpers over GF(p), used for extension field arithmetic
# ---------------------------------------------------------------------------

def _poly_trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mul(a, b, p):
    out = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_trim(out)


def _poly_divmod(a, b, p):
    a = list(a)
    inv_lead = pow(b[-1], p - 2, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] * inv_lead % p
        if c:
            q[i] = c
            for j, bj in enumerate(b):
                a[i + j] = (a[i + j] - c * bj) % p
    return q, _poly_trim(a)


def _poly_sub(a, b, p):
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return _poly_trim([(x - y) % p for x, y in zip(a, b)])


def _poly_ext_gcd(a, b, p):
    """Return (g, s, t) with s*a + t*b = g over GF(p)[z]."""
    r0, r1 = list(a), list(b)
    s0, s1 = [1], []
    t0, t1 = [], [1]
    while r1:
        q, r = _poly_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1, p), p)
        t0, t1 = t1, _poly_sub(t0, _poly_mul(q, t1, p), p)
    return r0, s0, t0


def _poly_is_irreducible(coeffs, p):
    """Exhaustive trial division by monic polynomials of degree <= k/2."""
    k = len(coeffs) - 1
    if k < 1:
        return False
    for deg in range(1, k // 2 + 1):
        for idx in range(p ** deg):
            div = []
            t = idx
            for _ in range(deg):
                div.append(t % p)
                t //= p
            div.append(1)
            _, rem = _poly_divmod(list(coeffs), div, p)
            if not rem:
                return False
    return True


@dataclass(frozen=True)
class FieldDesc:
    """Descriptor of a coefficient domain plus its arithmetic."""

    kind: str
    characteristic: int = 0
    ext_degree: int = 1
    modulus: tuple[int, ...] | None = None  # monic, low -> high, length k+1

    # -- constants ---------------------------------------------------------

    def zero(self):
        if self.kind == RATIONALS:
            return Fraction(0)
        if self.kind == PRIME:
            return 0
        return (0,) * self.ext_degree

    def one(self):
        return self.from_int(1)

    def from_int(self, n: int):
        if self.kind == RATIONALS:
            return Fraction(n)
        if self.kind == PRIME:
            return n % self.characteristic
        return (n % self.characteristic,) + (0,) * (self.ext_degree - 1)

    def gen(self):
        """The adjoined root z (extension fields only)."""
        if self.kind != EXTENSION:
            raise ValueError("gen() only exists for extension fields")
        return (0, 1) + (0,) * (self.ext_degree - 2)

    @property
    def order(self) -> int | None:
        if self.kind == RATIONALS:
            return None
        return self.characteristic ** self.ext_degree

    def elements(self):
        """All elements, ascending; finite fields only."""
        if self.kind == PRIME:
            return list(range(self.characteristic))
        if self.kind == EXTENSION:
            p, k = self.characteristic, self.ext_degree
            out = []
            for idx in range(p ** k):
                v, t = [], idx
                for _ in range(k):
                    v.append(t % p)
                    t //= p
                out.append(tuple(v))
            return out
        raise ValueError("rationals are infinite")

    # -- arithmetic --------------------------------------------------------

    def add(self, a, b):
        if self.kind == PRIME:
            return (a + b) % self.characteristic
        if self.kind == RATIONALS:
            return a + b
        p = self.characteristic
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def neg(self, a):
        if self.kind == PRIME:
            return -a % self.characteristic
        if self.kind == RATIONALS:
            return -a
        p = self.characteristic
        return tuple(-x % p for x in a)

    def mul(self, a, b):
        if self.kind == PRIME:
            return a * b % self.characteristic
        if self.kind == RATIONALS:
            return a * b
        p, k = self.characteristic, self.ext_degree
        if k == 1:
            return (a[0] * b[0] % p,)
        raw = [0] * (2 * k - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    raw[i + j] = (raw[i + j] + ai * bj) % p
        red = _reduction_rows(self.characteristic, self.modulus)
        out = raw[:k]
        for i in range(k, 2 * k - 1):
            c = raw[i]
            if c:
                row = red[i - k]
                for j in range(k):
                    out[j] = (out[j] + c * row[j]) % p
        return tuple(out)

    def inv(self, a):
        if self.is_zero(a):
            raise ZeroInverse("inverse of zero")
        if self.kind == PRIME:
            return pow(a, self.characteristic - 2, self.characteristic)
        if self.kind == RATIONALS:
            return 1 / a
        p = self.characteristic
        g, s, _ = _poly_ext_gcd(_poly_trim(list(a)), list(self.modulus), p)
        scale = pow(g[0], p - 2, p)
        out = [c * scale % p for c in s]
        out += [0] * (self.ext_degree - len(out))
        return tuple(out[: self.ext_degree])

    def pow(self, a, e: int):
        if e < 0:
            return self.pow(self.inv(a), -e)
        acc = self.one()
        base = a
        while e:
            if e & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            e >>= 1
        return acc

    def is_zero(self, a) -> bool:
        if self.kind == EXTENSION:
            return not any(a)
        return a == 0

    def is_one(self, a) -> bool:
        return a == self.one()

    def rand(self, rng: random.Random):
        if self.kind == PRIME:
            return rng.randrange(self.characteristic)
        if self.kind == EXTENSION:
            p = self.characteristic
            return tuple(rng.randrange(p) for _ in range(self.ext_degree))
        return Fraction(rng.randrange(-(2**31), 2**31), rng.randrange(1, 2**16))

    # -- text format -------------------------------------------------------

    def format_elem(self, a) -> str:
        if self.kind == PRIME:
            return str(a)
        if self.kind == EXTENSION:
            return ",".join(str(c) for c in a)
        return f"{a.numerator}/{a.denominator}"

    def parse_elem(self, s: str):
        if self.kind == PRIME:
            return int(s) % self.characteristic
        if self.kind == EXTENSION:
            parts = tuple(int(c) % self.characteristic for c in s.split(","))
            if len(parts) != self.ext_degree:
                raise ValueError(f"expected {self.ext_degree} coefficients: {s!r}")
            return parts
        num, _, den = s.partition("/")
        return Fraction(int(num), int(den)) if den else Fraction(int(num))

    def header(self) -> str:
        """The `field ...` line shared by all file formats."""
        if self.kind == RATIONALS:
            return "field q"
        if self.kind == PRIME:
            return f"field gf {self.characteristic}"
        irr = " ".join(str(c) for c in self.modulus)
        return f"field gf {self.characteristic} {self.ext_degree} irr {irr}"


@lru_cache(maxsize=None)
def _reduction_rows(p: int, modulus: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """Row i = coefficients of z^(k+i) reduced mod the modulus."""
    k = len(modulus) - 1
    top = [(-modulus[j]) % p for j in range(k)]  # z^k
    rows = [tuple(top)]
    for _ in range(k - 2):
        prev = rows[-1]
        nxt = [0] + list(prev[:-1])  # multiply by z
        c = prev[-1]
        if c:
            for j in range(k):
                nxt[j] = (nxt[j] + c * top[j]) % p
        rows.append(tuple(nxt))
    return tuple(rows)


@lru_cache(maxsize=None)
def make_field(p: int, k: int = 1) -> FieldDesc:
    """GF(p^k) with a deterministic modulus, or the rationals for p=0, k=1."""
    if p == 0:
        if k != 1:
            raise ValueError("rationals require k=1")
        return FieldDesc(RATIONALS)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if k < 1:
        raise ValueError("extension degree must be >= 1")
    if k == 1:
        return FieldDesc(PRIME, p)
    modulus = _smallest_irreducible(p, k)
    return FieldDesc(EXTENSION, p, k, modulus)


def _smallest_irreducible(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible (on (c0..c_{k-1}))."""
    for idx in range(p ** k):
        coeffs, t = [], idx
        for _ in range(k):
            coeffs.append(t % p)
            t //= p
        cand = tuple(coeffs) + (1,)
        if _poly_is_irreducible(cand, p):
            return cand
    raise ValueError(f"no irreducible of degree {k} over GF({p})")  # unreachable


def arith(op: str, fd: FieldDesc, a, b=None):
    """Dispatch-style entry point: op in {add, mul, neg, inv}."""
    if op == "add":
        return fd.add(a, b)
    if op == "mul":
        return fd.mul(a, b)
    if op == "neg":
        return fd.neg(a)
    if op == "inv":
        return fd.inv(a)
    raise ValueError(f"unknown op {op!r}")


def sample(fd: FieldDesc, seed: int):
    """Deterministic seeded draw; uniform over finite fields."""
    return fd.rand(random.Random(seed))


def regular_rep(fd: FieldDesc, a) -> tuple[tuple[int, ...], ...]:
    """Multiplication-by-a as a k x k matrix over GF(p), basis 1, z, .., z^(k-1).

    Column j holds the coordinates of a * z^j.
    """
    if fd.kind != EXTENSION:
        raise ValueError("regular_rep needs an extension field")
    k = fd.ext_degree
    cols = []
    cur = a
    for _ in range(k):
        cols.append(cur)
        cur = fd.mul(cur, fd.gen())
    return tuple(tuple(cols[j][i] for j in range(k)) for i in range(k))


def base_field(fd: FieldDesc) -> FieldDesc:
    if fd.kind != EXTENSION:
        raise ValueError("base_field needs an extension field")
    return make_field(fd.characteristic, 1)


def parse_field_header(line: str) -> FieldDesc:
    toks = line.split()
    if toks[:2] == ["field", "q"]:
        return make_field(0)
    if len(toks) >= 3 and toks[0] == "field" and toks[1] == "gf":
        p = int(toks[2])
        if len(toks) == 3:
            return make_field(p)
        k = int(toks[3])
        if toks[4] != "irr":
            raise ValueError(f"bad field header: {line!r}")
        modulus = tuple(int(c) % p for c in toks[5:])
        if len(modulus) != k + 1 or modulus[-1] != 1:
            raise ValueError(f"bad modulus in header: {line!r}")
        fd = make_field(p, k)
        if fd.modulus != modulus:
            # honour an explicitly different (but valid) modulus
            if not _poly_is_irreducible(modulus, p):
                raise ValueError("modulus is not irreducible")
            fd = FieldDesc(EXTENSION, p, k, modulus)
        return fd
    raise ValueError(f"bad field header: {line!r}")
