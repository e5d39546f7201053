"""Galois rings O_K/pi^a for K/Q_l unramified of degree d, with the
Frobenius lift, traces, unit enumeration, additive characters and
discrete logarithms used by the Gauss-sum layer.

House conventions: pi = l; the defining polynomial per (l, d) is the
lexicographically least monic polynomial that is irreducible mod l with
a primitive root, so serialized data is reproducible bit-exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .cyclotomic import is_prime, root_of_unity
from .errors import ResourceCapError

DEFAULT_CAP = 10 ** 7


@dataclass(frozen=True)
class LocalFieldParams:
    l: int
    d: int
    a: int

    def __post_init__(self):
        if not is_prime(self.l):
            raise ValueError(f"{self.l} is not prime")
        if self.d < 1 or self.a < 1:
            raise ValueError("d and a must be positive")

    @property
    def q(self):
        return self.l ** self.d


# -- defining polynomials -------------------------------------------------

def _fl_polymulmod(u, v, f, l):
    prod = [0] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if ui:
            for j, vj in enumerate(v):
                prod[i + j] = (prod[i + j] + ui * vj) % l
    d = len(f) - 1
    for i in range(len(prod) - 1, d - 1, -1):
        c = prod[i]
        if c:
            prod[i] = 0
            for j in range(d):
                prod[i - d + j] = (prod[i - d + j] - c * f[j]) % l
    out = prod[:d]
    while len(out) < d:
        out.append(0)
    return out


def _fl_polypowmod(base, e, f, l):
    d = len(f) - 1
    result = [1] + [0] * (d - 1)
    b = _fl_polymulmod(base, [1], f, l)
    while e:
        if e & 1:
            result = _fl_polymulmod(result, b, f, l)
        b = _fl_polymulmod(b, b, f, l)
        e >>= 1
    return result


def _is_irreducible(f, l):
    d = len(f) - 1
    x = [0, 1]
    xq = _fl_polypowmod(x, l ** d, f, l)
    if xq != [0, 1] + [0] * (d - 2):
        return False
    for q in {k for k in range(2, d + 1) if d % k == 0 and is_prime(k)}:
        xr = _fl_polypowmod(x, l ** (d // q), f, l)
        diff = [(a - b) % l for a, b in zip(xr, [0, 1] + [0] * (d - 2))]
        if _fl_polygcd_is_one(diff, f, l) is False:
            return False
    return True


def _fl_polygcd_is_one(u, f, l):
    a, b = [c % l for c in f], [c % l for c in u]
    while any(b):
        a, b = b, _fl_polymod(a, b, l)
    while a and a[-1] == 0:
        a.pop()
    return len(a) == 1


def _fl_polymod(a, b, l):
    a = [c % l for c in a]
    b = [c % l for c in b]
    while b and b[-1] == 0:
        b.pop()
    inv = pow(b[-1], -1, l)
    db = len(b) - 1
    while len(a) - 1 >= db and any(a):
        while a and a[-1] == 0:
            a.pop()
        if len(a) - 1 < db:
            break
        c = a[-1] * inv % l
        shift = len(a) - 1 - db
        for j in range(len(b)):
            a[shift + j] = (a[shift + j] - c * b[j]) % l
    return a


def prime_factors(n):
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def _root_is_primitive(f, l):
    d = len(f) - 1
    q = l ** d
    if d == 1:
        r = (-f[0]) % l
        return r != 0 and all(pow(r, (q - 1) // s, l) != 1
                              for s in prime_factors(q - 1))
    for r in prime_factors(q - 1):
        power = _fl_polypowmod([0, 1], (q - 1) // r, f, l)
        if power == [1] + [0] * (d - 1):
            return False
    return True


@lru_cache(maxsize=None)
def defining_poly(l, d):
    """Least monic polynomial over F_l, irreducible with primitive root."""
    if d == 1:
        for c0 in range(l):
            f = [c0, 1]
            if (-c0) % l != 0 and _root_is_primitive(f, l):
                return tuple(f)
        raise ArithmeticError("no primitive root found")
    for code in range(l ** d):
        digits = []
        c = code
        for _ in range(d):
            digits.append(c % l)
            c //= l
        f = digits + [1]
        if _is_irreducible(f, l) and _root_is_primitive(f, l):
            return tuple(f)
    raise ArithmeticError("no primitive polynomial found")


# -- the ring -------------------------------------------------------------

class GaloisRing:
    """O_K/(l^a) for K unramified of degree d over Q_l."""

    def __init__(self, l, d, a):
        self.params = LocalFieldParams(l, d, a)
        self.l, self.d, self.a = l, d, a
        self.modulus = l ** a
        self.f = defining_poly(l, d)
        self._frob_cols = None
        self._trace_consts = None

    def __repr__(self):
        return f"GaloisRing(l={self.l}, d={self.d}, a={self.a})"

    def elem(self, coeffs):
        if isinstance(coeffs, int):
            coeffs = (coeffs,) + (0,) * (self.d - 1)
        coeffs = tuple(c % self.modulus for c in coeffs)
        if len(coeffs) != self.d:
            raise ValueError("wrong coefficient length")
        return GRElem(self, coeffs)

    def zero(self):
        return self.elem(0)

    def one(self):
        return self.elem(1)

    def gen(self):
        """The class of the polynomial variable (root of the defining poly)."""
        if self.d == 1:
            return self.elem((-self.f[0]) % self.modulus)
        return self.elem((0, 1) + (0,) * (self.d - 2))

    def elements(self, cap=DEFAULT_CAP):
        total = self.modulus ** self.d
        if total > cap:
            raise ResourceCapError(f"{total} elements exceeds cap {cap}")
        for coeffs in itertools.product(range(self.modulus), repeat=self.d):
            yield GRElem(self, coeffs)

    def _reduce_product(self, prod):
        m = self.modulus
        f = self.f
        d = self.d
        for i in range(len(prod) - 1, d - 1, -1):
            c = prod[i]
            if c:
                prod[i] = 0
                for j in range(d):
                    prod[i - d + j] = (prod[i - d + j] - c * f[j]) % m
        return tuple(prod[:d])

    # Frobenius: the unique ring automorphism lifting y -> y^l, computed by
    # Hensel-lifting the root x^l of f and substituting.
    def _frobenius_columns(self):
        if self._frob_cols is not None:
            return self._frob_cols
        if self.d == 1:
            self._frob_cols = [(1,)]
            return self._frob_cols
        r = self.gen() ** self.l
        fprime = [i * c for i, c in enumerate(self.f)][1:]
        for _ in range(max(1, self.a.bit_length() + 2)):
            fr = self._eval_int_poly(self.f, r)
            if fr.is_zero():
                break
            r = r - fr * self._eval_int_poly(fprime, r).inverse()
        if not self._eval_int_poly(self.f, r).is_zero():
            raise ArithmeticError("Frobenius root lifting failed")
        cols = []
        power = self.one()
        for _ in range(self.d):
            cols.append(power.coeffs)
            power = power * r
        self._frob_cols = cols
        return cols

    def _eval_int_poly(self, coeffs, point):
        acc = self.zero()
        for c in reversed(coeffs):
            acc = acc * point + self.elem(c)
        return acc

    def frobenius(self, x):
        cols = self._frobenius_columns()
        out = [0] * self.d
        for i, ci in enumerate(x.coeffs):
            if ci:
                col = cols[i]
                for j in range(self.d):
                    out[j] = (out[j] + ci * col[j]) % self.modulus
        return GRElem(self, tuple(out))

    def trace(self, x):
        """Absolute trace to Z/l^a (sum of the d Frobenius conjugates)."""
        if self._trace_consts is None:
            consts = []
            for i in range(self.d):
                basis = self.elem(tuple(1 if j == i else 0 for j in range(self.d)))
                acc = self.zero()
                y = basis
                for _ in range(self.d):
                    acc = acc + y
                    y = self.frobenius(y)
                if any(acc.coeffs[1:]):
                    raise ArithmeticError("trace left the prime subring")
                consts.append(acc.coeffs[0])
            self._trace_consts = consts
        return sum(c * t for c, t in zip(x.coeffs, self._trace_consts)) % self.modulus

    def teichmueller(self, x):
        """The Teichmueller representative of x's residue class."""
        y = x
        for _ in range(max(self.a - 1, 1)):
            z = y ** (self.l ** self.d)
            if z == y:
                break
            y = z
        return y


class GRElem:
    __slots__ = ("ring", "coeffs")

    def __init__(self, ring, coeffs):
        self.ring = ring
        self.coeffs = coeffs

    def __repr__(self):
        return f"GR{self.coeffs}"

    def __eq__(self, other):
        return isinstance(other, GRElem) and self.ring is other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((id(self.ring), self.coeffs))

    def __add__(self, other):
        m = self.ring.modulus
        return GRElem(self.ring, tuple((x + y) % m for x, y in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        m = self.ring.modulus
        return GRElem(self.ring, tuple((x - y) % m for x, y in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        m = self.ring.modulus
        return GRElem(self.ring, tuple((-x) % m for x in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            m = self.ring.modulus
            return GRElem(self.ring, tuple(x * other % m for x in self.coeffs))
        r = self.ring
        prod = [0] * (2 * r.d - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    prod[i + j] = (prod[i + j] + x * y) % r.modulus
        return GRElem(r, r._reduce_product(prod))

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.ring.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def is_unit(self):
        return any(c % self.ring.l for c in self.coeffs)

    def inverse(self):
        if not self.is_unit():
            raise ZeroDivisionError("not a unit")
        r = self.ring
        inv1 = _invert_mod_l(self.coeffs, r.f, r.l)
        v = GRElem(r, tuple(inv1))
        two = r.elem(2)
        # Hensel: v <- v(2 - uv) doubles the precision each pass
        for _ in range(max(1, r.a.bit_length())):
            prod = self * v
            v = v * (two - prod)
            if (self * v) == r.one():
                break
        if (self * v) != r.one():
            raise ArithmeticError("inverse lifting failed")
        return v

    def with_precision(self, t):
        """Same element reduced (or lifted by the integer section) to level t."""
        target = galois_ring(self.ring.l, self.ring.d, t)
        return target.elem(tuple(c % target.modulus for c in self.coeffs))

    def residue(self):
        return self.with_precision(1)


def _invert_mod_l(coeffs, f, l):
    d = len(f) - 1
    # extended Euclid in F_l[x] / (f)
    a = [c % l for c in f]
    b = [c % l for c in coeffs]
    sa, sb = [0], [1]
    while True:
        while b and b[-1] == 0:
            b.pop()
        if len(b) == 1 and b != [0]:
            inv = pow(b[0], -1, l)
            out = [c * inv % l for c in sb]
            out += [0] * (d - len(out))
            return out[:d]
        if not any(b):
            raise ZeroDivisionError("not invertible mod l")
        q, r = _fl_polydivmod(a, b, l)
        a, b = b, r
        sa, sb = sb, _fl_polysub(sa, _fl_polymulmod_plain(q, sb, l), l)


def _fl_polydivmod(a, b, l):
    a = [c % l for c in a]
    b = [c % l for c in b]
    while b and b[-1] == 0:
        b.pop()
    inv = pow(b[-1], -1, l)
    db = len(b) - 1
    q = [0] * max(1, len(a) - db)
    r = a[:]
    while True:
        while r and r[-1] == 0:
            r.pop()
        if len(r) - 1 < db or not any(r):
            break
        c = r[-1] * inv % l
        shift = len(r) - 1 - db
        q[shift] = c
        for j in range(len(b)):
            r[shift + j] = (r[shift + j] - c * b[j]) % l
    return q, r


def _fl_polymulmod_plain(u, v, l):
    out = [0] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if ui:
            for j, vj in enumerate(v):
                out[i + j] = (out[i + j] + ui * vj) % l
    return out


def _fl_polysub(u, v, l):
    n = max(len(u), len(v))
    u = u + [0] * (n - len(u))
    v = v + [0] * (n - len(v))
    return [(a - b) % l for a, b in zip(u, v)]


@lru_cache(maxsize=None)
def galois_ring(l, d, a):
    return GaloisRing(l, d, a)


def ring_for(params):
    return galois_ring(params.l, params.d, params.a)


# -- units ----------------------------------------------------------------

def unit_count(params, t):
    return params.l ** (params.d * (t - 1)) * (params.q - 1)


def units_enumerate(params, t, cap=DEFAULT_CAP):
    """All units of O_K/pi^t, each exactly once."""
    if not (1 <= t <= params.a):
        raise ValueError("level out of range")
    total = params.l ** (params.d * t)
    if total > cap:
        raise ResourceCapError(
            f"unit enumeration needs {unit_count(params, t)} of {total} "
            f"residues, above cap {cap}")
    ring = galois_ring(params.l, params.d, t)
    for coeffs in itertools.product(range(ring.modulus), repeat=ring.d):
        el = GRElem(ring, coeffs)
        if el.is_unit():
            yield el


def trace_to_prime_ring(x):
    return x.ring.trace(x)


# -- additive characters ----------------------------------------------------

@dataclass(frozen=True)
class AdditiveCharSpec:
    """psi(x) = psi_std(twist * l^level * x); n(psi) = level.

    psi_std is the canonical character: trivial on O_K, and
    psi_std(u * l^-t) = zeta_{l^t}^{Tr(u) mod l^t}.  `p` fixes the
    cyclotomic context of the values.
    """

    ring: GaloisRing
    level: int
    twist: GRElem
    p: int

    def __post_init__(self):
        if not self.twist.is_unit():
            raise ValueError("twist must be a unit")

    @property
    def n_psi(self):
        return self.level

    def twisted(self, c):
        """The character x -> psi(c x) for a unit c."""
        return AdditiveCharSpec(self.ring, self.level, self.twist * c, self.p)

    def minus(self):
        return self.twisted(self.ring.elem(-1))


def psi_std(ring, p, level=0):
    return AdditiveCharSpec(ring, level, ring.one(), p)


def psi_exponent(spec, u, t):
    """Exponent e with psi(u * pi^{-t-level}) = zeta_{l^t}^e."""
    if t > u.ring.a:
        raise ValueError(f"pole depth {t} exceeds truncation {u.ring.a}")
    tw = spec.twist.with_precision(u.ring.a)
    return u.ring.trace(tw * u) % (spec.ring.l ** t)


def psi_value(spec, u, t):
    """psi(u * pi^{-t-level}) as an l^t-th root of unity."""
    if t < 0:
        raise ValueError("pole depth must be >= 0")
    if t == 0:
        return root_of_unity(1, 0, spec.ring.l, spec.p)
    return root_of_unity(spec.ring.l ** t, psi_exponent(spec, u, t),
                         spec.ring.l, spec.p)


# -- discrete logs and generators -------------------------------------------

def element_order(x, group_order):
    if not x.is_unit():
        raise ValueError("not a unit")
    order = group_order
    for q in prime_factors(group_order):
        while order % q == 0 and x ** (order // q) == x.ring.one():
            order //= q
    return order


@lru_cache(maxsize=None)
def least_generator(l, d):
    """Least residue-field element (by coefficient encoding) generating k^x."""
    ring = galois_ring(l, d, 1)
    q = l ** d
    for code in range(1, q):
        digits = []
        c = code
        for _ in range(d):
            digits.append(c % l)
            c //= l
        el = ring.elem(tuple(digits))
        if el.is_unit() and element_order(el, q - 1) == q - 1:
            return el
    raise ArithmeticError("no generator found")


def bsgs_dlog(base, target, order):
    """Discrete log in <base> (order given); raises if target not in <base>."""
    ring = base.ring
    m = math.isqrt(order) + 1
    table = {}
    cur = ring.one()
    for j in range(m):
        table.setdefault(cur.coeffs, j)
        cur = cur * base
    giant = (base ** m).inverse()
    y = target
    for i in range(m + 1):
        j = table.get(y.coeffs)
        if j is not None:
            return (i * m + j) % order
        y = y * giant
    raise ValueError("discrete log does not exist")


# -- embeddings --------------------------------------------------------------

class Embedding:
    """Ring embedding GR(l, d1, a) -> GR(l, d2, a) for d1 | d2."""

    def __init__(self, small, big):
        if small.l != big.l or small.a != big.a or big.d % small.d:
            raise ValueError("incompatible rings")
        self.small, self.big = small, big
        self._root = self._find_root()
        self._powers = None
        self._pre = None

    def _find_root(self):
        # least root (by coefficient encoding) of the small polynomial,
        # searched in the residue field then Hensel-lifted
        big1 = galois_ring(self.big.l, self.big.d, 1)
        f = self.small.f
        root1 = None
        for coeffs in itertools.product(range(self.big.l), repeat=big1.d):
            cand = GRElem(big1, coeffs)
            if big1._eval_int_poly(f, cand).is_zero():
                root1 = cand
                break
        if root1 is None:
            raise ArithmeticError("no root for embedding")
        r = root1.with_precision(self.big.a)
        fprime = [(i * c) for i, c in enumerate(f)][1:]
        big = self.big
        for _ in range(max(1, big.a.bit_length() + 1)):
            fr = big._eval_int_poly(f, r)
            if fr.is_zero():
                break
            r = r - fr * big._eval_int_poly(fprime, r).inverse()
        if not big._eval_int_poly(f, r).is_zero():
            raise ArithmeticError("embedding root lifting failed")
        return r

    def apply(self, x):
        if self._powers is None:
            powers = []
            cur = self.big.one()
            for _ in range(self.small.d):
                powers.append(cur)
                cur = cur * self._root
            self._powers = powers
        acc = self.big.zero()
        for c, pw in zip(x.coeffs, self._powers):
            if c:
                acc = acc + pw * c
        return acc

    def preimage(self, y):
        if self._pre is None:
            self._pre = {}
            for x in self.small.elements():
                self._pre[self.apply(x).coeffs] = x
        out = self._pre.get(y.coeffs)
        if out is None:
            raise ValueError("element not in the embedded subring")
        return out


@lru_cache(maxsize=None)
def embedding(l, d_small, d_big, a):
    return Embedding(galois_ring(l, d_small, a), galois_ring(l, d_big, a))
