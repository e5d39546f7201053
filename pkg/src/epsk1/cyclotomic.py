"""Exact arithmetic in Q(zeta_N), N = l^alpha * p^beta * m, on a tensor basis.

Elements are stored as maps (i, j, k) -> Fraction over the basis
zeta_{l^alpha}^i (x) zeta_{p^beta}^j (x) zeta_m^k with exponents reduced
modulo the cyclotomic polynomial of each part.  The three conductor parts
are pairwise coprime, so the tensor products of the per-part power bases
form a Q-basis of Q(zeta_N) and the representation is canonical.

No floating point anywhere; denominators that occur in the artifact are
powers of l (l is invertible in the coefficient ring being modelled).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


def is_prime(n):
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def euler_phi(n):
    result = n
    f = 2
    while f * f <= n:
        if n % f == 0:
            while n % f == 0:
                n //= f
            result -= result // f
        f += 1
    if n > 1:
        result -= result // n
    return result


def divisors(n):
    small, large = [], []
    f = 1
    while f * f <= n:
        if n % f == 0:
            small.append(f)
            if f != n // f:
                large.append(n // f)
        f += 1
    return small + large[::-1]


def valuation(n, q):
    """Largest v with q^v | n (n != 0)."""
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % q == 0:
        n //= q
        v += 1
    return v


def _poly_div_exact(num, den):
    """Exact division of integer polynomials (ascending coefficients)."""
    num = list(num)
    dn, dd = len(num) - 1, len(den) - 1
    quot = [0] * (dn - dd + 1)
    for i in range(dn - dd, -1, -1):
        c = num[i + dd]
        if c % den[dd] != 0:
            raise ArithmeticError("non-exact polynomial division")
        q = c // den[dd]
        quot[i] = q
        if q:
            for j, dj in enumerate(den):
                num[i + j] -= q * dj
    if any(num):
        raise ArithmeticError("non-exact polynomial division")
    return quot


@lru_cache(maxsize=None)
def cyclotomic_poly(n):
    """Coefficients (ascending) of the n-th cyclotomic polynomial."""
    if n == 1:
        return (-1, 1)
    num = [-1] + [0] * (n - 1) + [1]
    for d in divisors(n):
        if d < n:
            num = _poly_div_exact(num, cyclotomic_poly(d))
    return tuple(num)


@lru_cache(maxsize=None)
def _power_table(q):
    """Row e: canonical coordinates of zeta_q^e, as {basis_exp: int}."""
    if q == 1:
        return ({0: 1},)
    deg = euler_phi(q)
    cyc = cyclotomic_poly(q)
    top = {i: -cyc[i] for i in range(deg) if cyc[i]}
    rows = [{e: 1} for e in range(deg)]
    rows.append(dict(top))
    for _ in range(deg + 1, q):
        nxt = {}
        for i, c in rows[-1].items():
            if i + 1 < deg:
                nxt[i + 1] = nxt.get(i + 1, 0) + c
            else:
                for j, c2 in top.items():
                    nxt[j] = nxt.get(j, 0) + c * c2
        rows.append({i: c for i, c in nxt.items() if c})
    return tuple(rows)


@dataclass(frozen=True)
class CycloModulus:
    """Factored conductor l^alpha * p^beta * m with pairwise coprime parts."""

    l: int
    alpha: int
    p: int
    beta: int
    m: int = 1

    def __post_init__(self):
        if not (is_prime(self.l) and is_prime(self.p)) or self.l == self.p:
            raise ValueError("l, p must be distinct primes")
        if self.alpha < 0 or self.beta < 0 or self.m < 1:
            raise ValueError("bad conductor parts")
        if math.gcd(self.m, self.l * self.p) != 1:
            raise ValueError("m must be coprime to l*p")

    @property
    def parts(self):
        return (self.l ** self.alpha, self.p ** self.beta, self.m)

    @property
    def n(self):
        ql, qp, qm = self.parts
        return ql * qp * qm

    def join(self, other):
        if (self.l, self.p) != (other.l, other.p):
            raise ValueError("incompatible (l, p) contexts")
        return CycloModulus(self.l, max(self.alpha, other.alpha),
                            self.p, max(self.beta, other.beta),
                            math.lcm(self.m, other.m))


def _basis_triples(modulus):
    ql, qp, qm = modulus.parts
    dl, dp, dm = euler_phi(ql), euler_phi(qp), euler_phi(qm)
    return [(i, j, k) for i in range(dl) for j in range(dp) for k in range(dm)]


class CycloElem:
    """Element of Q(zeta_N) in canonical tensor-basis form."""

    __slots__ = ("modulus", "coeffs")

    def __init__(self, modulus, coeffs):
        self.modulus = modulus
        clean = {}
        for key, c in coeffs.items():
            c = Fraction(c)
            if c:
                clean[key] = c
        self.coeffs = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_rational(cls, value, modulus):
        return cls(modulus, {(0, 0, 0): Fraction(value)})

    @classmethod
    def build(cls, modulus, raw_terms):
        """Assemble from raw exponent terms ((e_l, e_p, e_m), coeff)."""
        ql, qp, qm = modulus.parts
        tl, tp, tm = _power_table(ql), _power_table(qp), _power_table(qm)
        acc = {}
        for (el, ep, em), c in raw_terms:
            c = Fraction(c)
            if not c:
                continue
            for i, ci in tl[el % ql].items():
                for j, cj in tp[ep % qp].items():
                    cij = ci * cj
                    for k, ck in tm[em % qm].items():
                        key = (i, j, k)
                        v = acc.get(key, 0) + c * (cij * ck)
                        if v:
                            acc[key] = v
                        elif key in acc:
                            del acc[key]
        return cls(modulus, acc)

    # -- structure ------------------------------------------------------

    def is_zero(self):
        return not self.coeffs

    def is_rational(self):
        return all(key == (0, 0, 0) for key in self.coeffs)

    def as_rational(self):
        if self.is_zero():
            return Fraction(0)
        if not self.is_rational():
            raise ValueError("not a rational element")
        return self.coeffs[(0, 0, 0)]

    def promote(self, modulus):
        if modulus == self.modulus:
            return self
        ql0, qp0, qm0 = self.modulus.parts
        ql1, qp1, qm1 = modulus.parts
        if ql1 % ql0 or qp1 % qp0 or qm1 % qm0:
            raise ValueError("cannot promote to non-multiple modulus")
        sl, sp, sm = ql1 // ql0, qp1 // qp0, qm1 // qm0
        return CycloElem.build(
            modulus,
            (((i * sl, j * sp, k * sm), c) for (i, j, k), c in self.coeffs.items()))

    def _pair(self, other):
        if isinstance(other, (int, Fraction)):
            other = CycloElem.from_rational(other, self.modulus)
        mod = self.modulus.join(other.modulus)
        return self.promote(mod), other.promote(mod), mod

    # -- ring operations -------------------------------------------------

    def __add__(self, other):
        a, b, mod = self._pair(other)
        acc = dict(a.coeffs)
        for key, c in b.coeffs.items():
            v = acc.get(key, 0) + c
            if v:
                acc[key] = v
            elif key in acc:
                del acc[key]
        return CycloElem(mod, acc)

    __radd__ = __add__

    def __neg__(self):
        return CycloElem(self.modulus, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, CycloElem) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return CycloElem(self.modulus,
                             {k: v * c for k, v in self.coeffs.items()})
        a, b, mod = self._pair(other)
        raw = []
        for (i1, j1, k1), c1 in a.coeffs.items():
            for (i2, j2, k2), c2 in b.coeffs.items():
                raw.append(((i1 + i2, j1 + j2, k1 + k2), c1 * c2))
        return CycloElem.build(mod, raw)

    __rmul__ = __mul__

    def __pow__(self, exponent):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = CycloElem.from_rational(1, self.modulus)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.as_rational() == other
        if not isinstance(other, CycloElem):
            return NotImplemented
        try:
            a, b, _ = self._pair(other)
        except ValueError:
            return False
        return a.coeffs == b.coeffs

    __hash__ = None

    def __repr__(self):
        if self.is_zero():
            return "CycloElem(0)"
        parts = []
        for (i, j, k), c in sorted(self.coeffs.items()):
            parts.append(f"{c}*z[{i},{j},{k}]")
        return "CycloElem(" + " + ".join(parts) + f"; N={self.modulus.parts})"

    # -- Galois actions ---------------------------------------------------

    def galois(self, t):
        """zeta_N -> zeta_N^t for t coprime to N."""
        if math.gcd(t, self.modulus.n) != 1:
            raise ValueError(f"{t} not coprime to conductor {self.modulus.n}")
        ql, qp, qm = self.modulus.parts
        return CycloElem.build(
            self.modulus,
            (((i * t % ql, j * t % qp, k * t % qm), c)
             for (i, j, k), c in self.coeffs.items()))

    def frobenius_p(self):
        """zeta -> zeta^p on the prime-to-p parts, identity on zeta_{p^beta}."""
        p = self.modulus.p
        ql, _, qm = self.modulus.parts
        return CycloElem.build(
            self.modulus,
            (((i * p % ql, j, k * p % qm), c)
             for (i, j, k), c in self.coeffs.items()))

    # -- divisibility and truncation ---------------------------------------

    def p_divisible(self, k):
        """True iff self = p^k * y with y having p-coprime denominators."""
        if k <= 0:
            return all(c.denominator % self.modulus.p != 0
                       for c in self.coeffs.values())
        pk = self.modulus.p ** k
        for c in self.coeffs.values():
            if c.denominator % self.modulus.p == 0:
                return False
            if c.numerator % pk != 0:
                return False
        return True

    def denominators_are_l_powers(self):
        l = self.modulus.l
        for c in self.coeffs.values():
            d = c.denominator
            while d % l == 0:
                d //= l
            if d != 1:
                return False
        return True

    def denominators_coprime_to_p(self):
        return all(c.denominator % self.modulus.p != 0
                   for c in self.coeffs.values())

    def coeffs_mod_p_power(self, precision):
        """Coordinates as integers mod p^precision (denominators inverted)."""
        pk = self.modulus.p ** precision
        out = {}
        for key, c in self.coeffs.items():
            if c.denominator % self.modulus.p == 0:
                raise ValueError("coefficient not p-integral")
            v = c.numerator * pow(c.denominator, -1, pk) % pk
            if v:
                out[key] = v
        return out

    # -- inversion ---------------------------------------------------------

    def inverse(self):
        """Exact inverse in Q(zeta_N); raises ZeroDivisionError if zero divisor."""
        if self.is_rational():
            q = self.as_rational()
            if not q:
                raise ZeroDivisionError("inverse of zero")
            return CycloElem.from_rational(1 / q, self.modulus)
        mod = self.modulus
        basis = _basis_triples(mod)
        index = {b: i for i, b in enumerate(basis)}
        n = len(basis)
        cols = []
        for b in basis:
            prod = self * CycloElem(mod, {b: Fraction(1)})
            col = [Fraction(0)] * n
            for key, c in prod.coeffs.items():
                col[index[key]] = c
            cols.append(col)
        matrix = [[cols[j][i] for j in range(n)] for i in range(n)]
        rhs = [Fraction(0)] * n
        rhs[index[(0, 0, 0)]] = Fraction(1)
        sol = solve_linear_system(matrix, rhs)
        if sol is None:
            raise ZeroDivisionError("element is not invertible")
        return CycloElem(mod, {b: sol[i] for i, b in enumerate(basis) if sol[i]})


def solve_linear_system(matrix, rhs):
    """Solve matrix * x = rhs exactly over Q; None if singular."""
    n = len(matrix)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    cols = len(matrix[0]) if matrix else 0
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, n) if a[i][c]), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(n):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == n:
            break
    for i in range(r, n):
        if a[i][cols]:
            return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = a[i][cols]
    # unique solution required
    if len(pivots) != cols:
        return None
    return x


def root_of_unity(order, exponent, l, p):
    """zeta_order^exponent as a CycloElem in the (l, p) context."""
    if order <= 0:
        raise ValueError("order must be positive")
    exponent %= order
    rest = order
    al = ap = 0
    while rest % l == 0:
        rest //= l
        al += 1
    while rest % p == 0:
        rest //= p
        ap += 1
    ql, qp, qm = l ** al, p ** ap, rest
    modulus = CycloModulus(l, al, p, ap, qm)
    exps = []
    for q in (ql, qp, qm):
        if q == 1:
            exps.append(0)
        else:
            c = pow(order // q, -1, q)
            exps.append(exponent * c % q)
    return CycloElem.build(modulus, [((exps[0], exps[1], exps[2]), Fraction(1))])


def rational(value, l, p):
    return CycloElem.from_rational(value, CycloModulus(l, 0, p, 0, 1))


def cyclo_arith(x, y, op):
    """Dispatcher over {add, sub, mul} (total on compatible moduli)."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    raise ValueError(f"unknown op {op!r}")


def galois_apply(x, t):
    return x.galois(t)


def frobenius_p(x):
    return x.frobenius_p()


def p_divisibility(x, k):
    return x.p_divisible(k)
