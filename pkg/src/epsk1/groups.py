"""Finite abelian groups in explicit coordinates, their characters, the
two-step metabelian groups (N semidirect Gamma) x Delta, transfers, and
conjugacy machinery.

Abelian groups keep their natural cyclic coordinates (one axis per stored
cyclic factor, order 1 axes allowed) so that tower maps stay coordinate
by coordinate; Smith normal form is available as a derived view.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .cyclotomic import root_of_unity, solve_linear_system
from .errors import ResourceCapError
from .residue import prime_factors

CONJ_CAP = 10 ** 5


@dataclass(frozen=True)
class FinAbGroup:
    """Direct product of cyclic groups in fixed coordinates."""

    orders: tuple

    def __post_init__(self):
        if any(o < 1 for o in self.orders):
            raise ValueError("cyclic orders must be >= 1")

    @property
    def rank(self):
        return len(self.orders)

    @property
    def order(self):
        out = 1
        for o in self.orders:
            out *= o
        return out

    @property
    def exponent(self):
        return math.lcm(*self.orders) if self.orders else 1

    @property
    def invariant_factors(self):
        """Smith normal form invariants (each divides the next, all > 1)."""
        pp = {}
        for o in self.orders:
            for q in prime_factors(o):
                v = 0
                oo = o
                while oo % q == 0:
                    oo //= q
                    v += 1
                pp.setdefault(q, []).append(q ** v)
        if not pp:
            return ()
        k = max(len(v) for v in pp.values())
        factors = [1] * k
        for powers in pp.values():
            powers.sort(reverse=True)
            for idx, val in enumerate(powers):
                factors[idx] *= val
        factors.sort()
        return tuple(factors)

    def identity(self):
        return (0,) * self.rank

    def reduce(self, vec):
        return tuple(v % o for v, o in zip(vec, self.orders))

    def add(self, a, b):
        return tuple((x + y) % o for x, y, o in zip(a, b, self.orders))

    def neg(self, a):
        return tuple((-x) % o for x, o in zip(a, self.orders))

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def scale(self, a, k):
        return tuple(x * k % o for x, o in zip(a, self.orders))

    def order_of(self, a):
        return math.lcm(*(o // math.gcd(o, x) for x, o in zip(a, self.orders))) if a else 1

    def elements(self, cap=CONJ_CAP):
        if self.order > cap:
            raise ResourceCapError(f"group order {self.order} above cap {cap}")
        return itertools.product(*(range(o) for o in self.orders))

    def subgroup_closure(self, gens):
        seen = {self.identity()}
        frontier = [self.identity()]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.add(x, g)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return seen


@dataclass(frozen=True)
class Character:
    """chi(a) = prod_i zeta_{orders[i]}^{exps[i] * a[i]}."""

    group: FinAbGroup
    exps: tuple

    def value(self, a, l, p):
        out = root_of_unity(1, 0, l, p)
        for o, e, x in zip(self.group.orders, self.exps, a):
            if o > 1 and e * x % o:
                out = out * root_of_unity(o, e * x, l, p)
        return out

    @property
    def order(self):
        return math.lcm(*(o // math.gcd(o, e)
                          for o, e in zip(self.group.orders, self.exps))) if self.exps else 1

    def is_trivial(self):
        return all(e % o == 0 for e, o in zip(self.exps, self.group.orders))

    def __mul__(self, other):
        return Character(self.group, self.group.add(self.exps, other.exps))

    def inverse(self):
        return Character(self.group, self.group.neg(self.exps))

    def restrict_vanishes_on(self, vectors):
        return all(all(e * x % o == 0 for o, e, x in
                       zip(self.group.orders, self.exps, v)) for v in vectors)


def characters(group):
    return [Character(group, exps) for exps in group.elements()]


# -- integer Smith normal form ----------------------------------------------

def _identity_matrix(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def smith_normal_form(matrix):
    """Return (d, u, v) with u * matrix * v = d diagonal, u, v unimodular."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    a = [row[:] for row in matrix]
    u = _identity_matrix(rows)
    v = _identity_matrix(cols)

    def row_op(i, j, q):  # row_i -= q * row_j
        a[i] = [x - q * y for x, y in zip(a[i], a[j])]
        u[i] = [x - q * y for x, y in zip(u[i], u[j])]

    def col_op(i, j, q):  # col_i -= q * col_j
        for r in range(rows):
            a[r][i] -= q * a[r][j]
        for r in range(cols):
            v[r][i] -= q * v[r][j]

    def row_swap(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def col_swap(i, j):
        for r in range(rows):
            a[r][i], a[r][j] = a[r][j], a[r][i]
        for r in range(cols):
            v[r][i], v[r][j] = v[r][j], v[r][i]

    t = 0
    while t < min(rows, cols):
        # find a pivot
        pivot = None
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                if a[i][j] and (best is None or abs(a[i][j]) < best):
                    best = abs(a[i][j])
                    pivot = (i, j)
        if pivot is None:
            break
        row_swap(t, pivot[0])
        col_swap(t, pivot[1])
        while True:
            dirty = False
            for i in range(t + 1, rows):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    row_op(i, t, q)
                    if a[i][t]:
                        row_swap(t, i)
                    dirty = True
            for j in range(t + 1, cols):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    col_op(j, t, q)
                    if a[t][j]:
                        col_swap(t, j)
                    dirty = True
            if not dirty:
                break
        # divisibility sweep
        adjusted = False
        for i in range(t + 1, rows):
            for j in range(t + 1, cols):
                if a[i][j] % a[t][t]:
                    row_op(t, i, -1)
                    adjusted = True
                    break
            if adjusted:
                break
        if adjusted:
            continue
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
        t += 1
    return a, u, v


def _integer_matrix_inverse(u):
    n = len(u)
    cols = []
    for k in range(n):
        rhs = [Fraction(1 if i == k else 0) for i in range(n)]
        sol = solve_linear_system([[Fraction(x) for x in row] for row in u], rhs)
        if sol is None:
            raise ArithmeticError("matrix not invertible")
        col = []
        for x in sol:
            if x.denominator != 1:
                raise ArithmeticError("matrix not unimodular")
            col.append(x.numerator)
        cols.append(col)
    return [[cols[j][i] for j in range(n)] for i in range(n)]


# -- abelian structure from a black-box multiplication ------------------------

class AbelianStructure:
    """SNF presentation of a finite abelian group given by multiplication."""

    def __init__(self, snf_gens, group, dlog):
        self.snf_gens = snf_gens      # independent generators, orders = group.orders
        self.group = group            # FinAbGroup with orders > 1
        self._dlog = dlog             # element -> coordinate tuple

    def dlog(self, x):
        out = self._dlog.get(x)
        if out is None:
            raise ValueError("element outside the enumerated group")
        return out


def abelian_structure(elements, op, inv, identity, cap=CONJ_CAP):
    elems = list(elements)
    if len(elems) > cap:
        raise ResourceCapError(f"{len(elems)} elements above cap {cap}")
    logmap = {identity: ()}
    gens, rel_orders, tails = [], [], []
    for x in elems:
        if x in logmap:
            continue
        power = x
        o = 1
        while power not in logmap:
            power = op(power, x)
            o += 1
        tail = logmap[power]
        gens.append(x)
        rel_orders.append(o)
        tails.append(tail)
        logmap = {k: v + (0,) for k, v in logmap.items()}
        base_items = list(logmap.items())
        xj = identity
        for j in range(1, o):
            xj = op(xj, x)
            for el, vec in base_items:
                logmap[op(el, xj)] = vec[:-1] + (j,)
    r = len(gens)
    if r == 0:
        return AbelianStructure([], FinAbGroup(()), {identity: ()})
    rel = [[0] * r for _ in range(r)]
    for i in range(r):
        rel[i][i] = rel_orders[i]
        for j, t in enumerate(tails[i]):
            rel[j][i] -= t
    d, u, _v = smith_normal_form(rel)
    diag = [d[i][i] for i in range(r)]
    if any(x == 0 for x in diag):
        raise ArithmeticError("relation matrix not full rank")
    uinv = _integer_matrix_inverse(u)

    def power(base, e):
        e %= _order_from(diag)
        out = identity
        b = base
        while e:
            if e & 1:
                out = op(out, b)
            b = op(b, b)
            e >>= 1
        return out

    keep = [i for i in range(r) if diag[i] > 1]
    orders = tuple(diag[i] for i in keep)
    group = FinAbGroup(orders)
    snf_gens = []
    for k in keep:
        g = identity
        for i in range(r):
            if uinv[i][k]:
                g = op(g, power(gens[i], uinv[i][k]))
        snf_gens.append(g)
    dlog = {}
    for el, vec in logmap.items():
        w = [sum(u[i][j] * vec[j] for j in range(r)) % diag[i] for i in range(r)]
        dlog[el] = tuple(w[i] for i in keep)
    return AbelianStructure(snf_gens, group, dlog)


def _order_from(diag):
    out = 1
    for x in diag:
        out *= x
    return out


# -- metabelian tower groups ---------------------------------------------------

@dataclass(frozen=True)
class MetabelianGroup:
    """(N semidirect Gamma) x Delta with N = Z/p^s, Gamma = Z/p^n cyclic,
    the Gamma generator acting on N by x -> x^e, Delta cyclic of order
    m_delta prime to p.  Elements are triples (x, y, z)."""

    p: int
    s: int
    n: int
    e: int
    m_delta: int = 1

    def __post_init__(self):
        if self.s < 0 or self.n < 0 or self.m_delta < 1:
            raise ValueError("bad parameters")
        ns = self.p ** self.s
        if math.gcd(self.e, self.p) != 1:
            raise ValueError("action exponent must be prime to p")
        if pow(self.e, self.p ** self.n, ns) != 1 % ns:
            raise ValueError(
                f"action exponent violates e^(p^n) = 1 mod p^s: "
                f"{self.e}^{self.p ** self.n} != 1 mod {ns}")
        if math.gcd(self.m_delta, self.p) != 1:
            raise ValueError("Delta order must be prime to p")

    @property
    def n_order(self):
        return self.p ** self.s

    @property
    def gamma_order(self):
        return self.p ** self.n

    @property
    def order(self):
        return self.n_order * self.gamma_order * self.m_delta

    def identity(self):
        return (0, 0, 0)

    def mul(self, g, h):
        ns, ng, md = self.n_order, self.gamma_order, self.m_delta
        return ((g[0] + pow(self.e, g[1], ns) * h[0]) % ns,
                (g[1] + h[1]) % ng,
                (g[2] + h[2]) % md)

    def inv(self, g):
        ns, ng, md = self.n_order, self.gamma_order, self.m_delta
        einv = pow(self.e, -1, ns) if ns > 1 else 0
        return ((-pow(einv, g[1], ns) * g[0]) % ns if ns > 1 else 0,
                (-g[1]) % ng,
                (-g[2]) % md)

    def conj(self, g, h):
        """g h g^{-1}."""
        return self.mul(g, self.mul(h, self.inv(g)))

    def elements(self, cap=CONJ_CAP):
        if self.order > cap:
            raise ResourceCapError(f"group order {self.order} above cap {cap}")
        return itertools.product(range(self.n_order), range(self.gamma_order),
                                 range(self.m_delta))

    def generators(self):
        gens = []
        if self.n_order > 1:
            gens.append((1, 0, 0))
        if self.gamma_order > 1:
            gens.append((0, 1, 0))
        if self.m_delta > 1:
            gens.append((0, 0, 1))
        return gens or [self.identity()]

    # -- tower subgroups -------------------------------------------------

    def subgroup(self, i):
        """H_i x Delta = (N semidirect Gamma^{p^i}) x Delta."""
        if not (0 <= i <= self.n):
            raise ValueError(f"level {i} out of range 0..{self.n}")
        return MetabelianGroup(self.p, self.s, self.n - i,
                               pow(self.e, self.p ** i, self.p ** self.s) if self.s else 1,
                               self.m_delta)

    def embed_from_level(self, i, g):
        """Coordinates of a level-i subgroup element inside this group."""
        return (g[0], g[1] * self.p ** i % self.gamma_order if self.gamma_order > 1 else 0, g[2])

    def project_to_level(self, i, g):
        pi = self.p ** i
        if g[1] % pi:
            raise ValueError("element not in the level subgroup")
        return (g[0], g[1] // pi, g[2])

    def commutator_exponent(self):
        """[G, G] = <x^(e-1)> inside N; its index in N."""
        return math.gcd(self.e - 1, self.n_order)

    def abelianization(self):
        g = self.commutator_exponent()
        group = FinAbGroup((g, self.gamma_order, self.m_delta))

        def ab_map(elem):
            return (elem[0] % g, elem[1], elem[2])

        return group, ab_map


def subgroup_Hi(G, i):
    return G.subgroup(i)


def abelianization(G):
    return G.abelianization()


def conj_classes(G, cap=CONJ_CAP):
    """Partition of G into conjugacy classes, deterministically ordered."""
    gens = G.generators()
    all_elems = sorted(G.elements(cap))
    seen = set()
    classes = []
    for g in all_elems:
        if g in seen:
            continue
        orbit = {g}
        frontier = [g]
        while frontier:
            nxt = []
            for h in frontier:
                for c in gens:
                    k = G.conj(c, h)
                    if k not in orbit:
                        orbit.add(k)
                        nxt.append(k)
            frontier = nxt
        seen |= orbit
        classes.append((g, tuple(sorted(orbit))))
    return classes


def schreier_transfer(mul, inv, transversal, in_subgroup, target_map,
                      target_group):
    """The transfer A^{ab} -> B^{ab} by the coset-product formula."""

    def ver(a):
        out = target_group.identity()
        for t in transversal:
            at = mul(a, t)
            for t2 in transversal:
                h = mul(inv(t2), at)
                if in_subgroup(h):
                    out = target_group.add(out, target_map(h))
                    break
            else:
                raise ValueError("transversal does not cover the cosets")
        return out

    return ver


class TowerTransfer:
    """Transfer G_{i-1}^{ab} -> G_i^{ab} along the index-p tower step."""

    def __init__(self, G, i, transversal=None):
        if not (1 <= i <= G.n):
            raise ValueError("tower step out of range")
        self.upper = G.subgroup(i - 1)   # G_{i-1}
        self.lower = G.subgroup(i)       # G_i, index p in G_{i-1}
        self.src_ab, self.src_map = self.upper.abelianization()
        self.dst_ab, self.dst_map = self.lower.abelianization()
        p = G.p
        upper = self.upper
        if transversal is None:
            transversal = [(0, j, 0) for j in range(p)]

        def in_sub(h):
            return h[1] % p == 0

        def tmap(h):
            return self.dst_map(upper.project_to_level(1, h))

        raw = schreier_transfer(upper.mul, upper.inv, transversal, in_sub,
                                tmap, self.dst_ab)
        # images of the natural coordinate generators of G_{i-1}^{ab}
        self.gen_images = []
        for axis in range(3):
            lift = tuple(1 if k == axis else 0 for k in range(3))
            self.gen_images.append(raw(lift))
        self._raw = raw

    def apply(self, ab_elem):
        out = self.dst_ab.identity()
        for coord, img in zip(ab_elem, self.gen_images):
            out = self.dst_ab.add(out, self.dst_ab.scale(img, coord))
        return out


def all_subgroups(group, cap=CONJ_CAP):
    """Every subgroup of a finite abelian group (as frozensets of elements)."""
    elems = sorted(group.elements(cap))
    found = {frozenset({group.identity()})}
    frontier = [frozenset({group.identity()})]
    while frontier:
        nxt = []
        for sub in frontier:
            for g in elems:
                if g in sub:
                    continue
                bigger = frozenset(group.subgroup_closure(list(sub) + [g]))
                if bigger not in found:
                    found.add(bigger)
                    nxt.append(bigger)
        frontier = nxt
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def quotient_structure(group, subgroup):
    """(Q, quot_map) for Q = group/subgroup in SNF coordinates."""
    sub = sorted(subgroup)
    rep_of = {}
    for g in sorted(group.elements()):
        if g in rep_of:
            continue
        coset = sorted(group.add(g, h) for h in sub)
        for x in coset:
            rep_of[x] = coset[0]
    reps = sorted(set(rep_of.values()))

    def op(a, b):
        return rep_of[group.add(a, b)]

    def inv(a):
        return rep_of[group.neg(a)]

    struct = abelian_structure(reps, op, inv, group.identity())

    def quot_map(g):
        return struct.dlog(rep_of[group.reduce(g)])

    return struct.group, quot_map


def conj_action_on_level_ab(G, i):
    """Action of g in G on J-basis elements of G_i^{ab} by conjugation."""
    sub = G.subgroup(i)
    _ab, ab_map = sub.abelianization()

    def act(g, ab_elem):
        lifted = G.embed_from_level(i, ab_elem)
        return ab_map(G.project_to_level(i, G.conj(g, lifted)))

    return act
