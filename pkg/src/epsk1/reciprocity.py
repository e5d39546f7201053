"""Reciprocity data: synthetic abelian surjections standing in for the
local reciprocity map, and coherent tame-tower families realizing the
metabelian group (N semidirect Gamma) x Delta over unramified fields.

Tower maps are generated from the classical tame recipe and then VERIFIED
exhaustively (transfer- and norm-compatibility); any failure aborts the
construction.  The normalization is geometric: the uniformiser maps to
the inverse of the Frobenius class.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import MathCheckError, SchemaError
from .groups import FinAbGroup, MetabelianGroup, TowerTransfer, abelian_structure
from .residue import (
    DEFAULT_CAP,
    LocalFieldParams,
    embedding,
    galois_ring,
    least_generator,
    units_enumerate,
)


@dataclass
class RecDatum:
    """A finite abelian reciprocity datum: unit map plus uniformiser image."""

    params: LocalFieldParams
    target: FinAbGroup
    pi_image: tuple
    unit_map_fn: object
    gens_info: list = field(default_factory=list)  # [(unit, order, image)]
    label: str = ""

    def unit_map(self, u):
        if not u.is_unit():
            raise ValueError("unit_map applied to a non-unit")
        return self.unit_map_fn(u)

    def rec(self, unit, pi_exponent=0):
        return self.target.add(self.unit_map(unit),
                               self.target.scale(self.pi_image, pi_exponent))

    def units(self, level=None, cap=DEFAULT_CAP):
        return units_enumerate(self.params, level or self.params.a, cap)

    def ring(self):
        return galois_ring(self.params.l, self.params.d, self.params.a)


def rec_evaluate(datum, unit, pi_exponent):
    return datum.rec(unit, pi_exponent)


def character_conductor(datum, chi, cap=DEFAULT_CAP):
    """Smallest b >= 0 with chi o unit_map trivial on units = 1 mod pi^b."""
    a = datum.params.a
    l = datum.params.l
    for b in range(a + 1):
        ok = True
        for u in datum.units(cap=cap):
            if all((c - (1 if i == 0 else 0)) % l ** b == 0
                   for i, c in enumerate(u.coeffs)):
                if not chi.restrict_vanishes_on([datum.unit_map(u)]):
                    ok = False
                    break
        if ok:
            return b
    raise MathCheckError("no conductor found (unit_map not a homomorphism?)")


# -- synthetic data ----------------------------------------------------------

def _unit_structure(params, cap=DEFAULT_CAP):
    units = list(units_enumerate(params, params.a, cap))
    ring = galois_ring(params.l, params.d, params.a)
    return units, abelian_structure(
        units, lambda x, y: x * y, lambda x: x.inverse(), ring.one(), cap=cap)


def synthetic_rec(params, target, seed=0, cap=DEFAULT_CAP):
    """A valid RecDatum onto `target`, deterministic per seed."""
    units, struct = _unit_structure(params, cap)
    torsion = {}
    elements = sorted(target.elements())
    rng = random.Random(seed)

    def candidates(order):
        if order not in torsion:
            compatible = [a for a in elements if order % target.order_of(a) == 0]
            compatible.sort(key=lambda a: (-target.order_of(a), a))
            torsion[order] = compatible
        return torsion[order]

    def build(images, pi_image):
        gen_images = list(images)

        def unit_map_fn(u):
            coords = struct.dlog(u)
            out = target.identity()
            for c, img in zip(coords, gen_images):
                out = target.add(out, target.scale(img, c))
            return out

        return RecDatum(params, target, pi_image, unit_map_fn,
                        gens_info=[(g, o, im) for g, o, im in
                                   zip(struct.snf_gens, struct.group.orders,
                                       gen_images)],
                        label=f"synthetic(seed={seed})")

    attempts = []
    canonical = [candidates(o)[0] if candidates(o) else target.identity()
                 for o in struct.group.orders]
    attempts.append(canonical)
    for _ in range(300):
        attempts.append([rng.choice(candidates(o)) if candidates(o)
                         else target.identity()
                         for o in struct.group.orders])
    for images in attempts:
        generated = target.subgroup_closure(images)
        if len(generated) == target.order:
            return build(images, target.identity())
        for pi in elements:
            if len(target.subgroup_closure(list(images) + [pi])) == target.order:
                return build(images, pi)
    raise SchemaError(
        f"no surjection from the unit group {struct.group.orders} x Z onto "
        f"{target.orders}")


# -- tame towers --------------------------------------------------------------

@dataclass
class TowerLevel:
    index: int
    params: LocalFieldParams
    gen: object                 # least generator of the residue field
    ab_group: FinAbGroup
    ab_map: object
    datum: RecDatum
    n_index: int                # g_i = gcd(q_i - 1, p^s)


@dataclass
class TameTower:
    l: int
    d0: int
    p: int
    s: int
    n: int
    e: int
    m_delta: int
    group: MetabelianGroup
    levels: list
    unit_convention: str
    coherence_report: dict

    @property
    def spec(self):
        return {"l": self.l, "d0": self.d0, "p": self.p, "s": self.s,
                "n": self.n, "e": self.e, "m_delta": self.m_delta}

    def step_embedding(self, i):
        """Residue embedding level i -> level i+1."""
        return embedding(self.l, self.d0 * self.p ** i,
                         self.d0 * self.p ** (i + 1), 1)

    def embed_to_level(self, i, x, j):
        """Carry x from level i up to level j >= i."""
        for k in range(i, j):
            x = self.step_embedding(k).apply(x)
        return x

    def natural_map(self, i):
        """G_i^{ab} -> G_{i-1}^{ab} induced by the subgroup inclusion."""
        upper = self.group.subgroup(i - 1)
        _ab, ab_map = upper.abelianization()

        def fn(v):
            return ab_map(upper.embed_from_level(1, v))

        return fn


def validate_tower_spec(spec):
    required = {"l", "d0", "p", "s", "n", "e", "m_delta"}
    missing = required - set(spec)
    if missing:
        raise SchemaError(f"tower spec missing keys {sorted(missing)}")
    l, d0, p, s, n, e, md = (spec[k] for k in
                             ("l", "d0", "p", "s", "n", "e", "m_delta"))
    ps = p ** s
    if l == p:
        raise SchemaError("l and p must be distinct")
    if e % ps != pow(l, d0, ps):
        raise SchemaError(
            f"realizability violated: e = {e} != l^d0 = {pow(l, d0, ps)} (mod {ps})")
    qn = l ** (d0 * p ** n)
    if (qn - 1) % ps:
        raise SchemaError(
            f"realizability violated: {ps} does not divide l^(d0*p^n) - 1 = {qn - 1}")
    if math.gcd(md, p) != 1:
        raise SchemaError("m_delta must be prime to p")
    if pow(e, p ** n, ps) != 1 % ps:
        raise SchemaError("e^(p^n) != 1 mod p^s")


def tame_tower(spec, cap=DEFAULT_CAP, unit_convention="classical"):
    """Construct the coherent tame tower; all checks run, never assumed."""
    validate_tower_spec(spec)
    if unit_convention not in ("classical", "inverse"):
        raise SchemaError(f"unknown unit convention {unit_convention!r}")
    l, d0, p, s, n, e, md = (spec[k] for k in
                             ("l", "d0", "p", "s", "n", "e", "m_delta"))
    ps = p ** s
    G = MetabelianGroup(p, s, n, e % ps if ps > 1 else 1, md)
    dn = d0 * p ** n
    qn = l ** dn
    ring_n = galois_ring(l, dn, 1)
    gen_n = least_generator(l, dn)
    zstar = gen_n ** ((qn - 1) // ps)

    levels = []
    for i in range(n + 1):
        di = d0 * p ** i
        qi = l ** di
        params = LocalFieldParams(l, di, 1)
        gi = math.gcd(qi - 1, ps)
        sub = G.subgroup(i)
        if sub.commutator_exponent() != gi:
            raise MathCheckError("group/field commutator index mismatch")
        ab_group, ab_map = sub.abelianization()
        gen_i = least_generator(l, di)
        w = zstar ** (ps // gi)

        def dlog_in_w(target_elem, w=w, gi=gi):
            cur = ring_n.one()
            for j in range(gi):
                if cur == target_elem:
                    return j
                cur = cur * w
            raise MathCheckError("value escaped the tame character group")

        def c_arith(u, i=i, qi=qi, gi=gi, dlog_in_w=dlog_in_w):
            emb_u = _embed_chain(l, d0, p, i, n, u)
            return dlog_in_w(emb_u ** ((qi - 1) // gi))

        sign = -1 if unit_convention == "classical" else 1

        def unit_map_fn(u, ab_group=ab_group, c_arith=c_arith, sign=sign):
            return ab_group.reduce((sign * c_arith(u), 0, 0))

        # uniformiser: arithmetic Frobenius class has N-part from the tame
        # symbol (l, l)_{g_i} = Teich((-1))^((q_i-1)/g_i)
        exp_minus = (qi - 1) // gi
        v_l = ring_n.elem(1) if exp_minus % 2 == 0 else ring_n.elem(-1)
        c_l = dlog_in_w(v_l)
        frob_class = ab_map((c_l % ps, 1 % max(sub.gamma_order, 1), p ** i % md))
        pi_image = ab_group.neg(frob_class)  # geometric: pi -> Frobenius^{-1}

        datum = RecDatum(params, ab_group, pi_image, unit_map_fn,
                         gens_info=[(gen_i, qi - 1, unit_map_fn(gen_i))],
                         label=f"tower-level-{i}")
        levels.append(TowerLevel(i, params, gen_i, ab_group, ab_map, datum, gi))

    tower = TameTower(l, d0, p, s, n, e, md, G, levels, unit_convention, {})
    tower.coherence_report = _check_coherence(tower, cap)
    return tower


def _embed_chain(l, d0, p, i, n, x):
    for k in range(i, n):
        x = embedding(l, d0 * p ** k, d0 * p ** (k + 1), 1).apply(x)
    return x


def _check_coherence(tower, cap):
    """Transfer- and norm-compatibility for all units; hard error on failure."""
    report = {"ver_checked": 0, "norm_checked": 0, "surjectivity": [],
              "tame_conductor": True}
    G = tower.group
    p = tower.p
    for lv in tower.levels:
        gens = [lv.datum.unit_map(lv.gen), lv.datum.pi_image]
        closure = lv.ab_group.subgroup_closure(gens)
        if len(closure) != lv.ab_group.order:
            raise MathCheckError(
                f"level {lv.index}: reciprocity map not surjective")
        report["surjectivity"].append(lv.ab_group.orders)
        if lv.params.a != 1:
            report["tame_conductor"] = False
            raise MathCheckError("tame level with conductor above 1")
    for i in range(1, tower.n + 1):
        lower, upper = tower.levels[i - 1], tower.levels[i]
        tr = TowerTransfer(G, i)
        step = tower.step_embedding(i - 1)
        q_low = lower.params.q
        for u in units_enumerate(lower.params, 1, cap):
            lhs = upper.datum.unit_map(step.apply(u))
            rhs = tr.apply(lower.datum.unit_map(u))
            if lhs != rhs:
                raise MathCheckError(
                    f"ver-compatibility fails at level {i}, unit {u.coeffs}: "
                    f"{lhs} != {rhs}")
            report["ver_checked"] += 1
        nat = tower.natural_map(i)
        rel_norm_exp = (upper.params.q - 1) // (q_low - 1)
        for v in units_enumerate(upper.params, 1, cap):
            nv = step.preimage(v ** rel_norm_exp)
            lhs = lower.datum.unit_map(nv)
            rhs = nat(upper.datum.unit_map(v))
            if lhs != rhs:
                raise MathCheckError(
                    f"norm-compatibility fails at level {i}, unit {v.coeffs}: "
                    f"{lhs} != {rhs}")
            report["norm_checked"] += 1
        # uniformiser: Norm(l) = l^p, so p * pi_{i-1} must match pi_i downstairs
        lhs = lower.ab_group.scale(lower.datum.pi_image, p)
        rhs = nat(upper.datum.pi_image)
        if lhs != rhs:
            raise MathCheckError(
                f"norm-compatibility fails at level {i} on the uniformiser: "
                f"{lhs} != {rhs}")
    return report
