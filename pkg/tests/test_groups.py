import random

import pytest

from epsk1.cyclotomic import rational
from epsk1.groups import (
    FinAbGroup,
    MetabelianGroup,
    TowerTransfer,
    abelian_structure,
    abelianization,
    characters,
    conj_action_on_level_ab,
    conj_classes,
    schreier_transfer,
    smith_normal_form,
    subgroup_Hi,
)
from epsk1.residue import LocalFieldParams, units_enumerate


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b)))
             for j in range(len(b[0]))] for i in range(len(a))]


def test_smith_normal_form_random():
    rng = random.Random(0)
    for _ in range(40):
        rows = rng.randint(1, 4)
        cols = rng.randint(1, 4)
        m = [[rng.randint(-9, 9) for _ in range(cols)] for _ in range(rows)]
        d, u, v = smith_normal_form(m)
        assert matmul(matmul(u, m), v) == d
        # diagonal and divisibility chain
        diag = []
        for i in range(rows):
            for j in range(cols):
                if i != j:
                    assert d[i][j] == 0
            if i < cols:
                diag.append(d[i][i])
        nz = [x for x in diag if x]
        for a, b in zip(nz, nz[1:]):
            assert b % a == 0


def test_invariant_factors():
    assert FinAbGroup((9, 1, 2)).invariant_factors == (18,)
    assert FinAbGroup((3, 3)).invariant_factors == (3, 3)
    assert FinAbGroup((6, 4)).invariant_factors == (2, 12)
    assert FinAbGroup((1,)).invariant_factors == ()


def test_characters_count_and_orthogonality():
    group = FinAbGroup((3, 3))
    chars = characters(group)
    assert len(chars) == 9
    for chi in chars:
        total = rational(0, 3, 2)
        for a in group.elements():
            total = total + chi.value(a, 3, 2)
        if chi.is_trivial():
            assert total == 9
        else:
            assert total == 0


def test_characters_z2():
    group = FinAbGroup((2,))
    chars = characters(group)
    values = sorted(chi.value((1,), 13, 3).as_rational() for chi in chars)
    assert values == [-1, 1]


def test_metabelian_axioms():
    G = MetabelianGroup(3, 2, 1, 4)
    assert G.order == 27
    rng = random.Random(1)
    elems = list(G.elements())
    for _ in range(100):
        a, b, c = (rng.choice(elems) for _ in range(3))
        assert G.mul(G.mul(a, b), c) == G.mul(a, G.mul(b, c))
        assert G.mul(a, G.inv(a)) == G.identity()


def test_metabelian_validation():
    with pytest.raises(ValueError):
        MetabelianGroup(3, 2, 1, 2)  # 2^3 = 8 != 1 mod 9
    with pytest.raises(ValueError):
        MetabelianGroup(3, 2, 1, 4, m_delta=3)  # Delta order not prime to p


def test_subgroup_Hi():
    G = MetabelianGroup(3, 2, 1, 4)
    H1 = subgroup_Hi(G, 1)
    assert H1.gamma_order == 1 and H1.e % 9 == 1  # 4^3 = 64 = 1 mod 9
    assert subgroup_Hi(G, 0) == G
    G2 = MetabelianGroup(3, 1, 2, 4)  # 4^9 = 1 mod 3
    assert subgroup_Hi(G2, 2).gamma_order == 1


def test_abelianization_examples():
    G = MetabelianGroup(3, 2, 1, 4)
    ab, ab_map = abelianization(G)
    assert ab.orders == (3, 3, 1)  # gcd(e-1, 9) = 3
    assert ab_map((4, 2, 0)) == (1, 2, 0)
    # abelian input: the group itself
    A = MetabelianGroup(3, 2, 1, 1)
    ab2, _ = abelianization(A)
    assert ab2.orders == (9, 3, 1)
    # dihedral-type: Z/4 x| Z/2 with e = 3
    D = MetabelianGroup(2, 2, 1, 3)
    ab3, _ = abelianization(D)
    assert ab3.orders == (2, 2, 1)


def test_abelianization_is_homomorphism():
    G = MetabelianGroup(3, 2, 1, 4, m_delta=2)
    ab, ab_map = abelianization(G)
    rng = random.Random(2)
    elems = list(G.elements())
    for _ in range(50):
        a, b = rng.choice(elems), rng.choice(elems)
        assert ab_map(G.mul(a, b)) == ab.add(ab_map(a), ab_map(b))


def test_commutator_inclusion_down_the_tower():
    G = MetabelianGroup(3, 2, 1, 4)
    for i in range(G.n):
        hi = G.subgroup(i)
        hj = G.subgroup(i + 1)
        # [H_j, H_j] contained in [H_i, H_i]: the index g_i divides g_j
        assert hj.commutator_exponent() % hi.commutator_exponent() == 0


def test_conj_classes():
    G = MetabelianGroup(3, 2, 1, 4)
    classes = conj_classes(G)
    assert len(classes) == 11
    assert sum(len(orbit) for _, orbit in classes) == 27
    sizes = sorted(len(orbit) for _, orbit in classes)
    assert sizes == [1, 1, 1, 3, 3, 3, 3, 3, 3, 3, 3]
    assert classes[0] == ((0, 0, 0), ((0, 0, 0),))
    # abelian group: all classes singletons
    A = MetabelianGroup(3, 1, 1, 1)
    assert all(len(orbit) == 1 for _, orbit in conj_classes(A))
    # brute-force oracle on the flagship group
    elems = list(G.elements())
    brute = {g: tuple(sorted({G.conj(h, g) for h in elems})) for g in elems}
    for rep, orbit in classes:
        assert brute[rep] == orbit


def test_transfer_abelian_cases():
    # A = Z/8 >= B = Z/4 (index 2): Ver(x) = 2x in the subgroup coordinates
    A = FinAbGroup((8,))

    def mul(a, b):
        return A.add(a, b)

    def inv(a):
        return A.neg(a)

    B = FinAbGroup((4,))
    ver = schreier_transfer(
        mul, inv, [(0,), (1,)],
        lambda h: h[0] % 2 == 0,
        lambda h: (h[0] // 2 % 4,), B)
    for x in range(8):
        assert ver((x,)) == ((2 * x % 8) // 2 % 4,)
    # A = Z/2 x Z/2 >= first factor: Ver(a) = a^2 = identity
    A2 = FinAbGroup((2, 2))
    B2 = FinAbGroup((2,))
    ver2 = schreier_transfer(
        A2.add, A2.neg, [(0, 0), (0, 1)],
        lambda h: h[1] == 0,
        lambda h: (h[0],), B2)
    for a in A2.elements():
        assert ver2(a) == (0,)


def test_tower_transfer_flagship():
    G = MetabelianGroup(3, 2, 1, 4)
    tr = TowerTransfer(G, 1)
    # closed form: N-part maps by x -> x^(1+e+e^2) = x^21 = x^3, Gamma dies
    assert tr.apply((1, 0, 0)) == (3, 0, 0)
    assert tr.apply((0, 1, 0)) == (0, 0, 0)
    assert tr.apply((2, 2, 0)) == (6, 0, 0)
    # independence of the transversal
    tr2 = TowerTransfer(G, 1, transversal=[(1, 0, 0), (4, 1, 0), (7, 2, 0)])
    for a in tr.src_ab.elements():
        assert tr.apply(a) == tr2.apply(a)
    # transfer is a homomorphism
    src = tr.src_ab
    for a in src.elements():
        for b in src.elements():
            assert tr.apply(src.add(a, b)) == tr.dst_ab.add(tr.apply(a), tr.apply(b))


def test_conj_action_on_level_ab():
    G = MetabelianGroup(3, 2, 1, 4)
    act = conj_action_on_level_ab(G, 1)
    # Gamma generator conjugates N by x -> x^e
    assert act((0, 1, 0), (1, 0, 0)) == (4, 0, 0)
    assert act((0, 1, 0), (3, 0, 0)) == (3, 0, 0)  # 12 = 3 mod 9
    # level-0 abelianization sees only trivial conjugation
    act0 = conj_action_on_level_ab(G, 0)
    for g in [(1, 0, 0), (0, 1, 0)]:
        for h in [(1, 0, 0), (0, 1, 0), (2, 2, 0)]:
            assert act0(g, h) == h


def test_abelian_structure_units():
    params = LocalFieldParams(3, 1, 2)
    units = list(units_enumerate(params, 2))
    ring = units[0].ring
    struct = abelian_structure(units, lambda a, b: a * b,
                               lambda a: a.inverse(), ring.one())
    assert struct.group.orders == (6,)
    g = struct.snf_gens[0]
    seen = set()
    x = ring.one()
    for _ in range(6):
        seen.add(x)
        x = x * g
    assert len(seen) == 6
    for u in units:
        (k,) = struct.dlog(u)
        assert g ** k == u


def test_abelian_structure_product_group():
    group = FinAbGroup((2, 4))
    elems = sorted(group.elements())
    struct = abelian_structure(elems, group.add, group.neg, group.identity())
    assert struct.group.invariant_factors == (2, 4)
    assert sorted(struct.group.orders) == [2, 4]
