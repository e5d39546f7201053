import random
from fractions import Fraction

import pytest

from epsk1.cyclotomic import (
    CycloElem,
    CycloModulus,
    cyclotomic_poly,
    euler_phi,
    frobenius_p,
    galois_apply,
    p_divisibility,
    rational,
    root_of_unity,
    solve_linear_system,
)


def zeta(order, exp=1, l=3, p=2):
    return root_of_unity(order, exp, l, p)


def random_elem(rng, modulus, size=4):
    ql, qp, qm = modulus.parts
    raw = []
    for _ in range(size):
        e = (rng.randrange(ql), rng.randrange(qp), rng.randrange(qm))
        c = Fraction(rng.randint(-9, 9), modulus.l ** rng.randint(0, 2))
        raw.append((e, c))
    return CycloElem.build(modulus, raw)


def test_cyclotomic_polys():
    assert cyclotomic_poly(1) == (-1, 1)
    assert cyclotomic_poly(2) == (1, 1)
    assert cyclotomic_poly(3) == (1, 1, 1)
    assert cyclotomic_poly(9) == (1, 0, 0, 1, 0, 0, 1)
    assert cyclotomic_poly(12) == (1, 0, -1, 0, 1)
    for n in (4, 5, 6, 8, 10, 15, 27):
        assert len(cyclotomic_poly(n)) == euler_phi(n) + 1


def test_zeta3_relation():
    z = zeta(3)
    assert z + z * z == -1
    assert z ** 3 == 1


def test_mul_identity():
    rng = random.Random(1)
    mod = CycloModulus(3, 2, 2, 1, 1)
    one = CycloElem.from_rational(1, mod)
    for _ in range(10):
        x = random_elem(rng, mod)
        assert x * one == x


def test_gauss_square():
    # (zeta3 - zeta3^2)^2 expands to zeta3^2 - 2*zeta3^3 + zeta3^4
    #                    = zeta3^2 + zeta3 - 2 = -1 - 2 = -3
    z = zeta(3)
    g = z - z ** 2
    assert g * g == -3


def test_canonicality_random():
    rng = random.Random(7)
    mod = CycloModulus(3, 2, 2, 2, 5)
    for _ in range(30):
        x = random_elem(rng, mod)
        y = random_elem(rng, mod)
        assert (x + y - y).coeffs == x.coeffs


def test_galois_basic():
    z = zeta(3)
    assert galois_apply(z, 2) == z ** 2
    assert galois_apply(z - z ** 2, 2) == z ** 2 - z
    q = rational(Fraction(5, 3), 3, 2)
    assert galois_apply(q, 2) == q


def test_galois_errors_and_composition():
    z = zeta(9)
    with pytest.raises(ValueError):
        galois_apply(z, 3)
    rng = random.Random(3)
    mod = CycloModulus(3, 2, 2, 1, 5)
    n = mod.n
    units = [t for t in range(1, n) if __import__("math").gcd(t, n) == 1]
    for _ in range(20):
        x = random_elem(rng, mod)
        s, t = rng.choice(units), rng.choice(units)
        assert galois_apply(galois_apply(x, s), t) == galois_apply(x, s * t % n)
        assert galois_apply(x, 1) == x


def test_galois_commutes_with_ring_ops():
    rng = random.Random(11)
    mod = CycloModulus(3, 2, 2, 1, 1)
    units = [1, 5, 7, 11, 13, 17, 19, 23, 25, 29, 31, 35]
    for _ in range(50):
        x = random_elem(rng, mod, 3)
        y = random_elem(rng, mod, 3)
        t = rng.choice(units)
        assert galois_apply(x + y, t) == galois_apply(x, t) + galois_apply(y, t)
        assert galois_apply(x * y, t) == galois_apply(x, t) * galois_apply(y, t)


def test_frobenius_p():
    z3 = zeta(3, 1, l=3, p=2)
    assert frobenius_p(z3) == z3 ** 2
    q = rational(7, 3, 2)
    assert frobenius_p(q) == q
    z4 = zeta(4, 1, l=3, p=2)
    assert frobenius_p(z4) == z4  # identity on p-power roots


def test_frobenius_order():
    # order of p on the prime-to-p part: ord of 2 mod 9*5 = 45 is 12
    mod = CycloModulus(3, 2, 2, 0, 5)
    rng = random.Random(5)
    x = random_elem(rng, mod, 5)
    y = x
    order = 1
    t = 2
    while t != 1:
        t = t * 2 % 45
        order += 1 if t != 1 else 0
    y = x
    for _ in range(12):
        y = frobenius_p(y)
    assert y == x


def test_p_divisibility_examples():
    z = zeta(3, 1, l=3, p=2)
    assert p_divisibility(z * 2, 1)
    assert not p_divisibility(z, 1)
    # l=13, d=1, p=3: 13 - 13^3 = -2184 = -3 * 728
    x = rational(13 - 13 ** 3, 13, 3)
    assert p_divisibility(x, 1)
    assert not p_divisibility(x, 2)  # -2184 = -2^3*3*7*13


def test_p_divisibility_closure():
    rng = random.Random(13)
    mod = CycloModulus(3, 1, 2, 1, 1)
    for _ in range(20):
        x = random_elem(rng, mod)
        k = rng.randint(1, 3)
        assert p_divisibility(x * (mod.p ** k), k)
    for _ in range(20):
        x = random_elem(rng, mod)
        y = random_elem(rng, mod)
        for k in (1, 2):
            if p_divisibility(x, k) and p_divisibility(y, k):
                assert p_divisibility(x + y, k)


def test_promotion_and_equality_across_moduli():
    z3a = root_of_unity(3, 1, 3, 2)
    z3b = root_of_unity(9, 3, 3, 2)  # zeta_9^3 = zeta_3
    assert z3a == z3b
    assert rational(2, 3, 2) == 2


def test_inverse():
    z = zeta(9)
    x = 1 + z - z ** 2 * Fraction(1, 3)
    inv = x.inverse()
    assert x * inv == 1
    g = zeta(3) - zeta(3) ** 2
    ginv = g.inverse()
    assert g * ginv == 1
    # g^2 = -3 so g^{-1} = -g/3
    assert ginv == g * Fraction(-1, 3)
    with pytest.raises(ZeroDivisionError):
        rational(0, 3, 2).inverse()


def test_coeffs_mod_p_power():
    z = zeta(3, 1, l=3, p=2)
    x = z * Fraction(7, 3) + 4
    got = x.coeffs_mod_p_power(3)  # mod 8
    # 7/3 mod 8: 3^{-1} = 3, 7*3 = 21 = 5 mod 8
    assert got[(1, 0, 0)] == 5
    assert got[(0, 0, 0)] == 4


def test_solve_linear_system_singular():
    one = Fraction(1)
    assert solve_linear_system([[one, one], [one, one]], [one, one + 1]) is None


def test_mixed_modulus_product():
    # zeta_3 * zeta_4 has order 12; twelfth power is 1
    x = zeta(3, 1, 3, 2) * zeta(4, 1, 3, 2)
    assert x ** 12 == 1
    assert x ** 6 != 1
