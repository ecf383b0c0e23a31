from fractions import Fraction
from math import prod

import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, strategies as st

from oracles import mr_is_prime, series_coeffs
from patdist.arith import (QQ, PrimeField, ReconstructionError, TruncPoly, crt_combine, ext_context,
                           fraction_reconstruct, interpolate, is_probable_prime, poly_divmod, poly_eval,
                           poly_gcd, poly_mul, prime_stream, rational_reconstruct, to_ext)


def test_crt_small():
    assert crt_combine([(2, 3), (3, 5), (2, 7)]) == 23


def test_crt_rejects_shared_factor():
    with pytest.raises(ValueError):
        crt_combine([(1, 6), (1, 9)])


@given(st.lists(st.sampled_from([101, 103, 107, 109, 113, 127, 131]), min_size=1, max_size=5, unique=True),
       st.integers(min_value=0))
def test_crt_recovers_residues(moduli, x):
    M = prod(moduli)
    x %= M
    assert crt_combine([(x % p, p) for p in moduli]) == x


@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_rational_reconstruct_roundtrip(n, d):
    q = Fraction(n, d)
    M = 2**89 - 1  # prime, large enough for the Wang bound
    x = q.numerator * pow(q.denominator, -1, M) % M
    r = rational_reconstruct(x, M)
    assert (int(r.numerator), int(r.denominator)) == (q.numerator, q.denominator)


def test_rational_reconstruct_failure():
    M, bound = 101, 7  # isqrt(101 // 2)
    reachable = {n * pow(d, -1, M) % M for n in range(-bound, bound + 1) for d in range(1, bound + 1)}
    bad = [x for x in range(M) if x not in reachable]
    assert bad
    for x in bad:
        with pytest.raises(ReconstructionError):
            rational_reconstruct(x, M)
    for x in reachable:
        r = rational_reconstruct(x, M)
        assert int(r.numerator) * pow(int(r.denominator), -1, M) % M == x


def test_primes_match_independent_test():
    ps = []
    for p in prime_stream(31):
        ps.append(p)
        if len(ps) == 20:
            break
    assert ps == sorted(set(ps))
    assert ps[0] >= 2**31
    assert all(mr_is_prime(p) for p in ps)
    gaps = range(ps[0], ps[-1] + 1)
    assert [n for n in gaps if mr_is_prime(n)] == ps


@given(st.integers(2, 10**6))
def test_is_probable_prime(n):
    assert is_probable_prime(n) == mr_is_prime(n)


def test_fraction_reconstruct_fibonacci():
    s = series_coeffs([1, -1, -1], [0, 1], 9)
    B, A = fraction_reconstruct([mpq(x) for x in s], 2)
    assert A == [1, -1, -1] and B == [0, 1]


def test_fraction_reconstruct_normalizes_and_reduces():
    # (1 + z)(1 - z) / ((1 + z)(1 - 2z)) = (1 - z) / (1 - 2z)
    s = series_coeffs([1, -1, -2], [1, 0, -1], 7)
    B, A = fraction_reconstruct([mpq(x) for x in s], 3)
    assert A == [1, -2] and B == [1, -1]


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=5), st.lists(st.integers(-5, 5), min_size=1, max_size=4))
def test_fraction_reconstruct_mod_p_matches_rational(a, b):
    a[0] = 1
    d = max(len(a), len(b))
    s = series_coeffs(a, b, 2 * d + 1)
    B, A = fraction_reconstruct([mpq(x) for x in s], d)
    p = 1_000_003
    F = PrimeField(p)
    Bp, Ap = fraction_reconstruct([F(mpq(x)) for x in s], d, F)
    assert Ap == [F(c) for c in A]
    assert Bp == [F(c) for c in B]


@given(st.lists(st.integers(0, 1008), min_size=1, max_size=8))
def test_interpolate_recovers_polynomial(coeffs):
    p = 1009
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    F = PrimeField(p)
    pts = [(x, poly_eval(coeffs, x, F)) for x in range(len(coeffs) + 2)]
    assert interpolate(pts, p) == coeffs


def test_interpolate_repeated_abscissa():
    with pytest.raises(ValueError):
        interpolate([(1, 2), (1, 3)], 7)


def test_poly_divmod_and_gcd():
    a = poly_mul([mpq(1), mpq(1)], [mpq(-2), mpq(0), mpq(1)])
    q, r = poly_divmod(a, [mpq(1), mpq(1)])
    assert q == [-2, 0, 1] and r == []
    assert poly_gcd(a, poly_mul([mpq(1), mpq(1)], [mpq(3), mpq(1)])) == [1, 1]


def test_prime_field_rejects_vanishing_denominator():
    with pytest.raises(ZeroDivisionError):
        PrimeField(7)(mpq(1, 14))


def test_truncpoly_inverse():
    a = TruncPoly([mpq(1), mpq(-1)], 6)
    assert (a * a.inverse()) == TruncPoly.constant(mpq(1), 6)
    assert a.inverse().c == [1] * 7


def test_ext_context_wide_exponents():
    with ext_context(256):
        x = mpfr(2) ** -100000
        assert x > 0 and x * mpfr(2) ** 100000 == 1
    assert to_ext(mpq(1, 3), 64).precision == 64
