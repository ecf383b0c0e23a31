from fractions import Fraction

import pytest
from gmpy2 import mpfr, mpq

from conftest import toy_chain
from oracles import brute_distribution
from patdist import compile_pattern, embed, make_order_m
from patdist.arith import ext_context
from patdist.embedding import SparseMatrix
from patdist.markov import MarkovModel
from patdist.recursion import SpectralError, dominant_eigenvalue, full_distribution, partial_distribution

ORDER1 = MarkovModel("AB", 1, {"A": mpq(1, 3), "B": mpq(2, 3)},
                     {("A", "A"): mpq(1, 5), ("A", "B"): mpq(4, 5), ("B", "A"): mpq(1, 2), ("B", "B"): mpq(1, 2)})


def rel(a, b):
    with ext_context(256):
        return abs(mpfr(a) - mpfr(b)) / abs(mpfr(b))


@pytest.mark.parametrize("pattern, alphabet, length", [("AB", "AB", 10), ("ADAD", "ABCD", 7),
                                                       ("A(A|B)A", "AB", 11)])
def test_full_exact_vs_brute(pattern, alphabet, length):
    dist = full_distribution(toy_chain(pattern, alphabet), length, length, mode="exact")
    ref = brute_distribution(pattern, alphabet, length)
    assert [Fraction(int(p.numerator), int(p.denominator)) for p in dist.probs] == \
        [ref.get(n, 0) for n in range(length + 1)]


def test_full_exact_order_one_vs_brute():
    chain = embed(make_order_m(compile_pattern("AB", "AB"), 1), ORDER1)
    mu = {k: Fraction(str(v)) for k, v in ORDER1.mu.items()}
    pi = {k: Fraction(str(v)) for k, v in ORDER1.pi.items()}
    dist = full_distribution(chain, 9, 9, mode="exact")
    ref = brute_distribution("AB", "AB", 9, 1, mu, pi)
    assert [Fraction(str(p)) for p in dist.probs] == [ref.get(n, 0) for n in range(10)]


@pytest.mark.parametrize("pattern, alphabet", [("ADAD", "ABCD"), ("AD(A|D){2}AD", "ABCD"), ("AB", "AB")])
def test_normalization(pattern, alphabet):
    chain = toy_chain(pattern, alphabet)
    for length in (1, 17, 50):
        assert sum(full_distribution(chain, length, length, mode="exact").probs) == 1


def test_float_matches_exact(adad):
    ex = full_distribution(adad, 300, 10, mode="exact")
    fl = full_distribution(adad, 300, 10, mode="float")
    for a, b in zip(ex.probs, fl.probs):
        assert rel(b, a) < mpfr(2) ** -1000


def test_length_guard():
    chain = embed(make_order_m(compile_pattern("AB", "AB"), 1), ORDER1)
    with pytest.raises(ValueError):
        full_distribution(chain, 0, 3)


def test_single_state_eigenvalue():
    sd = dominant_eigenvalue(SparseMatrix([[(0, mpq(1, 2))]]))
    assert sd.lam == mpfr("0.5")


def test_nilpotent():
    with pytest.raises(SpectralError):
        dominant_eigenvalue(SparseMatrix([[(1, mpq(1))], []]))
    with pytest.raises(SpectralError):
        dominant_eigenvalue(SparseMatrix([[], []]))


@pytest.mark.parametrize("pattern, gap", [("ADAD", 3.7e-3), ("AD(A|D){2}AD", 9.5e-4), ("AD(A|D){5}AD", 1.2e-4)])
def test_spectral_gap(pattern, gap):
    lam = dominant_eigenvalue(toy_chain(pattern).P, precision=256).lam
    assert abs(float(1 - lam) - gap) <= 0.05 * gap


def test_partial_vs_full(adad):
    full = full_distribution(adad, 2000, 10)
    part = partial_distribution(adad, 2000, 10)
    assert part.method == "partial"
    for a, b in zip(part.probs, full.probs):
        assert rel(a, b) <= 1e-13


def test_partial_vs_full_order_one():
    chain = embed(make_order_m(compile_pattern("ABA", "AB"), 1), ORDER1)
    full = full_distribution(chain, 1500, 6)
    part = partial_distribution(chain, 1500, 6)
    assert part.method == "partial"
    for a, b in zip(part.probs, full.probs):
        assert rel(a, b) <= 1e-13


def test_partial_lambda_substitution(ad2):
    sd = dominant_eigenvalue(ad2.P)
    base = partial_distribution(ad2, 5000, 4, spectral=sd)
    with ext_context(1024):
        shifted = partial_distribution(ad2, 5000, 4, lam=sd.lam * (1 + mpfr(2) ** -40))
    for a, b in zip(shifted.probs, base.probs):
        assert rel(a, b) <= 1e-12


def test_partial_fallback(adad):
    out = partial_distribution(adad, 30, 10)
    assert out.method == "partial->full" and out.meta["fallback"]
    assert out.probs == full_distribution(adad, 30, 10).probs


def test_partial_alpha_reported(adad):
    out = partial_distribution(adad, 2000, 10)
    assert 80 <= out.meta["alpha"] <= 100
    assert out.meta["power_iterations"] > 0
