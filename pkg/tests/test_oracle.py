from fractions import Fraction

import pytest
from gmpy2 import mpq

from oracles import brute_distribution
from patdist import compile_pattern, uniform_iid
from patdist.markov import MarkovModel
from patdist.oracle import BudgetExceeded, exhaustive, monte_carlo

ADAD = compile_pattern("ADAD", "ABCD")


def test_ab_length_two():
    res = exhaustive(compile_pattern("AB", "AB"), uniform_iid("AB"), 2)
    assert res.distribution == {0: mpq(3, 4), 1: mpq(1, 4)}
    assert res.samples == 4 and res.exact


def test_length_equal_order():
    model = MarkovModel("AB", 2, {"AB": mpq(1, 2), "BA": mpq(1, 2)},
                        {(c, b): mpq(1, 2) for c in ("AA", "AB", "BA", "BB") for b in "AB"})
    res = exhaustive(compile_pattern("AB", "AB"), model, 2)
    assert res.distribution == {0: 1}


def test_matches_regex_oracle():
    model = MarkovModel("AB", 1, {"A": mpq(1, 4), "B": mpq(3, 4)},
                        {("A", "A"): mpq(2, 3), ("A", "B"): mpq(1, 3), ("B", "A"): mpq(1, 7), ("B", "B"): mpq(6, 7)})
    res = exhaustive(compile_pattern("A(A|B)B", "AB"), model, 9)
    mu = {k: Fraction(str(v)) for k, v in model.mu.items()}
    pi = {k: Fraction(str(v)) for k, v in model.pi.items()}
    ref = brute_distribution("A(A|B)B", "AB", 9, 1, mu, pi)
    assert {k: Fraction(str(v)) for k, v in res.distribution.items()} == ref


def test_budget():
    with pytest.raises(BudgetExceeded):
        exhaustive(ADAD, uniform_iid("ABCD"), 20)


def test_degenerate_model():
    model = MarkovModel("AB", 0, {}, {("", "A"): 1})
    dfa = compile_pattern("AA", "AB")
    assert exhaustive(dfa, model, 6).distribution == {5: 1}
    assert monte_carlo(dfa, model, 6, 500, seed=3).distribution == {5: 1.0}


def test_mc_deterministic_and_jobs_independent():
    a = monte_carlo(ADAD, uniform_iid("ABCD"), 60, 25_000, seed=11, jobs=1)
    b = monte_carlo(ADAD, uniform_iid("ABCD"), 60, 25_000, seed=11, jobs=3)
    c = monte_carlo(ADAD, uniform_iid("ABCD"), 60, 25_000, seed=12)
    assert a.distribution == b.distribution
    assert a.distribution != c.distribution


def test_mc_order_one_within_error():
    model = MarkovModel("AB", 1, {"A": mpq(1, 4), "B": mpq(3, 4)},
                        {("A", "A"): mpq(2, 3), ("A", "B"): mpq(1, 3), ("B", "A"): mpq(1, 7), ("B", "B"): mpq(6, 7)})
    dfa = compile_pattern("AB", "AB")
    ex = exhaustive(dfa, model, 10)
    mc = monte_carlo(dfa, model, 10, 200_000, seed=5)
    for n, p in ex.distribution.items():
        se = max(mc.stderr.get(n, 0.0), (float(p) * (1 - float(p)) / mc.samples) ** 0.5)
        assert abs(mc.probability(n) - float(p)) <= 5 * se + 1e-12


@pytest.mark.slow
def test_mc_adad_2000():
    mc = monte_carlo(ADAD, uniform_iid("ABCD"), 2000, 100_000, seed=2024, jobs=4)
    p = 9.12559e-2
    assert abs(mc.probability(10) - p) <= 4 * (p * (1 - p) / mc.samples) ** 0.5
