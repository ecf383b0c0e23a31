from itertools import product

import pytest
from hypothesis import given, strategies as st

from oracles import end_positions
from patdist.automaton import (Alternation, CharClass, Concat, EmptyLanguageError, Literal, PatternSyntaxError,
                               Repeat, build_min_dfa, compile_pattern, is_non_m_ambiguous, make_order_m, parse_dot,
                               parse_pattern, scan, to_dot)


def w_k(k):
    return f"AB.{{{k}}}AA.{{{k}}}AB"


@pytest.mark.parametrize("k, R, F", [(1, 12, 1), (2, 27, 3), (3, 57, 6), (4, 122, 13), (5, 262, 28)])
def test_wk_sizes(k, R, F):
    dfa = compile_pattern(w_k(k), "AB")
    assert (dfa.n_states, len(dfa.finals)) == (R, F)


def test_example_scan():
    assert scan(compile_pattern(w_k(1), "AB"), "ABAAABBAAAABBAABABAB") == [12, 18]


def test_scan_trivial():
    dfa = compile_pattern("AB", "AB")
    assert scan(dfa, "") == []
    assert scan(dfa, "ABAB") == [2, 4]
    with pytest.raises(ValueError):
        scan(dfa, "ABC")


def test_single_letter():
    dfa = compile_pattern("A", "AB")
    assert (dfa.n_states, len(dfa.finals)) == (2, 1)


def test_parse_shapes():
    ast = parse_pattern("AD(A|D){2}AD", "ABCD")
    assert isinstance(ast, Concat)
    assert ast.items[2] == Repeat(Alternation((Literal("A"), Literal("D"))), 2, 2)
    ast = parse_pattern("TTGACAN{16,18}ATATAAT", "ACGT", {"N": "ACGT"})
    rep = ast.items[6]
    assert rep.min == 16 and rep.max == 18 and isinstance(rep.node, CharClass)


@pytest.mark.parametrize("text, pos", [("AD(", 3), ("A{3", 3), ("*A", 0), ("AX", 1), ("A{3,2}", 1)])
def test_syntax_errors(text, pos):
    with pytest.raises(PatternSyntaxError) as e:
        parse_pattern(text, "ABCD")
    assert e.value.position == pos


def test_empty_pattern_and_language():
    with pytest.raises(PatternSyntaxError):
        parse_pattern("", "AB")
    with pytest.raises(EmptyLanguageError):
        build_min_dfa(CharClass(frozenset()), "AB")


def test_class_collisions():
    with pytest.raises(ValueError):
        parse_pattern("A", "AB", {"A": "AB"})
    with pytest.raises(ValueError):
        parse_pattern("N", "AB", {"N": "ABC"})


def _distinguishable_pairs(dfa):
    """Pairwise table-filling; returns True if every pair of states is distinguishable."""
    n = dfa.n_states
    diff = {(p, q) for p in range(n) for q in range(p) if (p in dfa.finals) != (q in dfa.finals)}
    changed = True
    while changed:
        changed = False
        for p in range(n):
            for q in range(p):
                if (p, q) in diff:
                    continue
                for k in range(len(dfa.alphabet)):
                    a, b = dfa.delta[p][k], dfa.delta[q][k]
                    if a != b and (max(a, b), min(a, b)) in diff:
                        diff.add((p, q))
                        changed = True
                        break
    return len(diff) == n * (n - 1) // 2


def _reachable(dfa):
    seen, stack = {dfa.start}, [dfa.start]
    while stack:
        for t in dfa.delta[stack.pop()]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return len(seen) == dfa.n_states


@pytest.mark.parametrize("pattern", ["ADAD", "AD(A|D){2}AD", "AD(A|D){5}AD", "A(B|C)*D", "[AB]{2,3}C"])
def test_minimality(pattern):
    dfa = compile_pattern(pattern, "ABCD")
    assert _reachable(dfa)
    assert _distinguishable_pairs(dfa)


def _patterns():
    leaf = st.sampled_from(["A", "B", "."])
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda t: t[0] + t[1]),
            st.tuples(inner, inner).map(lambda t: f"({t[0]}|{t[1]})"),
            st.tuples(inner, st.integers(1, 3)).map(lambda t: f"({t[0]}){{{t[1]}}}"),
            st.tuples(inner, st.integers(0, 2), st.integers(0, 2)).map(
                lambda t: f"({t[0]}){{{t[1]},{t[1] + t[2]}}}"),
        ),
        max_leaves=6,
    )


@given(_patterns(), st.text(alphabet="AB", max_size=12))
def test_scan_matches_regex(pattern, word):
    try:
        dfa = compile_pattern(pattern, "AB")
    except EmptyLanguageError:
        return
    assert scan(dfa, word) == end_positions(pattern.replace(".", "[AB]"), word)


def test_order_zero_is_identity():
    dfa = compile_pattern("ADAD", "ABCD")
    assert make_order_m(dfa, 0).dfa is dfa


@pytest.mark.parametrize("pattern, alphabet, m", [(w_k(1), "AB", 1), (w_k(1), "AB", 2), ("ADAD", "ABCD", 1),
                                                   ("CGCACCC", "ACGT", 2), ("A(C|G)T", "ACGT", 3)])
def test_order_m_contexts(pattern, alphabet, m):
    om = make_order_m(compile_pattern(pattern, alphabet), m)
    assert is_non_m_ambiguous(om)
    # independent walk: every word of length m..m+3 lands on a state labelled by its suffix
    dfa = om.dfa
    for n in range(m, m + 4):
        for word in product(alphabet, repeat=n):
            word = "".join(word)
            assert om.backmap[dfa.run(word)] == word[-m:]


def test_order_m_preserves_language():
    base = compile_pattern(w_k(1), "AB")
    om = make_order_m(base, 2).dfa
    for n in range(0, 11):
        for word in product("AB", repeat=n):
            word = "".join(word)
            assert base.accepts(word) == om.accepts(word)


@pytest.mark.parametrize("pattern, R", [("CGCACCC", 21), ("TCCGTGGA", 22)])
def test_order_two_chain_sizes(pattern, R):
    om = make_order_m(compile_pattern(pattern, "ACGT"), 2)
    assert len(om.chain_states) == R


def test_dot_roundtrip():
    dfa = compile_pattern("AD(A|D){2}AD", "ABCD")
    text = to_dot(dfa)
    assert "doublecircle" in text
    assert parse_dot(text) == dfa
