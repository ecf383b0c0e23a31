"""Minimal DFA sizes for the family AB A^k AA A^k AB over {A, B}, and a DOT export of the smallest one."""

from pathlib import Path

from patdist import compile_pattern, scan
from patdist.automaton import to_dot

for k in range(1, 8):
    dfa = compile_pattern(f"AB.{{{k}}}AA.{{{k}}}AB", "AB")
    print(f"k={k}  R={dfa.n_states:5d}  F={len(dfa.finals):4d}  bound 2^(7+2k)={2 ** (7 + 2 * k)}")

w1 = compile_pattern("AB.AA.AB", "AB")
print("occurrences in ABAAABBAAAABBAABABAB end at", scan(w1, "ABAAABBAAAABBAABABAB"))
Path("w1.dot").write_text(to_dot(w1, "W1"))
print("wrote w1.dot (render with: dot -Tpng w1.dot -o w1.png)")
