"""End to end on a synthetic genome: fit an order-2 model, then count a motif.

Runs the same pipeline as ``patdist run --fit``, through the Python API.
"""

import numpy as np

from patdist import compile_pattern, embed, find_fraction, fit_mle, make_order_m
from patdist.cli import format_sci
from patdist.lifting import bivariate_lift
from patdist.recursion import partial_distribution

rng = np.random.default_rng(7)
n = 200_000
letters = rng.choice(4, size=n, p=[0.3, 0.2, 0.2, 0.3])
# a little order-2 structure: after "CG", G is rare
seq = list("ACGT"[c] for c in letters)
for i in range(2, n):
    if seq[i - 2] == "C" and seq[i - 1] == "G" and seq[i] == "G" and rng.random() < 0.8:
        seq[i] = "A"
seq = "".join(seq)

model = fit_mle(seq, 2, "ACGT")
dfa = compile_pattern("TATA(A|T)A", "ACGT")
chain = embed(make_order_m(dfa, 2), model)
print(f"order-2 automaton: {chain.R} chain states, {len(chain.finals)} final")

length = 10**6
part = partial_distribution(chain, length, 6)
print(f"partial recursion: alpha={part.meta['alpha']}, 1-lambda={format_sci(part.meta['one_minus_lambda'], 3)}")
frac = find_fraction(chain, seed=1)
lift = bivariate_lift(frac, length, 6, mode="float")
for k in range(7):
    print(f"P(N = {k}) = {format_sci(part.probs[k])}   lifting {format_sci(lift.probs[k])}")
