"""P(N_l = 10) for ADAD under uniform i.i.d. letters, by every engine.

Full recursion is the reference; partial recursion needs the spectral gap,
lifting needs the bivariate generating function, which is reconstructed once
and reused for every length.
"""

import sys
import time

from patdist import compile_pattern, embed, find_fraction, make_order_m, uniform_iid
from patdist.cli import format_sci
from patdist.lifting import bivariate_lift
from patdist.recursion import full_distribution, partial_distribution

lengths = [int(a) for a in sys.argv[1:]] or [2000, 20000]
chain = embed(make_order_m(compile_pattern("ADAD", "ABCD"), 0), uniform_iid("ABCD"))

t = time.perf_counter()
frac = find_fraction(chain, seed=0)
print(f"G(y,z) degrees {frac.degrees[0]}/{frac.degrees[1]} in {time.perf_counter() - t:.2f}s")

for length in lengths:
    row = []
    for name, run in (("full", lambda: full_distribution(chain, length, 10)),
                      ("partial", lambda: partial_distribution(chain, length, 10)),
                      ("lifting", lambda: bivariate_lift(frac, length, 10, mode="exact")),
                      ("fiduccia", lambda: bivariate_lift(frac, length, 10, method="fiduccia"))):
        t = time.perf_counter()
        p = run().probs[10]
        row.append(f"{name} {format_sci(p)} ({time.perf_counter() - t:.2f}s)")
    print(f"l={length}: " + "  ".join(row))
