"""Independent ground truth: exhaustive enumeration and Monte Carlo sampling.

Neither routine touches the chain embedding; both run the pattern DFA
directly on sampled or enumerated sequences.
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from gmpy2 import mpq

from .automaton import Dfa
from .markov import MarkovModel

SHARD_SIZE = 10_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    distribution: dict
    samples: int
    exact: bool
    stderr: dict = field(default_factory=dict)

    def probability(self, n: int):
        return self.distribution.get(n, mpq(0) if self.exact else 0.0)


def _count(dfa: Dfa, word: str, skip: int) -> int:
    q = dfa.start
    n = 0
    for i, a in enumerate(word, start=1):
        q = dfa.step(q, a)
        if i > skip and q in dfa.finals:
            n += 1
    return n


def exhaustive(dfa: Dfa, model: MarkovModel, length: int, budget: int = 10**7) -> OracleResult:
    """Exact distribution of the occurrence count by enumerating A^length.

    Occurrences ending inside the first ``m`` letters are ignored.
    """
    k = len(model.alphabet)
    if k**length > budget:
        raise BudgetExceeded(f"{k}^{length} sequences exceed the budget of {budget}")
    dist: dict = defaultdict(lambda: mpq(0))
    for letters in product(model.alphabet, repeat=length):
        word = "".join(letters)
        p = model.word_probability(word)
        if p:
            dist[_count(dfa, word, model.m)] += p
    return OracleResult(dict(sorted(dist.items())), k**length, True)


def _thresholds(probs) -> np.ndarray:
    """uint64 cut points: letter j is drawn when t[j-1] <= U < t[j], U uniform on [0, 2^64)."""
    cum = mpq(0)
    out = []
    for p in probs[:-1]:
        cum += p
        t = -((-cum.numerator << 64) // cum.denominator)  # ceil(cum * 2^64)
        out.append(min(t, 2**64 - 1) if cum < 1 else 2**64 - 1)
    return np.array(out, dtype=np.uint64)


def _draw(thr: np.ndarray, U: np.ndarray) -> np.ndarray:
    # number of cut points <= U
    return (U[:, None] >= thr[None, :]).sum(axis=1) if thr.ndim == 1 else (U[:, None] >= thr).sum(axis=1)


def _simulate_shard(dfa, model, length, n, seed_seq):
    """Samples ``n`` sequences with the PCG64 generator; returns counts."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    alphabet = model.alphabet
    m = model.m
    delta = np.array(dfa.delta, dtype=np.intp)
    final = np.zeros(dfa.n_states, dtype=bool)
    final[list(dfa.finals)] = True
    k = len(alphabet)
    if m == 0:
        ctx_ids = {"": 0}
    else:
        ctx_ids = {"".join(c): i for i, c in enumerate(product(alphabet, repeat=m))}
    thr = np.full((len(ctx_ids), max(k - 1, 0)), 2**64 - 1, dtype=np.uint64)
    defined = np.zeros(len(ctx_ids), dtype=bool)
    for ctx, i in ctx_ids.items():
        if model.has_context(ctx):
            thr[i] = _thresholds([model.transition(ctx, b) for b in alphabet])
            defined[i] = True
    states = np.full(n, dfa.start, dtype=np.intp)
    counts = np.zeros(n, dtype=np.int64)
    if m:
        ctxs = sorted(model.mu)
        first = _draw(_thresholds([model.mu[c] for c in ctxs]), rng.integers(0, 2**64 - 1, size=n, dtype=np.uint64))
        ctx = np.empty(n, dtype=np.intp)
        for j, c in enumerate(ctxs):
            sel = first == j
            ctx[sel] = ctx_ids[c]
            q = dfa.start
            for a in c:
                q = dfa.step(q, a)
            states[sel] = q
        weights = k ** np.arange(m - 1, -1, -1)
    else:
        ctx = np.zeros(n, dtype=np.intp)
    for _ in range(length - m):
        if not defined[ctx].all():
            raise ValueError("simulation reached a context without transition probabilities")
        U = rng.integers(0, 2**64 - 1, size=n, dtype=np.uint64)
        letters = (U[:, None] >= thr[ctx]).sum(axis=1)
        states = delta[states, letters]
        counts += final[states]
        if m:
            # drop the oldest letter, append the new one
            ctx = (ctx % weights[0]) * k + letters if m > 1 else letters
    return counts


def monte_carlo(dfa: Dfa, model: MarkovModel, length: int, samples: int, seed: int = 0, jobs: int = 1) -> OracleResult:
    """Empirical count distribution from ``samples`` simulated sequences.

    Work is split into fixed-size shards seeded from ``SeedSequence(seed)``;
    the output depends only on ``seed`` and ``samples``, never on ``jobs``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    sizes = [SHARD_SIZE] * (samples // SHARD_SIZE)
    if samples % SHARD_SIZE:
        sizes.append(samples % SHARD_SIZE)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        parts = list(pool.map(lambda a: _simulate_shard(dfa, model, length, *a), zip(sizes, seeds)))
    counts = np.concatenate(parts)
    values, freq = np.unique(counts, return_counts=True)
    dist, err = {}, {}
    for v, f in zip(values.tolist(), freq.tolist()):
        p = f / samples
        dist[v] = p
        err[v] = math.sqrt(p * (1 - p) / samples)
    return OracleResult(dist, samples, False, err)
