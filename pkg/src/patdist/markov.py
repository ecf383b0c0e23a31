"""Homogeneous order-m Markov models with exact rational parameters."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class MarkovModel:
    """Order-m model.

    ``mu`` maps m-letter contexts to their initial probability (empty for
    m = 0); ``pi`` maps ``(context, letter)`` to transition probabilities.
    Contexts without any entry in ``pi`` are simply undefined.
    """

    alphabet: tuple
    m: int
    mu: Mapping[str, mpq] = field(default_factory=dict)
    pi: Mapping[tuple, mpq] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "mu", {k: mpq(v) for k, v in self.mu.items() if v != 0})
        object.__setattr__(self, "pi", {k: mpq(v) for k, v in self.pi.items()})
        self.validate()

    def validate(self):
        letters = set(self.alphabet)
        if len(letters) != len(self.alphabet) or not letters:
            raise ModelError("alphabet must be a nonempty list of distinct letters")
        if self.m < 0:
            raise ModelError("order must be non-negative")
        rows: dict = {}
        for (ctx, b), p in self.pi.items():
            if len(ctx) != self.m or not set(ctx) <= letters or b not in letters:
                raise ModelError(f"bad transition entry ({ctx!r}, {b!r})")
            if not 0 <= p <= 1:
                raise ModelError(f"probability {p} for ({ctx!r}, {b!r}) outside [0, 1]")
            rows[ctx] = rows.get(ctx, 0) + p
        bad = {ctx: s for ctx, s in rows.items() if s != 1}
        if bad:
            ctx, s = next(iter(bad.items()))
            raise ModelError(f"transition row {ctx!r} sums to {s}, not 1")
        if self.m == 0:
            if self.mu:
                raise ModelError("an order 0 model has no initial distribution")
        else:
            for ctx, p in self.mu.items():
                if len(ctx) != self.m or not set(ctx) <= letters or not 0 <= p <= 1:
                    raise ModelError(f"bad initial entry {ctx!r}: {p}")
            if sum(self.mu.values()) != 1:
                raise ModelError("initial distribution does not sum to 1")

    @property
    def contexts(self) -> list[str]:
        return sorted({ctx for ctx, _ in self.pi}, key=self._ctx_key)

    def _ctx_key(self, ctx):
        return [self.alphabet.index(a) for a in ctx]

    def has_context(self, ctx: str) -> bool:
        return any((ctx, b) in self.pi for b in self.alphabet)

    def transition(self, ctx: str, b: str) -> mpq:
        try:
            return self.pi[(ctx, b)]
        except KeyError:
            if self.has_context(ctx):
                return mpq(0)
            raise ModelError(f"context {ctx!r} has no transition probabilities") from None

    def word_probability(self, word: str) -> mpq:
        """Exact probability that the sequence starts with ``word`` (len >= m)."""
        m = self.m
        if len(word) < m:
            raise ValueError("word shorter than the model order")
        p = self.mu.get(word[:m], mpq(0)) if m else mpq(1)
        for i in range(m, len(word)):
            if p == 0:
                break
            p *= self.transition(word[i - m:i], word[i])
        return p

    def with_mu(self, mu: Mapping[str, object]) -> "MarkovModel":
        return MarkovModel(self.alphabet, self.m, dict(mu), dict(self.pi))


def uniform_iid(alphabet: Sequence[str]) -> MarkovModel:
    alphabet = tuple(alphabet)
    if not alphabet:
        raise ModelError("empty alphabet")
    p = mpq(1, len(alphabet))
    return MarkovModel(alphabet, 0, {}, {("", b): p for b in alphabet})


def from_counts(counts: Mapping[str, int], alphabet: Sequence[str], m: int, mu=None) -> MarkovModel:
    """MLE from (m+1)-word counts: pi(c, b) = N(cb) / sum_b' N(cb')."""
    totals: Counter = Counter()
    for w, n in counts.items():
        if len(w) != m + 1:
            raise ModelError(f"count key {w!r} is not an (m+1)-word")
        totals[w[:m]] += n
    pi = {}
    for w, n in counts.items():
        if totals[w[:m]] == 0:
            continue
        if n:
            pi[(w[:m], w[m])] = mpq(n, totals[w[:m]])
    return MarkovModel(tuple(alphabet), m, dict(mu or {}), pi)


def fit_mle(sequence: str, m: int, alphabet: Sequence[str] | None = None) -> MarkovModel:
    """Maximum likelihood order-m model; mu is a point mass on the first m letters."""
    if len(sequence) < m + 1:
        raise ModelError(f"sequence of length {len(sequence)} is too short for order {m}")
    if alphabet is None:
        alphabet = sorted(set(sequence))
    counts = Counter(sequence[i:i + m + 1] for i in range(len(sequence) - m))
    mu = {sequence[:m]: 1} if m else {}
    return from_counts(counts, alphabet, m, mu)


def stationary_mu(model: MarkovModel) -> dict:
    """Exact stationary distribution over the m-letter contexts.

    Solves ``x T = x, sum x = 1`` over the rationals for the context chain;
    raises ModelError when the solution is not unique.
    """
    m = model.m
    if m == 0:
        return {}
    ctxs = model.contexts
    idx = {c: i for i, c in enumerate(ctxs)}
    n = len(ctxs)
    # rows: (T^t - I) x = 0 with the last equation replaced by sum x = 1
    mat = [[mpq(0)] * (n + 1) for _ in range(n)]
    for c in ctxs:
        for b in model.alphabet:
            p = model.pi.get((c, b), 0)
            if p:
                nxt = (c + b)[1:]
                if nxt not in idx:
                    raise ModelError(f"context {nxt!r} is reachable but undefined")
                mat[idx[nxt]][idx[c]] += p
    for i in range(n):
        mat[i][i] -= 1
    mat[n - 1] = [mpq(1)] * n + [mpq(1)]
    # Gauss-Jordan
    for col in range(n):
        piv = next((r for r in range(col, n) if mat[r][col] != 0), None)
        if piv is None:
            raise ModelError("stationary distribution is not unique")
        mat[col], mat[piv] = mat[piv], mat[col]
        inv = 1 / mat[col][col]
        mat[col] = [v * inv for v in mat[col]]
        for r in range(n):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[col])]
    return {c: mat[idx[c]][n] for c in ctxs if mat[idx[c]][n] != 0}


# --------------------------------------------------------------------------
# Files


def dumps_model(model: MarkovModel) -> str:
    """Text format: ``alphabet``/``order`` headers, ``mu`` lines, transition lines."""
    lines = ["# patdist markov model", f"alphabet {''.join(model.alphabet)}", f"order {model.m}"]
    for ctx in sorted(model.mu, key=model._ctx_key):
        lines.append(f"mu {ctx} {_frac(model.mu[ctx])}")
    for ctx in model.contexts:
        for b in model.alphabet:
            if (ctx, b) in model.pi:
                lines.append(f"{ctx or '-'} {b} {_frac(model.pi[(ctx, b)])}")
    return "\n".join(lines) + "\n"


def save_model(model: MarkovModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def _frac(q: mpq) -> str:
    return f"{q.numerator}/{q.denominator}"


def load_model(path) -> MarkovModel:
    alphabet = None
    m = None
    mu, pi = {}, {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "alphabet":
                alphabet = tuple(parts[1]) if len(parts) == 2 else tuple(parts[1:])
            elif parts[0] == "order":
                m = int(parts[1])
            elif parts[0] == "mu":
                mu[parts[1]] = mpq(parts[2])
            else:
                ctx, b, p = parts
                pi[("" if ctx == "-" else ctx, b)] = mpq(p)
        except (IndexError, ValueError) as exc:
            raise ModelError(f"{path}:{lineno}: malformed line {raw!r}") from exc
    if alphabet is None or m is None:
        raise ModelError(f"{path}: missing alphabet or order header")
    return MarkovModel(alphabet, m, mu, pi)


def read_fasta(path, alphabet: Iterable[str] | None = None, skip_invalid: bool = False) -> str:
    """Concatenate all records of a FASTA-style file (headers start with '>')."""
    letters = set(alphabet) if alphabet is not None else None
    chunks = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith(">") or line.startswith(";"):
                continue
            s = "".join(line.split()).upper()
            if letters is not None:
                bad = set(s) - letters
                if bad:
                    if not skip_invalid:
                        raise ModelError(f"{path}:{lineno}: letters outside the alphabet: {sorted(bad)}")
                    s = "".join(c for c in s if c in letters)
            chunks.append(s)
    return "".join(chunks)
