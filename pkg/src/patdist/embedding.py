"""Markov chain embedding of pattern counting.

The chain lives on the automaton states reachable after the first ``m``
letters; ``T = P + Q`` where ``Q`` holds the transitions entering a final
state.  All products are taken from the right, ``(P + yQ) x``, so a sparse
step is a row-wise gather.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq

from .arith import DEFAULT_PRECISION, ext_context, to_ext
from .automaton import OrderMDfa
from .markov import MarkovModel, ModelError


class EmbeddingError(ModelError):
    pass


class SparseMatrix:
    """R x R matrix stored row-wise as ``rows[p] = ((col, value), ...)``."""

    __slots__ = ("rows", "n")

    def __init__(self, rows, n: int | None = None):
        self.rows = tuple(tuple(sorted(r)) for r in rows)
        self.n = len(self.rows) if n is None else n

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def __getitem__(self, pq):
        p, q = pq
        for col, v in self.rows[p]:
            if col == q:
                return v
        return mpq(0)

    def matvec(self, x):
        return [sum((v * x[c] for c, v in row), x[0] * 0) for row in self.rows]

    def to_dense(self):
        out = [[mpq(0)] * self.n for _ in range(len(self.rows))]
        for p, row in enumerate(self.rows):
            for c, v in row:
                out[p][c] = v
        return out

    def map(self, fn) -> "SparseMatrix":
        return SparseMatrix([[(c, fn(v)) for c, v in row] for row in self.rows], self.n)


@dataclass(frozen=True)
class EmbeddedChain:
    """Starting vector ``u`` and the split transition matrix ``P + Q``.

    ``states[i]`` is the automaton state behind chain index ``i``; ``v`` is
    the implicit all-ones vector.
    """

    u: tuple
    P: SparseMatrix
    Q: SparseMatrix
    m: int
    states: tuple
    finals: frozenset  # chain indices that are final

    @property
    def R(self) -> int:
        return len(self.u)

    @property
    def nnz(self) -> int:
        return self.P.nnz + self.Q.nnz

    def max_height_bits(self) -> int:
        vals = [x for x in self.u if x] + [v for M in (self.P, self.Q) for r in M.rows for _, v in r]
        return max(max(int(x.numerator).bit_length(), int(x.denominator).bit_length()) for x in vals)


def embed(autom: OrderMDfa, model: MarkovModel) -> EmbeddedChain:
    """Build ``u``, ``P``, ``Q`` for the pattern automaton under ``model``."""
    dfa, m = autom.dfa, autom.m
    if m != model.m:
        raise EmbeddingError(f"automaton order {m} differs from model order {model.m}")
    if tuple(dfa.alphabet) != tuple(model.alphabet):
        raise EmbeddingError("automaton and model alphabets differ")
    if m == 0:
        init = {dfa.start: mpq(1)}
    else:
        init = {}
        for ctx, p in model.mu.items():
            q = dfa.run(ctx)
            init[q] = init.get(q, 0) + p
        if not init:
            raise EmbeddingError("initial distribution puts no mass on any automaton context")
    # positive-probability reachability from the support of u
    order = sorted(init)
    seen = set(order)
    rows_raw = {}
    missing = []
    i = 0
    while i < len(order):
        q = order[i]
        i += 1
        ctx = autom.backmap[q] if m else ""
        if not model.has_context(ctx):
            missing.append(ctx)
            continue
        row: dict = {}
        for k, b in enumerate(dfa.alphabet):
            p = model.pi.get((ctx, b), 0)
            if p:
                t = dfa.delta[q][k]
                row[t] = row.get(t, 0) + p
                if t not in seen:
                    seen.add(t)
                    order.append(t)
        rows_raw[q] = row
    if missing:
        raise EmbeddingError(f"contexts reachable in the chain have no transitions: {sorted(set(missing))}")
    states = tuple(sorted(seen))
    idx = {q: i for i, q in enumerate(states)}
    finals = frozenset(idx[q] for q in states if q in dfa.finals)
    P_rows, Q_rows = [], []
    for q in states:
        pr, qr = [], []
        for t, p in rows_raw[q].items():
            (qr if t in dfa.finals else pr).append((idx[t], mpq(p)))
        P_rows.append(pr)
        Q_rows.append(qr)
    u = tuple(mpq(init.get(q, 0)) for q in states)
    R = len(states)
    return EmbeddedChain(u, SparseMatrix(P_rows, R), SparseMatrix(Q_rows, R), m, states, finals)


# --------------------------------------------------------------------------
# Vectorized sparse steps on vectors of y-polynomials


class PolyStepper:
    """Computes ``(P + yQ) X`` for an R x w object array of y-coefficients.

    ``convert`` maps exact entries to the working scalar type (identity for
    exact arithmetic, rounding to mpfr for float mode).
    """

    def __init__(self, P: SparseMatrix, Q: SparseMatrix, convert=lambda x: x):
        self.R = len(P.rows)
        self.P = self._slots(P, convert)
        self.Q = self._slots(Q, convert)

    def _slots(self, M: SparseMatrix, convert):
        K = max((len(r) for r in M.rows), default=0)
        slots = []
        zero = convert(mpq(0))
        for k in range(K):
            tgt = np.zeros(self.R, dtype=np.intp)
            wt = np.empty((self.R, 1), dtype=object)
            for p, row in enumerate(M.rows):
                if k < len(row):
                    tgt[p] = row[k][0]
                    wt[p, 0] = convert(row[k][1])
                else:
                    wt[p, 0] = zero
            slots.append((tgt, wt))
        return slots

    @staticmethod
    def _apply(slots, X):
        acc = None
        for tgt, wt in slots:
            term = wt * X[tgt]
            acc = term if acc is None else acc + term
        return acc

    def step(self, X, grow: bool = False):
        """One product; with ``grow`` the y-degree increases by one, else truncates."""
        R, w = X.shape
        width = w + 1 if grow else w
        out = np.empty((R, width), dtype=object)
        zero = X[0, 0] * 0
        out[...] = zero
        PX = self._apply(self.P, X)
        if PX is not None:
            out[:, :w] = PX
        if self.Q:
            QX = self._apply(self.Q, X[:, : width - 1])
            out[:, 1:] = out[:, 1:] + QX
        return out


def series_prefix(chain: EmbeddedChain, count: int, ytrunc: int | None = None) -> list[list]:
    """Exact ``g_i(y) = u (P + yQ)^i v`` for ``i = 0..count`` (coefficient lists).

    ``g_i`` is the pgf of the count after ``m + i`` letters.  With ``ytrunc``
    the polynomials are reduced modulo ``y^(ytrunc + 1)``.
    """
    stepper = PolyStepper(chain.P, chain.Q)
    u = np.array(chain.u, dtype=object)
    X = np.empty((chain.R, 1), dtype=object)
    X[:, 0] = mpq(1)
    out = []
    for i in range(count + 1):
        if i:
            grow = ytrunc is None or X.shape[1] < ytrunc + 1
            X = stepper.step(X, grow=grow)
        g = list(u.dot(X))
        while g and g[-1] == 0:
            g.pop()
        out.append(g)
    return out


def distribution_identity_check(chain: EmbeddedChain, length: int, dist, precision: int = DEFAULT_PRECISION) -> bool:
    """Check that a complete distribution (n = 0..length-m) has total mass 1."""
    probs = list(dist.probs if hasattr(dist, "probs") else dist)
    if len(probs) < length - chain.m + 1:
        return False
    if all(isinstance(p, type(mpq(0))) for p in probs):
        return sum(probs) == 1
    with ext_context(precision):
        total = sum(to_ext(p, precision) for p in probs)
        return abs(total - 1) <= to_ext(2, precision) ** (-(precision // 2))
