"""Count distributions by recursion on the embedded chain.

``full_distribution`` iterates ``(P + yQ)^i v`` modulo ``y^(nmax+1)``.
``partial_distribution`` uses the spectral normalisation ``P/λ`` and the
backward differences ``D_k^j(i)`` of ``F_k(i) = [y^k] (P/λ + y Q/λ)^i v``:
once ``D_n^n`` has stabilised at rank ``α``, each ``F_k(N)`` is extrapolated
with Newton's backward-difference series anchored at ``α' = α - n``::

    F_k(N) ≈ sum_{j=0..k} C(N - α', j) D_k^j(α' + j)

so that ``P(N_ℓ = k) ≈ λ^N u F_k(N)`` with ``N = ℓ - m``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpfr, mpq

from .arith import DEFAULT_PRECISION, ext_context
from .embedding import EmbeddedChain, PolyStepper, SparseMatrix

DEFAULT_ETA = 1e-15
POWER_ITER_CAP = 10**6


class SpectralError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass
class CountDistribution:
    """``probs[n] = P(N_length = n)`` for ``n = 0..len(probs)-1``."""

    length: int
    m: int
    probs: list
    method: str
    meta: dict = field(default_factory=dict)

    def __getitem__(self, n):
        return self.probs[n]

    def __len__(self):
        return len(self.probs)

    @property
    def exact(self) -> bool:
        return all(isinstance(p, type(mpq(0))) for p in self.probs)

    def as_floats(self) -> list[float]:
        return [float(p) for p in self.probs]


# --------------------------------------------------------------------------
# Full recursion


def full_distribution(chain: EmbeddedChain, length: int, nmax: int, mode: str = "float",
                      precision: int = DEFAULT_PRECISION) -> CountDistribution:
    """``P(N_length = n)`` for ``n <= nmax`` by iterating the sparse chain.

    ``mode='exact'`` works over the rationals, ``'float'`` in mpfr with
    ``precision`` mantissa bits.
    """
    if length < chain.m:
        raise ValueError(f"length {length} is shorter than the model order {chain.m}")
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    t0 = time.perf_counter()
    with ext_context(precision):
        conv = (lambda x: mpq(x)) if mode == "exact" else (lambda x: mpfr(x))
        stepper = PolyStepper(chain.P, chain.Q, conv)
        X = np.empty((chain.R, 1), dtype=object)
        X[:, 0] = conv(1)
        for _ in range(length - chain.m):
            X = stepper.step(X, grow=X.shape[1] < nmax + 1)
        u = np.array([conv(x) for x in chain.u], dtype=object)
        g = list(u.dot(X))
    zero = conv(0)
    probs = (g + [zero] * (nmax + 1))[: nmax + 1]
    return CountDistribution(length, chain.m, probs, f"full-{mode}",
                             {"precision": precision if mode == "float" else None,
                              "time": time.perf_counter() - t0})


# --------------------------------------------------------------------------
# Spectral precomputation


@dataclass
class SpectralData:
    lam: object  # mpfr
    iterations: int
    eps: object
    vector: list = field(repr=False, default_factory=list)


def _matvec(slots, x):
    acc = None
    for tgt, wt in slots:
        term = wt * x[tgt]
        acc = term if acc is None else acc + term
    return acc


def _slots(M: SparseMatrix, conv, scale=None):
    """Padded gather representation of a sparse matrix (see PolyStepper)."""
    R = len(M.rows)
    K = max((len(r) for r in M.rows), default=0)
    out = []
    for k in range(K):
        tgt = np.zeros(R, dtype=np.intp)
        wt = np.empty(R, dtype=object)
        for p, row in enumerate(M.rows):
            if k < len(row):
                tgt[p] = row[k][0]
                w = conv(row[k][1])
                wt[p] = w / scale if scale is not None else w
            else:
                wt[p] = conv(0)
        out.append((tgt, wt))
    return out


def dominant_eigenvalue(P: SparseMatrix, eps=None, precision: int = DEFAULT_PRECISION,
                        max_iter: int = POWER_ITER_CAP) -> SpectralData:
    """Power method on ``P`` started from the all-ones vector.

    Convergence uses the Collatz-Wielandt bracket: the min and max of the
    pointwise ratios ``(P x)_p / x_p`` over the support of ``x`` enclose the
    Perron root and must agree to relative ``eps``.
    """
    with ext_context(precision):
        eps = mpfr(2) ** (-(precision // 2)) if eps is None else mpfr(eps)
        slots = _slots(P, mpfr)
        if not slots:
            raise SpectralError("P is the zero matrix; use full recursion")
        x = np.array([mpfr(1)] * len(P.rows), dtype=object)
        for it in range(1, max_iter + 1):
            y = _matvec(slots, x)
            support = [p for p in range(len(x)) if x[p] != 0]
            ratios = [y[p] / x[p] for p in support]
            hi, lo = max(ratios), min(ratios)
            if hi == 0:
                raise SpectralError("P is nilpotent on the chain; use full recursion")
            x = y / hi
            if hi - lo <= eps * hi:
                return SpectralData(hi, it, eps, list(x))
    raise SpectralError(
        f"power method did not converge in {max_iter} iterations (P reducible or periodic); "
        "use full recursion")


# --------------------------------------------------------------------------
# Partial recursion


def partial_distribution(chain: EmbeddedChain, length: int, n: int, eta: float = DEFAULT_ETA,
                         eps=None, precision: int = DEFAULT_PRECISION,
                         spectral: SpectralData | None = None, lam=None,
                         max_iter: int = 10**7) -> CountDistribution:
    """``P(N_length = k)`` for ``k <= n`` with target relative error ``eta``.

    ``spectral`` may be reused across calls on the same chain.  ``lam``
    overrides the normalising constant (any value close to the Perron root
    gives the same result up to the extrapolation error).
    """
    if length < chain.m:
        raise ValueError(f"length {length} is shorter than the model order {chain.m}")
    N = length - chain.m
    t0 = time.perf_counter()
    if spectral is None and lam is None:
        spectral = dominant_eigenvalue(chain.P, eps, precision)
    t1 = time.perf_counter()
    with ext_context(precision):
        lam = mpfr(lam) if lam is not None else spectral.lam
        Ps = _slots(chain.P, mpfr, lam)
        Qs = _slots(chain.Q, mpfr, lam)
        R = chain.R
        u = np.array([mpfr(x) for x in chain.u], dtype=object)
        support = [p for p in range(R) if chain.u[p] != 0]
        eta_f = mpfr(eta)
        zero = np.array([mpfr(0)] * R, dtype=object)

        def advance(D, subtract):
            # D[k] <- P~ D[k] + Q~ D[k-1] (- D[k]), k descending
            for k in range(n, -1, -1):
                nxt = _matvec(Ps, D[k]) if Ps else zero.copy()
                if k and Qs:
                    nxt = nxt + _matvec(Qs, D[k - 1])
                D[k] = nxt - D[k] if subtract else nxt

        # warm-up: D_k^i(i) for i <= n
        D = [np.array([mpfr(1)] * R, dtype=object)] + [zero.copy() for _ in range(n)]
        for _ in range(min(n, N)):
            advance(D, subtract=True)
        alpha = None
        i = n
        while i < N:
            if i - n >= max_iter:
                raise ConvergenceError(f"D_n^n did not stabilise within {max_iter} iterations")
            prev = D[n]
            advance(D, subtract=False)
            i += 1
            cur = D[n]
            if all(cur[p] != 0 and abs(cur[p] - prev[p]) <= eta_f * abs(cur[p]) for p in support):
                alpha = i
                break
        if alpha is None:
            out = full_distribution(chain, length, n, "float", precision)
            out.method = "partial->full"
            out.meta.update(fallback=True, reason="no convergence before the sequence end")
            return out
        base = alpha - n
        # D_k^0(base) for all k
        D = [np.array([mpfr(1)] * R, dtype=object)] + [zero.copy() for _ in range(n)]
        for _ in range(base):
            advance(D, subtract=False)
        acc = [u.dot(D[k]) for k in range(n + 1)]
        C = mpfr(1)
        for j in range(1, n + 1):
            advance(D, subtract=True)  # D[k] = D_k^j(base + j)
            C = C * (N - base - j + 1) / j
            for k in range(j, n + 1):
                acc[k] += C * u.dot(D[k])
        scale = lam ** N
        probs = [scale * a for a in acc]
    t2 = time.perf_counter()
    return CountDistribution(length, chain.m, probs, "partial", {
        "alpha": alpha, "eta": eta, "precision": precision,
        "lambda": lam, "one_minus_lambda": 1 - lam,
        "power_iterations": spectral.iterations if spectral else None,
        "time_spectral": t1 - t0, "time_recursion": t2 - t1,
    })
