"""Coefficient chunks of a rational series B/A far out in the expansion.

Two engines: high-order lifting (residues ``Γ`` at orders ``2^e - d``
obtained by repeated doubling, then a logarithmic ladder of residue and
inverse-chunk calls) and Fiduccia's modular exponentiation against the
reversed denominator.  Both are written over an abstract coefficient ring
so the same code runs on rationals, mpfr floats or truncated polynomials
in ``y``.

Conventions: polynomials and windows are Python lists, low order first.
A *window* ``(lo, coeffs)`` holds the coefficients of orders
``lo .. lo + len(coeffs) - 1``; orders below zero are zero by definition.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpfr, mpq

from .arith import DEFAULT_PRECISION, TruncPoly, ext_context


class LiftingError(ArithmeticError):
    pass


class OrderRangeError(LiftingError, IndexError):
    pass


@dataclass(frozen=True)
class Ring:
    """Minimal ring interface: additive/multiplicative units and inversion."""

    zero: object
    one: object

    def inv(self, a):
        return a.inverse() if isinstance(a, TruncPoly) else 1 / a


QQ_RING = Ring(mpq(0), mpq(1))


def truncpoly_ring(order: int, conv=mpq) -> Ring:
    return Ring(TruncPoly.constant(conv(0), order), TruncPoly.constant(conv(1), order))


@dataclass(frozen=True)
class Chunk:
    """Coefficients ``g_alpha .. g_beta`` of a series."""

    alpha: int
    beta: int
    coeffs: tuple

    def __post_init__(self):
        if self.beta < self.alpha:
            raise ValueError("empty chunk")
        if len(self.coeffs) != self.beta - self.alpha + 1:
            raise ValueError("chunk length does not match its orders")

    def __getitem__(self, order: int):
        if not self.alpha <= order <= self.beta:
            raise IndexError(order)
        return self.coeffs[order - self.alpha]

    def glue(self, other: "Chunk") -> "Chunk":
        if other.alpha != self.beta + 1:
            raise ValueError("chunks are not adjacent")
        return Chunk(self.alpha, other.beta, self.coeffs + other.coeffs)


def _at(p, i, zero):
    return p[i] if 0 <= i < len(p) else zero


def _win(lo, coeffs, i, zero):
    return _at(coeffs, i - lo, zero)


def _degree(p) -> int:
    for i in range(len(p) - 1, -1, -1):
        if p[i] != 0:
            return i
    return -1


def taylor_inverse(A, upto: int, ring: Ring = QQ_RING) -> list:
    """``[1/A]_0^upto`` by the reciprocal recurrence ``s_i = -a0^-1 sum_k a_k s_(i-k)``."""
    if not A or A[0] == 0:
        raise LiftingError("A(0) = 0: the inverse series has negative valuation")
    inv0 = ring.inv(A[0])
    dA = _degree(A)
    s = [inv0]
    for i in range(1, upto + 1):
        acc = None
        for k in range(1, min(i, dA) + 1):
            if A[k] != 0:
                t = A[k] * s[i - k]
                acc = t if acc is None else acc + t
        s.append(ring.zero if acc is None else -(acc * inv0))
    return s


def _product_window(p, w_lo, w, lo, hi, zero):
    """Orders ``lo..hi`` of ``p * W`` where ``W`` is known on its window."""
    out = []
    for t in range(lo, hi + 1):
        acc = zero
        for s, ps in enumerate(p):
            if ps != 0:
                acc = acc + ps * _win(w_lo, w, t - s, zero)
        out.append(acc)
    return out


def _residue_from_u(A, B, j, U, d, zero):
    """``z^-j [B - A U]_j^(j+d-1)`` with ``U`` the prefix coefficients at orders j-d..j-1."""
    out = []
    for r in range(d):
        acc = _at(B, j + r, zero)
        for t in range(j - d, j):
            if t < 0:
                continue
            a = _at(A, j + r - t, zero)
            if a != 0:
                acc = acc - a * U[t - (j - d)]
        out.append(acc)
    return out


def residue(A, B, j: int, V, d: int | None = None, ring: Ring = QQ_RING) -> list:
    """``B_j`` with ``B/A = sum_(i<j) g_i z^i + z^j B_j / A``.

    ``V`` is the window ``[1/A]_(j-2d+1)^(j-1)`` (2d - 1 entries; entries at
    negative orders are zero).
    """
    d = _bound(A, B) if d is None else d
    if j == 0:
        return [_at(B, r, ring.zero) for r in range(d)]
    if len(V) != 2 * d - 1:
        raise ValueError(f"window has {len(V)} entries, expected {2 * d - 1}")
    U = _product_window(B, j - 2 * d + 1, V, j - d, j - 1, ring.zero)
    return _residue_from_u(A, B, j, U, d, ring.zero)


def _bound(A, B=()) -> int:
    return max(_degree(A), _degree(B) + 1, 1)


def double_order(A, S, V_e, gamma, e: int, d: int, ring: Ring = QQ_RING):
    """One doubling step: from ``Γ_(2^e-d)`` and ``V_e`` to ``Γ_(2^(e+1)-d)`` and ``V_(e+1)``.

    ``S`` holds at least ``[1/A]_0^(d-1)``; ``V_e = [1/A]_(2^e-2d+1)^(2^e-1)``.
    """
    if len(V_e) != 2 * d - 1 or len(gamma) != d or len(S) < d:
        raise ValueError("inconsistent shapes in double_order")
    zero = ring.zero
    lo_e = 2**e - 2 * d + 1
    # V_L: [1/A] at orders 2^(e+1)-2d .. 2^(e+1)-d-1
    V_L = _product_window(gamma, lo_e, V_e, 2**e - d, 2**e - 1, zero)
    j = 2 ** (e + 1) - d
    new_gamma = _residue_from_u(A, [], j, V_L, d, zero)
    # V_H: [1/A] at orders j .. j+d-1
    V_H = _product_window(new_gamma, 0, S, 0, d - 1, zero)
    return new_gamma, V_L[1:] + V_H


@dataclass
class HighOrderData:
    """Precomputation shared by all chunk queries up to order ``beta``.

    ``gammas[e]`` is the residue of ``1/A`` at order ``2^e - d``.
    """

    A: list
    d: int
    S: list
    delta: int
    e0: int
    e_beta: int
    gammas: dict
    ring: Ring

    @property
    def ladder_orders(self) -> list[int]:
        return [2**e - self.d for e in sorted(self.gammas)]


def high_order(A, alpha: int, beta: int, ring: Ring = QQ_RING, d: int | None = None) -> HighOrderData:
    """Taylor start ``S = [1/A]_0^delta`` plus the doubling ladder of residues."""
    d = _bound(A) if d is None else d
    if d < _degree(A):
        raise ValueError("d is below the degree of A")
    if not A or A[0] == 0:
        raise LiftingError("A(0) = 0; normalise the denominator first")
    if beta < alpha:
        raise ValueError("beta < alpha")
    e0 = (2 * d - 1).bit_length()
    e_beta = max((beta + d).bit_length() - 1, e0)
    delta = max(2**e0 - 1, beta - alpha)
    S = taylor_inverse(A, delta, ring)
    xi0 = 2**e0 - d
    U0 = [_at(S, t, ring.zero) for t in range(xi0 - d, xi0)]
    gammas = {e0: _residue_from_u(A, [], xi0, U0, d, ring.zero)}
    V = [_at(S, t, ring.zero) for t in range(2**e0 - 2 * d + 1, 2**e0)]
    for e in range(e0 + 1, e_beta + 1):
        gammas[e], V = double_order(A, S, V, gammas[e - 1], e - 1, d, ring)
    return HighOrderData(list(A), d, S, delta, e0, e_beta, gammas, ring)


def get_gamma(ho: HighOrderData, alpha: int) -> list:
    """``Γ_alpha``, the residue of ``1/A`` at order ``alpha``."""
    d, zero = ho.d, ho.ring.zero
    if alpha == 0:
        return [ho.ring.one] + [zero] * (d - 1)
    if alpha <= ho.delta:
        U = [_at(ho.S, t, zero) for t in range(alpha - d, alpha)]
        return _residue_from_u(ho.A, [], alpha, U, d, zero)
    a = (alpha + d).bit_length() - 1
    if a not in ho.gammas:
        raise OrderRangeError(f"order {alpha} is beyond the precomputed ladder")
    return _residue_lifted(ho, ho.gammas[a], alpha + d - 2**a)


def inverse_chunk(ho: HighOrderData, alpha: int, beta: int) -> list:
    """``[1/A]_alpha^beta`` as a list (orders below zero give zeros)."""
    if beta - alpha > ho.delta:
        raise OrderRangeError("chunk wider than the Taylor start")
    zero = ho.ring.zero
    if beta <= ho.delta:
        return [_at(ho.S, t, zero) for t in range(alpha, beta + 1)]
    g = get_gamma(ho, alpha)
    return _product_window(g, 0, ho.S, 0, beta - alpha, zero)


def _residue_lifted(ho: HighOrderData, B, alpha: int) -> list:
    d = ho.d
    if alpha == 0:
        return [_at(B, r, ho.ring.zero) for r in range(d)]
    V = inverse_chunk(ho, alpha - 2 * d + 1, alpha - 1)
    return residue(ho.A, B, alpha, V, d, ho.ring)


def devel_chunk(A, B, ho: HighOrderData, alpha: int, beta: int) -> Chunk:
    """``[B/A]_alpha^beta`` using the precomputed ladder (requires deg B < d)."""
    if _degree(B) >= ho.d:
        raise ValueError("deg B must be below the ladder bound d")
    if beta - alpha > ho.delta:
        raise OrderRangeError(f"chunk width {beta - alpha} exceeds delta = {ho.delta}")
    zero = ho.ring.zero
    if beta <= ho.delta:
        out = _product_window(B, 0, ho.S, alpha, beta, zero)
    else:
        if beta + ho.d >= 2 ** (ho.e_beta + 1):
            raise OrderRangeError(f"order {beta} is beyond the precomputed ladder")
        Ba = _residue_lifted(ho, B, alpha)
        out = _product_window(Ba, 0, ho.S, 0, beta - alpha, zero)
    return Chunk(alpha, beta, tuple(out))


# --------------------------------------------------------------------------
# Fiduccia


def _mulmod(a, b, P, d, zero):
    """``a * b mod P`` for monic ``P`` of degree ``d`` (a, b of length d)."""
    prod = [zero] * (2 * d - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if bj != 0:
                prod[i + j] = prod[i + j] + ai * bj
    for k in range(2 * d - 2, d - 1, -1):
        c = prod[k]
        if c != 0:
            for i in range(d):
                if P[i] != 0:
                    prod[k - d + i] = prod[k - d + i] - c * P[i]
    return prod[:d]


def _powmod_z(exp: int, P, d, ring: Ring):
    """``Z^exp mod P`` by binary powering."""
    zero, one = ring.zero, ring.one
    result = [one] + [zero] * (d - 1)
    if d == 1:
        base = [-P[0]]
    else:
        base = [zero, one] + [zero] * (d - 2)
    while exp:
        if exp & 1:
            result = _mulmod(result, base, P, d, zero)
        exp >>= 1
        if exp:
            base = _mulmod(base, base, P, d, zero)
    return result


def fiduccia_chunk(A, B, alpha: int, beta: int | None = None, ring: Ring = QQ_RING) -> Chunk:
    """``[B/A]_alpha^beta`` from the linear recurrence with characteristic polynomial rev(A)/a0.

    Blocks of ``d`` consecutive coefficients share one reduced power of ``Z``.
    """
    beta = alpha if beta is None else beta
    if beta < alpha or alpha < 0:
        raise ValueError("need 0 <= alpha <= beta")
    if not A or A[0] == 0:
        raise LiftingError("A(0) = 0; normalise the denominator first")
    zero = ring.zero
    d = _bound(A, B)
    S = taylor_inverse(A, 2 * d - 2, ring)
    t = _product_window(B, 0, S, 0, 2 * d - 2, zero)
    inv0 = ring.inv(A[0])
    # monic P(Z) = Z^d A(1/Z) / a0, low order first (leading 1 implicit)
    P = [_at(A, d - i, zero) * inv0 for i in range(d)]
    out = []
    order = alpha
    c = None
    step = None
    while order <= beta:
        if c is None and order < len(t):
            out.append(t[order])
            order += 1
            continue
        if c is None:
            c = _powmod_z(order, P, d, ring)
        elif step is not None:
            c = _mulmod(c, step, P, d, zero)
        for j in range(min(d, beta - order + 1)):
            acc = zero
            for i in range(d):
                if c[i] != 0:
                    acc = acc + c[i] * t[i + j]
            out.append(acc)
        order += d
        if step is None and order <= beta:
            step = _powmod_z(d, P, d, ring)
    return Chunk(alpha, beta, tuple(out))


def naive_series(A, B, count: int, ring: Ring = QQ_RING) -> list:
    """First ``count`` Taylor coefficients of ``B/A`` by the direct recurrence."""
    S = taylor_inverse(A, count - 1, ring)
    return _product_window(B, 0, S, 0, count - 1, ring.zero)


def series_chunk(A, B, alpha: int, beta: int | None = None, ring: Ring = QQ_RING,
                 method: str = "lifting", ho: HighOrderData | None = None) -> Chunk:
    """``[B/A]_alpha^beta`` with any z-valuation of ``B`` handled by index shifts."""
    beta = alpha if beta is None else beta
    v = 0
    while v < len(B) and B[v] == 0:
        v += 1
    zero = ring.zero
    if v == len(B):
        return Chunk(alpha, beta, tuple([zero] * (beta - alpha + 1)))
    Bs = list(B[v:])
    lo, hi = alpha - v, beta - v
    pad = []
    if lo < 0:
        pad = [zero] * (min(-lo, hi + 1 - lo))
        lo = 0
    if hi < 0:
        return Chunk(alpha, beta, tuple(pad))
    if method == "lifting":
        d = max(_bound(A, Bs), ho.d if ho is not None else 0)
        if ho is None or ho.d != d or hi - lo > ho.delta or hi + d >= 2 ** (ho.e_beta + 1):
            ho = high_order(A, lo, max(hi, d), ring, d)
        body = devel_chunk(A, Bs, ho, lo, hi).coeffs
    elif method == "fiduccia":
        body = fiduccia_chunk(A, Bs, lo, hi, ring).coeffs
    elif method == "naive":
        body = tuple(naive_series(A, Bs, hi + 1, ring)[lo:])
    else:
        raise ValueError(f"unknown method {method!r}")
    return Chunk(alpha, beta, tuple(pad) + tuple(body))


# --------------------------------------------------------------------------
# Bivariate lifting


def bivariate_chunk(B, A, m: int, alpha: int, beta: int, n: int, mode: str = "exact",
                    precision: int = DEFAULT_PRECISION, method: str = "lifting") -> list[list]:
    """``[[z^l] z^m B/A]_0^n`` for ``l = alpha..beta``; B, A are lists (over z) of y-coefficient lists.

    Arithmetic is modulo ``y^(n+1)`` over mpq (``exact``) or mpfr (``float``).
    """
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    with ext_context(precision):
        conv = mpq if mode == "exact" else mpfr
        ring = truncpoly_ring(n, conv)
        Bt = [TruncPoly([conv(c) for c in col], n) for col in B]
        At = [TruncPoly([conv(c) for c in col], n) for col in A]
        chunk = series_chunk(At, Bt, alpha - m, beta - m, ring, method)
        return [list(g.c) for g in chunk.coeffs]


def bivariate_lift(fraction, length: int, n: int, mode: str = "exact",
                   precision: int = DEFAULT_PRECISION, method: str = "lifting"):
    """``P(N_length = k)`` for ``k <= n`` from a reconstructed generating function."""
    import time

    from .recursion import CountDistribution

    if length < fraction.m:
        raise ValueError(f"length {length} is shorter than the model order {fraction.m}")
    t0 = time.perf_counter()
    probs = bivariate_chunk(fraction.num, fraction.den, fraction.m, length, length, n,
                            mode, precision, method)[0]
    return CountDistribution(length, fraction.m, probs, f"{method}-{mode}", {
        "degrees": fraction.degrees, "precision": precision if mode == "float" else None,
        "time": time.perf_counter() - t0})
