"""Exact and extended-precision arithmetic substrate.

Polynomials are plain coefficient lists ``[c_0, c_1, ..., c_deg]`` with the
leading coefficient nonzero; ``[]`` is the zero polynomial.  Exact rationals are
``gmpy2.mpq``, extended floats are ``gmpy2.mpfr`` evaluated inside
:func:`ext_context`.  Prime-field elements are Python ints in ``[0, p)``.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Sequence

import gmpy2
from gmpy2 import mpfr, mpq, mpz

DEFAULT_PRECISION = 1024
DEFAULT_GAMMA = 31


class ReconstructionError(ArithmeticError):
    """Raised when a rational or fraction reconstruction has no valid answer."""


class DegenerateFractionError(ReconstructionError):
    pass


# --------------------------------------------------------------------------
# Extended floats


def ext_context(precision: int = DEFAULT_PRECISION):
    """Context manager for mpfr arithmetic at ``precision`` mantissa bits.

    The exponent range is widened to the library maximum so that tail
    probabilities such as 1e-8000 neither underflow nor overflow.
    """
    return gmpy2.context(
        gmpy2.get_context(),
        precision=precision,
        emin=gmpy2.get_emin_min(),
        emax=gmpy2.get_emax_max(),
    )


def to_ext(x, precision: int = DEFAULT_PRECISION):
    """Round an exact value to an ExtFloat with ``precision`` bits."""
    with ext_context(precision):
        return mpfr(x)


def as_rational(x) -> mpq:
    if isinstance(x, str):
        return mpq(x)
    return mpq(x)


# --------------------------------------------------------------------------
# Fields


class PrimeField:
    """GF(p) with elements represented as ints in [0, p)."""

    __slots__ = ("p",)

    def __init__(self, p: int):
        self.p = int(p)

    zero = 0
    one = 1

    def __call__(self, x) -> int:
        if isinstance(x, int):
            return x % self.p
        x = mpq(x)
        den = int(x.denominator) % self.p
        if den == 0:
            raise ZeroDivisionError(f"denominator of {x} vanishes mod {self.p}")
        return int(x.numerator) * pow(den, -1, self.p) % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    def inv(self, a):
        return pow(a, -1, self.p)

    def __repr__(self):
        return f"PrimeField({self.p})"


class RationalField:
    """Q with gmpy2.mpq elements."""

    zero = mpq(0)
    one = mpq(1)

    def __call__(self, x):
        return mpq(x)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        return 1 / mpq(a)

    def __repr__(self):
        return "RationalField()"


QQ = RationalField()


# --------------------------------------------------------------------------
# Dense univariate polynomials over a field


def poly_trim(c: list) -> list:
    while c and c[-1] == 0:
        c.pop()
    return c


def poly_degree(c: Sequence) -> int:
    """Degree of a trimmed polynomial; -1 for the zero polynomial."""
    return len(c) - 1


def poly_add(a: Sequence, b: Sequence, F=QQ) -> list:
    n = max(len(a), len(b))
    out = [F.add(a[i] if i < len(a) else F.zero, b[i] if i < len(b) else F.zero) for i in range(n)]
    return poly_trim(out)


def poly_sub(a: Sequence, b: Sequence, F=QQ) -> list:
    n = max(len(a), len(b))
    out = [F.sub(a[i] if i < len(a) else F.zero, b[i] if i < len(b) else F.zero) for i in range(n)]
    return poly_trim(out)


def poly_mul(a: Sequence, b: Sequence, F=QQ, trunc: int | None = None) -> list:
    """Classical product, optionally truncated to the first ``trunc`` terms."""
    if not a or not b:
        return []
    n = len(a) + len(b) - 1
    if trunc is not None:
        n = min(n, trunc)
    out = [F.zero] * n
    for i, ai in enumerate(a):
        if ai == 0 or i >= n:
            continue
        for j in range(min(len(b), n - i)):
            out[i + j] = F.add(out[i + j], F.mul(ai, b[j]))
    return poly_trim(out)


def poly_scale(a: Sequence, s, F=QQ) -> list:
    return poly_trim([F.mul(x, s) for x in a])


def poly_divmod(a: Sequence, b: Sequence, F=QQ) -> tuple[list, list]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(a)
    db = len(b) - 1
    if len(r) - 1 < db:
        return [], poly_trim(r)
    inv_lead = F.inv(b[-1])
    q = [F.zero] * (len(r) - db)
    for k in range(len(r) - 1 - db, -1, -1):
        coef = F.mul(r[k + db], inv_lead)
        q[k] = coef
        if coef != 0:
            for j in range(db + 1):
                r[k + j] = F.sub(r[k + j], F.mul(coef, b[j]))
    return poly_trim(q), poly_trim(r[:db])


def poly_gcd(a: Sequence, b: Sequence, F=QQ) -> list:
    """Monic gcd."""
    a, b = poly_trim(list(a)), poly_trim(list(b))
    while b:
        a, b = b, poly_divmod(a, b, F)[1]
    if not a:
        return []
    return poly_scale(a, F.inv(a[-1]), F)


def poly_eval(c: Sequence, x, F=QQ):
    acc = F.zero
    for coef in reversed(c):
        acc = F.add(F.mul(acc, x), coef)
    return acc


# --------------------------------------------------------------------------
# CRT and rational reconstruction


def crt_combine(residues: Iterable[tuple[int, int]]) -> int:
    """Combine ``(value, modulus)`` pairs into ``x mod prod(moduli)``.

    >>> crt_combine([(2, 3), (3, 5)])
    8
    """
    x, M = 0, 1
    for value, p in residues:
        p = int(p)
        if p < 2:
            raise ValueError(f"invalid modulus {p}")
        if math.gcd(M, p) != 1:
            raise ValueError(f"modulus {p} is not coprime with the previous moduli")
        # x + M * t ≡ value (mod p)
        t = (int(value) - x) * pow(M, -1, p) % p
        x += M * t
        M *= p
    return x


def rational_reconstruct(x: int, M: int) -> mpq:
    """Recover ``n/d`` with ``n * d^-1 ≡ x (mod M)`` and ``|n|, d <= sqrt(M/2)``.

    Classical Wang criterion: run the extended Euclidean algorithm on
    ``(M, x)`` and stop at the first remainder below the half bound.
    """
    x, M = int(x) % int(M), int(M)
    bound = math.isqrt(M // 2)
    r0, r1 = M, x
    t0, t1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound or math.gcd(r1, abs(t1)) != 1 or math.gcd(abs(t1), M) != 1:
        raise ReconstructionError(f"no rational with bounded height is congruent to {x} mod {M}")
    if t1 < 0:
        r1, t1 = -r1, -t1
    return mpq(r1, t1)


def fraction_reconstruct(series: Sequence, d: int, F=QQ) -> tuple[list, list]:
    """Padé-type reconstruction ``B/A`` from ``2d+1`` series terms.

    Returns ``(B, A)`` with ``deg B, deg A <= d``, ``A(0) = 1``, ``gcd(A, B) = 1``
    and ``B ≡ A * series (mod z^(2d+1))``.
    """
    if len(series) < 2 * d + 1:
        raise ValueError(f"need {2 * d + 1} series terms, got {len(series)}")
    if isinstance(F, PrimeField):
        return _pade_mod_p([F(c) for c in series[: 2 * d + 1]], d, F.p)
    s = poly_trim([F(c) for c in series[: 2 * d + 1]])
    r0, r1 = [F.zero] * (2 * d + 1) + [F.one], s
    t0, t1 = [], [F.one]
    while len(r1) - 1 > d:
        q, r = poly_divmod(r0, r1, F)
        r0, r1 = r1, r
        t0, t1 = t1, poly_sub(t0, poly_mul(q, t1, F), F)
    B, A = r1, t1
    if not A or A[0] == 0:
        raise DegenerateFractionError("denominator vanishes at z = 0")
    g = poly_gcd(A, B, F) if B else [F.one]
    if len(g) > 1:
        A = poly_divmod(A, g, F)[0]
        B = poly_divmod(B, g, F)[0]
    c = F.inv(A[0])
    return poly_scale(B, c, F), poly_scale(A, c, F)


def _trim_int(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _divmod_p(a: list, b: list, p: int) -> tuple[list, list]:
    r = list(a)
    db = len(b) - 1
    if len(r) - 1 < db:
        return [], _trim_int(r)
    inv = pow(b[-1], -1, p)
    q = [0] * (len(r) - db)
    for k in range(len(r) - 1 - db, -1, -1):
        c = r[k + db] * inv % p
        q[k] = c
        if c:
            for j in range(db):
                r[k + j] = (r[k + j] - c * b[j]) % p
        r[k + db] = 0
    return _trim_int(q), _trim_int(r[:db])


def _mul_p(a: list, b: list, p: int) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim_int([c % p for c in out])


def _pade_mod_p(s: list, d: int, p: int) -> tuple[list, list]:
    """:func:`fraction_reconstruct` over GF(p) on plain ints (hot path of the modular algorithm)."""
    r0, r1 = [0] * (2 * d + 1) + [1], _trim_int(list(s))
    t0, t1 = [], [1]
    while len(r1) - 1 > d:
        q, r = _divmod_p(r0, r1, p)
        r0, r1 = r1, r
        qt = _mul_p(q, t1, p)
        n = max(len(t0), len(qt))
        t0, t1 = t1, _trim_int([((t0[i] if i < len(t0) else 0) - (qt[i] if i < len(qt) else 0)) % p
                                for i in range(n)])
    B, A = r1, t1
    if not A or A[0] == 0:
        raise DegenerateFractionError("denominator vanishes at z = 0")
    if B:
        g0, g1 = A, B
        while g1:
            g0, g1 = g1, _divmod_p(g0, g1, p)[1]
        if len(g0) > 1:
            A = _divmod_p(A, g0, p)[0]
            B = _divmod_p(B, g0, p)[0]
    c = pow(A[0], -1, p)
    return _trim_int([x * c % p for x in B]), _trim_int([x * c % p for x in A])


class LagrangeBasis:
    """Interpolation on fixed abscissas over GF(p): the basis is built once, each
    value vector then costs one matrix-vector product."""

    def __init__(self, xs: Sequence[int], p: int):
        xs = [int(x) % p for x in xs]
        if len(set(xs)) != len(xs):
            raise ValueError("repeated abscissa in interpolation points")
        self.p = p
        n = len(xs)
        master = [1]
        for x in xs:
            nxt = [0] * (len(master) + 1)
            for k, c in enumerate(master):
                nxt[k + 1] += c
                nxt[k] -= x * c
            master = [c % p for c in nxt]
        self.rows = []
        for j, xj in enumerate(xs):
            # master / (y - xj) by synthetic division, highest degree first
            quot = [0] * n
            acc = 0
            for k in range(n, 0, -1):
                acc = (master[k] + acc * xj) % p
                quot[k - 1] = acc
            w = 1
            for i, xi in enumerate(xs):
                if i != j:
                    w = w * (xj - xi) % p
            w = pow(w, -1, p)
            self.rows.append([c * w % p for c in quot])

    def __call__(self, values: Sequence[int]) -> list:
        p = self.p
        out = [0] * len(self.rows)
        for v, row in zip(values, self.rows):
            if v:
                for k, c in enumerate(row):
                    out[k] += v * c
        return _trim_int([c % p for c in out])


def interpolate(points: Sequence[tuple[int, int]], p: int) -> list:
    """Newton interpolation over GF(p); returns the coefficient list."""
    F = PrimeField(p)
    xs = [F(x) for x, _ in points]
    if len(set(xs)) != len(xs):
        raise ValueError("repeated abscissa in interpolation points")
    coef = [F(v) for _, v in points]
    n = len(xs)
    # divided differences
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = F.mul(F.sub(coef[i], coef[i - 1]), F.inv(F.sub(xs[i], xs[i - j])))
    out: list = []
    for i in range(n - 1, -1, -1):
        # out = out * (y - xs[i]) + coef[i]
        shifted = [F.zero] + out
        for k in range(len(out)):
            shifted[k] = F.sub(shifted[k], F.mul(xs[i], out[k]))
        if shifted:
            shifted[0] = F.add(shifted[0], coef[i])
        else:
            shifted = [coef[i]]
        out = poly_trim(shifted)
    return out


def is_probable_prime(n: int, rounds: int = 64) -> bool:
    return bool(gmpy2.is_prime(n, rounds))


def prime_stream(gamma: int = DEFAULT_GAMMA, lower_bound: int = 0) -> Iterator[int]:
    """Yield increasing distinct primes ``>= max(2**gamma, lower_bound + 1)``."""
    if gamma < 2:
        raise ValueError("gamma must be at least 2")
    p = mpz(max(2**gamma, lower_bound + 1) - 1)
    while True:
        p = gmpy2.next_prime(p)
        if is_probable_prime(p):
            yield int(p)


# --------------------------------------------------------------------------
# Truncated polynomials in y (coefficient ring of the bivariate lifting)


class TruncPoly:
    """Polynomial in ``y`` reduced modulo ``y^(order+1)``.

    Coefficients may be mpq or mpfr; all instances combined in one
    computation must share ``order``.
    """

    __slots__ = ("c", "order")

    def __init__(self, coeffs, order: int):
        c = list(coeffs[: order + 1])
        if len(c) < order + 1:
            zero = c[0] * 0 if c else mpq(0)
            c.extend([zero] * (order + 1 - len(c)))
        self.c = c
        self.order = order

    @classmethod
    def constant(cls, value, order: int) -> "TruncPoly":
        return cls([value] + [value * 0] * order, order)

    def __add__(self, other):
        if not isinstance(other, TruncPoly):
            other = TruncPoly.constant(other, self.order)
        return TruncPoly([a + b for a, b in zip(self.c, other.c)], self.order)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, TruncPoly):
            other = TruncPoly.constant(other, self.order)
        return TruncPoly([a - b for a, b in zip(self.c, other.c)], self.order)

    def __rsub__(self, other):
        return TruncPoly.constant(other, self.order) - self

    def __neg__(self):
        return TruncPoly([-a for a in self.c], self.order)

    def __mul__(self, other):
        if not isinstance(other, TruncPoly):
            return TruncPoly([a * other for a in self.c], self.order)
        a, b, n = self.c, other.c, self.order
        out = [a[0] * 0] * (n + 1)
        nz = [j for j in range(n + 1) if b[j] != 0]
        for i in range(n + 1):
            ai = a[i]
            if ai == 0:
                continue
            for j in nz:
                if i + j > n:
                    break
                out[i + j] += ai * b[j]
        return TruncPoly(out, n)

    __rmul__ = __mul__

    def inverse(self) -> "TruncPoly":
        """Power-series inverse; requires a nonzero constant term."""
        a, n = self.c, self.order
        if a[0] == 0:
            raise ZeroDivisionError("constant term is zero")
        inv0 = 1 / a[0]
        out = [inv0]
        for k in range(1, n + 1):
            acc = a[k] * out[0]
            for i in range(1, k):
                acc += a[k - i] * out[i]
            out.append(-acc * inv0)
        return TruncPoly(out, n)

    def __eq__(self, other):
        if isinstance(other, TruncPoly):
            return self.order == other.order and self.c == other.c
        if other == 0:
            return all(x == 0 for x in self.c)
        return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def __repr__(self):
        return f"TruncPoly({self.c!r}, order={self.order})"
