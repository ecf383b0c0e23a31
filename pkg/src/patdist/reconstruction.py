"""Exact bivariate generating function ``G(y, z) = B(y, z) / A(y, z)``.

``G = sum_l E[y^N_l] z^l`` is rebuilt from a prefix of its series.  The
prefix is projected modulo word-size primes and at integer points ``y_j``;
each image is a univariate Padé problem over GF(p).  The images are
interpolated in ``y``, combined by CRT and lifted back to the rationals.
"""

from __future__ import annotations

import hashlib
import math
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

import gmpy2
from gmpy2 import mpq

from .arith import (DEFAULT_GAMMA, DegenerateFractionError, PrimeField, ReconstructionError, crt_combine,
                    LagrangeBasis, fraction_reconstruct, interpolate, poly_degree, poly_trim, prime_stream,
                    rational_reconstruct)
from .embedding import EmbeddedChain, series_prefix

DEFAULT_MEMORY_BUDGET = 2 * 1024**3


class MemoryBudgetError(ReconstructionError, MemoryError):
    """The exact series prefix would not fit in the configured budget (memory thrashing)."""


@dataclass
class BivariateFraction:
    """``G(y, z) = z^m num(y, z) / den(y, z)`` with ``den(y, 0) = 1``.

    ``num`` and ``den`` are lists over powers of ``z`` whose entries are
    coefficient lists in ``y`` (mpq, low degree first, ``[]`` for zero).
    """

    num: list
    den: list
    m: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.num = _trim_z([poly_trim([mpq(c) for c in col]) for col in self.num])
        self.den = _trim_z([poly_trim([mpq(c) for c in col]) for col in self.den])
        if not self.den or self.den[0] != [mpq(1)]:
            raise ValueError("denominator must satisfy A(y, 0) = 1")

    @property
    def B(self) -> list:
        return [[] for _ in range(self.m)] + self.num if self.num else []

    @property
    def A(self) -> list:
        return self.den

    @property
    def d_Bz(self) -> int:
        return len(self.B) - 1

    @property
    def d_Az(self) -> int:
        return len(self.den) - 1

    @property
    def degrees(self) -> tuple[int, int]:
        """z-degrees of the unshifted pair ``(num, den)``."""
        return len(self.num) - 1, len(self.den) - 1

    @property
    def nu_y(self) -> int:
        return max(len(c) - 1 for c in self.num + self.den if c)

    @property
    def d(self) -> int:
        """z-degree bound of the reduced series fraction ``num / den``."""
        return max(len(self.num) - 1, len(self.den) - 1)

    def __eq__(self, other):
        return (isinstance(other, BivariateFraction) and self.m == other.m
                and self.num == other.num and self.den == other.den)


def _trim_z(cols):
    while cols and not cols[-1]:
        cols.pop()
    return cols


# --------------------------------------------------------------------------
# Bivariate polynomial helpers (lists over z of lists over y)


def _ymul(a, b):
    if not a or not b:
        return []
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return poly_trim(out)


def _yadd(a, b):
    n = max(len(a), len(b))
    return poly_trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def verify(fraction: BivariateFraction, chain: EmbeddedChain | None = None, extra: int = 0,
           series: list | None = None) -> bool:
    """Exact check ``A(y, z) * sum g_i z^i ≡ num(y, z)  (mod z^(2d+1+extra))``.

    ``series`` may supply ``g_0, g_1, ...`` (coefficient lists in y); otherwise
    it is recomputed from ``chain``.
    """
    K = 2 * fraction.d + 1 + extra
    if series is None:
        if chain is None:
            raise ValueError("need a chain or a precomputed series")
        if chain.m != fraction.m:
            return False
        series = series_prefix(chain, K - 1)
    if len(series) < K:
        raise ValueError(f"series has {len(series)} terms, {K} needed")
    A, B = fraction.den, fraction.num
    for k in range(K):
        acc = []
        for i in range(min(k, len(A) - 1) + 1):
            acc = _yadd(acc, _ymul(A[i], series[k - i]))
        target = B[k] if k < len(B) else []
        if acc != poly_trim(list(target)):
            return False
    return True


# --------------------------------------------------------------------------
# Modular series images


def _modular_chain(chain: EmbeddedChain, p: int):
    F = PrimeField(p)
    rows = [[(c, F(v)) for c, v in r] for r in chain.P.rows]
    qrows = [[(c, F(v)) for c, v in r] for r in chain.Q.rows]
    u = [F(x) for x in chain.u]
    return rows, qrows, u


def _series_at_point(chain: EmbeddedChain, p: int, y0: int, count: int) -> list[int]:
    """``g_i(y0) mod p`` for ``i < count``."""
    rows, qrows, u = _modular_chain(chain, p)
    T = [[(c, v) for c, v in pr] + [(c, v * y0 % p) for c, v in qr] for pr, qr in zip(rows, qrows)]
    x = [1] * chain.R
    out = []
    for i in range(count):
        if i:
            x = [sum(v * x[c] for c, v in row) % p for row in T]
        out.append(sum(a * b for a, b in zip(u, x)) % p)
    return out


def _random_prime(rng: random.Random, gamma: int) -> int:
    return int(gmpy2.next_prime(2**gamma + rng.randrange(2**gamma)))


def probe_degree(chain: EmbeddedChain, seed: int | None = None, gamma: int = DEFAULT_GAMMA,
                 max_degree: int | None = None) -> int:
    """Las Vegas estimate of ``d = max(deg_z num, deg_z den)``.

    Works at one random point modulo one random prime.  Starting from
    ``d0 = 1``, the reconstructions from ``2 d0 + 1`` and ``2 d0 + 3`` terms
    must agree; otherwise ``d0`` doubles.  An agreeing candidate is then
    checked against ``R + d0 + 1`` terms: the true fraction has degree at
    most ``R``, so agreement that far is a proof for this image.
    """
    rng = random.Random(seed)
    p = _random_prime(rng, gamma)
    y0 = rng.randrange(1, p)
    F = PrimeField(p)
    bound = chain.R if max_degree is None else max_degree
    terms: list[int] = []

    def need(k):
        nonlocal terms
        if len(terms) < k:
            terms = _series_at_point(chain, p, y0, max(k, 2 * len(terms)))

    d0 = 1
    while True:
        need(2 * d0 + 3)
        try:
            f1 = fraction_reconstruct(terms, d0, F)
            f2 = fraction_reconstruct(terms, d0 + 1, F)
        except DegenerateFractionError:
            f1, f2 = None, ()
        if f1 == f2:
            need(chain.R + d0 + 1)
            if _residual_ok(f1[1], f1[0], terms[: chain.R + d0 + 1], F):
                return max(poly_degree(f1[0]), poly_degree(f1[1]), 1)
        if d0 >= bound:
            raise ReconstructionError(f"fraction degree exceeds the chain size R = {bound}")
        d0 = min(2 * d0, bound)


def certify(fraction: BivariateFraction, chain: EmbeddedChain, seed: int | None = None,
            gamma: int = DEFAULT_GAMMA) -> bool:
    """Compare ``R + d + 1`` terms at a random point modulo a random prime.

    Both fractions have z-degree at most ``max(R, d)``, so a match is
    conclusive for that image and wrong candidates survive only if the
    point or the prime happens to be a root of their difference.
    """
    rng = random.Random(seed)
    while True:
        p = _random_prime(rng, gamma)
        try:
            F = PrimeField(p)
            y0 = rng.randrange(1, p)
            A = [_eval_mod([F(c) for c in col], y0, p) for col in fraction.den]
            B = [_eval_mod([F(c) for c in col], y0, p) for col in fraction.B]
        except ZeroDivisionError:
            continue
        break
    K = chain.R + fraction.d + fraction.m + 1
    s = [0] * chain.m + _series_at_point(chain, p, y0, K - chain.m)
    return _residual_ok(A, B, s, F)


def _residual_ok(A, B, s, F) -> bool:
    for k in range(len(s)):
        acc = 0
        for i in range(min(k, len(A) - 1) + 1):
            acc += A[i] * s[k - i]
        if acc % F.p != (B[k] if k < len(B) else 0):
            return False
    return True


# --------------------------------------------------------------------------
# Algorithm: modular bivariate reconstruction


def estimate_series_memory(chain: EmbeddedChain, terms: int) -> int:
    """Rough byte count of the exact series prefix and the working vector."""
    hb = chain.max_height_bits()
    # entry i: R polynomials of degree <= i whose coefficients carry ~ i*hb bits (num + den)
    per_term = lambda i: (i + 1) * (2 * i * hb + 64) // 8  # noqa: E731
    work = chain.R * per_term(terms)
    stored = sum(per_term(i) for i in range(terms + 1))
    return 2 * work + stored


def _series_mod(series, p):
    F = PrimeField(p)
    return [[F(c) for c in g] for g in series]


def _eval_mod(poly, y, p):
    acc = 0
    for c in reversed(poly):
        acc = (acc * y + c) % p
    return acc


def _image(series_p, d: int, p: int, npts: int):
    """Interpolated (num, den) mod p, or None when the prime looks unlucky."""
    F = PrimeField(p)
    best = None
    pts: list = []
    y = 0
    tries = 0
    while len(pts) < npts:
        if tries > 4 * npts + 20 or y >= p:
            return None
        tries += 1
        vals = [_eval_mod(g, y, p) for g in series_p]
        try:
            B, A = fraction_reconstruct(vals, d, F)
        except DegenerateFractionError:
            y += 1
            continue
        deg = (poly_degree(B), poly_degree(A))
        if best is None or deg > best:
            if best is not None and (deg[0] < best[0] or deg[1] < best[1]):
                y += 1
                continue
            best, pts = deg, []
        if deg == best:
            pts.append((y, B, A))
        y += 1
    dB, dA = best
    basis = LagrangeBasis([yj for yj, _, _ in pts], p)
    num = [basis([B[k] for _, B, _ in pts]) for k in range(dB + 1)]
    den = [basis([A[k] for _, _, A in pts]) for k in range(dA + 1)]
    return best, num, den


def _explains_tail(series_p, d: int, p: int, rng: random.Random) -> bool:
    """Cheap degree test at one random point: the Padé candidate from 2d + 1 terms must fit the rest."""
    F = PrimeField(p)
    y = rng.randrange(1, p)
    vals = [_eval_mod(g, y, p) for g in series_p]
    try:
        B, A = fraction_reconstruct(vals[: 2 * d + 1], d, F)
    except DegenerateFractionError:
        return False
    return _residual_ok(A, B, vals, F)


def _lift(images, key):
    """CRT and rational reconstruction of every coefficient of ``images[*][key]``."""
    M = math.prod(p for p, _ in images)
    ref = images[0][1][key]
    out = []
    for k in range(len(ref)):
        ylen = max(len(img[key][k]) for _, img in images)
        col = []
        for j in range(ylen):
            x = crt_combine([(img[key][k][j] if j < len(img[key][k]) else 0, p) for p, img in images])
            col.append(rational_reconstruct(x, M))
        out.append(col)
    return out


def reconstruct_gf(chain: EmbeddedChain, d: int, gamma: int = DEFAULT_GAMMA, check_extra: int | None = None,
                   memory_budget: int | None = DEFAULT_MEMORY_BUDGET, max_rounds: int = 8,
                   meta: dict | None = None) -> BivariateFraction:
    """Exact ``B/A`` of z-degree at most ``d`` from ``2d + 1`` series terms.

    The candidate must explain ``check_extra`` (default ``d``) further terms
    exactly; if it does not, more primes are added.  Raises
    :class:`ReconstructionError` when no candidate of degree ``d`` exists.
    """
    t0 = time.perf_counter()
    extra = d if check_extra is None else check_extra
    K = 2 * d + extra
    if memory_budget is not None:
        need = estimate_series_memory(chain, K)
        if need > memory_budget:
            raise MemoryBudgetError(
                f"series prefix needs about {need / 2**20:.0f} MiB (> budget "
                f"{memory_budget / 2**20:.0f} MiB); memory thrashing expected")
    series = series_prefix(chain, K)
    t1 = time.perf_counter()
    head = series[: 2 * d + 1]
    h = max((max(int(c.numerator).bit_length(), int(c.denominator).bit_length())
             for g in head for c in g), default=1)
    hb = chain.max_height_bits()
    n_primes = max(math.ceil((2 * d + 2) * hb / gamma), math.ceil((2 * h + 2) / gamma) + 1, 1)
    npts = 2 * d + 1  # y-degree of num and den is at most 2d
    primes = prime_stream(gamma)
    images: list = []
    best = None
    misfits = 0
    rng = random.Random(d)
    for _ in range(max_rounds):
        while len(images) < n_primes:
            p = next(primes)
            try:
                sp = _series_mod(series, p)
            except ZeroDivisionError:
                continue
            if not _explains_tail(sp, d, p, rng):
                misfits += 1
                if misfits >= 2:
                    raise ReconstructionError(f"no degree {d} fraction explains {K + 1} terms modulo "
                                              "two primes; increase d")
                continue
            img = _image(sp[: 2 * d + 1], d, p, npts)
            if img is None:
                misfits += 1
                if misfits > 8:
                    raise ReconstructionError(f"degree {d} reconstruction keeps degenerating; increase d")
                continue
            deg, num, den = img
            if best is None or deg > best:
                if best is not None and (deg[0] < best[0] or deg[1] < best[1]):
                    continue
                best, images = deg, []
            if deg == best:
                images.append((p, {"num": num, "den": den}))
        try:
            num = _lift(images, "num")
            den = _lift(images, "den")
            cand = BivariateFraction(num, den, chain.m, dict(meta or {}))
        except (ReconstructionError, ValueError):
            n_primes *= 2
            continue
        if verify(cand, extra=extra, series=series):
            if not certify(cand, chain, seed=len(images)):
                raise ReconstructionError(f"the series prefix is explained by a degree {d} fraction "
                                          "that is not the generating function; increase d")
            cand.meta.update(primes=len(images), series_terms=K + 1,
                             time_series=t1 - t0, time_total=time.perf_counter() - t0)
            return cand
        n_primes *= 2
    raise ReconstructionError(f"no verified fraction of degree {d} after {max_rounds} rounds of primes")


def find_fraction(chain: EmbeddedChain, seed: int | None = None, gamma: int = DEFAULT_GAMMA,
                  memory_budget: int | None = DEFAULT_MEMORY_BUDGET, meta: dict | None = None) -> BivariateFraction:
    """Probe the degree, reconstruct, and grow ``d`` until verification succeeds."""
    t0 = time.perf_counter()
    d = probe_degree(chain, seed, gamma)
    while True:
        try:
            frac = reconstruct_gf(chain, d, gamma, memory_budget=memory_budget, meta=meta)
            frac.meta["time_probe_and_reconstruct"] = time.perf_counter() - t0
            return frac
        except MemoryBudgetError:
            raise
        except ReconstructionError:
            if d >= chain.R:
                raise
            d = min(2 * d, chain.R)


# --------------------------------------------------------------------------
# Persistence


def model_fingerprint(model) -> str:
    """SHA-256 of a canonical text rendering of the model parameters."""
    lines = [" ".join(model.alphabet), str(model.m)]
    lines += [f"mu {c} {model.mu[c]}" for c in sorted(model.mu)]
    lines += [f"{c}|{b} {v}" for (c, b), v in sorted(model.pi.items())]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def save_fraction(fraction: BivariateFraction, path) -> None:
    meta = fraction.meta
    lines = ["# patdist generating function G(y,z) = z^m num / den",
             f"alphabet {' '.join(meta.get('alphabet', ()))}",
             f"pattern {meta.get('pattern', '')}",
             f"model {meta.get('model', '')}",
             f"order {fraction.m}",
             f"degrees {fraction.degrees[0]} {fraction.degrees[1]}"]
    for tag, poly in (("num", fraction.num), ("den", fraction.den)):
        for k, col in enumerate(poly):
            for j, c in enumerate(col):
                if c:
                    lines.append(f"{tag} {k} {j} {c.numerator}/{c.denominator}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_fraction(path) -> BivariateFraction:
    meta: dict = {}
    m = 0
    polys: dict = {"num": {}, "den": {}}
    degrees = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        try:
            if key == "alphabet":
                meta["alphabet"] = tuple(rest.split())
            elif key in ("pattern", "model"):
                meta[key] = rest.strip()
            elif key == "order":
                m = int(rest)
            elif key == "degrees":
                degrees = tuple(int(x) for x in rest.split())
            elif key in polys:
                k, j, c = rest.split()
                polys[key][(int(k), int(j))] = mpq(c)
            else:
                raise ValueError(key)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed line {raw!r}") from exc

    def build(entries):
        if not entries:
            return []
        kmax = max(k for k, _ in entries)
        cols = [[] for _ in range(kmax + 1)]
        for (k, j), c in entries.items():
            col = cols[k]
            col.extend([mpq(0)] * (j + 1 - len(col)))
            col[j] = c
        return cols

    frac = BivariateFraction(build(polys["num"]), build(polys["den"]), m, meta)
    if degrees is not None and degrees != frac.degrees:
        raise ValueError(f"{path}: stored degrees {degrees} do not match the coefficients {frac.degrees}")
    return frac
