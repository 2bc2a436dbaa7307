"""Enumeration, sieving, factorization and multiplicative functions over Z[omega]."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Iterator

import numpy as np
from sympy import factorint

from .errors import BothZero, BoundTooLarge, PreconditionError, ZeroElement
from .qfield import (
    UNIT_ONE,
    FieldCtx,
    RingElt,
    exact_div,
    norm,
    ring_mul,
)

MAX_SIEVE_NORM = 2**34


def is_canonical(f: FieldCtx, n: RingElt) -> bool:
    """Argument in [0, 2pi/u), decided by integer sign tests."""
    if f.unit_count == 2:
        return n.n2 > 0 or (n.n2 == 0 and n.n1 > 0)
    # d=-1: Re > 0, Im >= 0.  d=-3: Im >= 0 and Im < sqrt3*Re, which reduces to n1 > 0.
    return n.n1 > 0 and n.n2 >= 0


def canonical_mask(f: FieldCtx, n1: np.ndarray, n2: np.ndarray) -> np.ndarray:
    if f.unit_count == 2:
        return (n2 > 0) | ((n2 == 0) & (n1 > 0))
    return (n1 > 0) & (n2 >= 0)


def canonical_associate(f: FieldCtx, n: RingElt) -> RingElt:
    if not n:
        raise ZeroElement("zero has no canonical associate")
    for u in f.units:
        c = ring_mul(f, u, n)
        if is_canonical(f, c):
            return c
    raise AssertionError("no canonical associate found")  # pragma: no cover


def order_key(f: FieldCtx, n: RingElt) -> tuple:
    """The fixed total order: by norm, then (n2, n1)."""
    return (norm(f, n), n.n2, n.n1)


# ---------------------------------------------------------------------------
# lattice enumeration


def _row_bounds(f: FieldCtx, n2: int, x: int) -> tuple:
    """n1 range of row n2 inside N <= x, or None if the row is empty."""
    r = 4 * x - f.d4 * n2 * n2
    if r < 0:
        return None
    w = math.isqrt(r)
    lo = -((w + f.trace_t * n2) // 2)  # ceil((-w - t n2)/2)
    hi = (w - f.trace_t * n2) // 2
    return (lo, hi) if lo <= hi else None


def n2_max(f: FieldCtx, x: int) -> int:
    return math.isqrt(4 * x // f.d4) if x > 0 else 0


def lattice_points(f: FieldCtx, y: int, lo: int = 0, n2_nonneg: bool = False) -> tuple:
    """All (n1, n2) with lo <= N(n) <= y, row-major over (n2, n1). Returns int64 arrays."""
    if y < 0 or y < lo:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    m = n2_max(f, y)
    rows1, rows2 = [], []
    for b in range(0 if n2_nonneg else -m, m + 1):
        bd = _row_bounds(f, b, y)
        if bd is None:
            continue
        a = np.arange(bd[0], bd[1] + 1, dtype=np.int64)
        rows1.append(a)
        rows2.append(np.full(len(a), b, dtype=np.int64))
    n1 = np.concatenate(rows1)
    n2 = np.concatenate(rows2)
    nn = n1 * n1 + f.trace_t * n1 * n2 + f.norm_omega * n2 * n2
    if lo > 0:
        keep = nn >= lo
        n1, n2, nn = n1[keep], n2[keep], nn[keep]
    return n1, n2, nn


def enumerate_by_norm(f: FieldCtx, x: int) -> Iterator[RingElt]:
    """Canonical representatives with 0 < N <= x in the fixed total order."""
    if x < 1:
        return iter(())
    n1, n2, nn = lattice_points(f, x, lo=1, n2_nonneg=True)
    keep = canonical_mask(f, n1, n2)
    n1, n2, nn = n1[keep], n2[keep], nn[keep]
    idx = np.lexsort((n1, n2, nn))
    return (RingElt(int(n1[i]), int(n2[i])) for i in idx)


# ---------------------------------------------------------------------------
# sieve


@dataclass
class PrimeTable:
    """Canonical prime elements of norm <= norm_bound, ordered by (norm, n2, n1).

    The composite grid covers rows n2 in [-n2max, n2max] and columns
    n1 in [-n1max, n1max]; True marks a proper multiple of a smaller prime.
    """

    field: FieldCtx
    norm_bound: int
    p1: np.ndarray
    p2: np.ndarray
    pnorm: np.ndarray
    grid: np.ndarray = dc_field(repr=False)
    n1max: int = 0
    n2max: int = 0

    @property
    def primes(self) -> list:
        return [(RingElt(int(a), int(b)), int(n)) for a, b, n in zip(self.p1, self.p2, self.pnorm)]

    def __len__(self) -> int:
        return len(self.pnorm)

    def count_upto(self, y: int) -> int:
        return int(np.searchsorted(self.pnorm, y, side="right"))

    def in_range(self, lo: int, hi: int) -> tuple:
        """Canonical primes with lo <= N < hi."""
        a = int(np.searchsorted(self.pnorm, lo, side="left"))
        b = int(np.searchsorted(self.pnorm, hi, side="left"))
        return self.p1[a:b], self.p2[a:b], self.pnorm[a:b]

    def is_composite(self, n1: int, n2: int) -> bool:
        return bool(self.grid[n2 + self.n2max, n1 + self.n1max])


def _mark_chunk(f, grid, width, off1, off2, a, b, k1, k2):
    r1 = a * k1 + f.xi1 * b * k2
    r2 = a * k2 + b * k1 + f.xi2 * b * k2
    grid[(r2 + off2) * width + (r1 + off1)] = True


_CHUNK = 1 << 20


def _sieve(f: FieldCtx, x: int) -> PrimeTable:
    m2 = n2_max(f, x)
    m1 = math.isqrt(x) + (f.trace_t * m2 + 1) // 2 + 1
    width = 2 * m1 + 1
    grid = np.zeros((2 * m2 + 1) * width, dtype=bool)
    root = math.isqrt(x)
    if root >= 2:
        base = sieve_primes(f, root)
        y_max = x // int(base.pnorm[0]) if len(base) else 0
        k1, k2, kn = lattice_points(f, y_max, lo=2)
        order = np.argsort(kn, kind="stable")
        k1, k2, kn = k1[order], k2[order], kn[order]
        for a, b, pn in zip(base.p1.tolist(), base.p2.tolist(), base.pnorm.tolist()):
            stop = int(np.searchsorted(kn, x // pn, side="right"))
            for s in range(0, stop, _CHUNK):
                e = min(stop, s + _CHUNK)
                _mark_chunk(f, grid, width, m1, m2, a, b, k1[s:e], k2[s:e])
        del k1, k2, kn
    grid = grid.reshape(2 * m2 + 1, width)
    out1, out2 = [], []
    for b in range(0, m2 + 1):
        bd = _row_bounds(f, b, x)
        if bd is None:
            continue
        lo, hi = bd
        if f.unit_count != 2 or b == 0:
            lo = max(lo, 1)
        if lo > hi:
            continue
        row = grid[b + m2, lo + m1: hi + m1 + 1]
        a = np.nonzero(~row)[0].astype(np.int64) + lo
        out1.append(a)
        out2.append(np.full(len(a), b, dtype=np.int64))
    p1 = np.concatenate(out1) if out1 else np.zeros(0, dtype=np.int64)
    p2 = np.concatenate(out2) if out2 else np.zeros(0, dtype=np.int64)
    pn = p1 * p1 + f.trace_t * p1 * p2 + f.norm_omega * p2 * p2
    keep = pn >= 2
    p1, p2, pn = p1[keep], p2[keep], pn[keep]
    idx = np.lexsort((p1, p2, pn))
    return PrimeTable(f, x, p1[idx], p2[idx], pn[idx], grid, m1, m2)


@lru_cache(maxsize=32)
def _sieve_cached(d: int, x: int) -> PrimeTable:
    from .qfield import make_field

    return _sieve(make_field(d), x)


def sieve_primes(f: FieldCtx, x: int) -> PrimeTable:
    """Grid sieve of Eratosthenes over the ellipse N <= x."""
    x = int(x)
    if x < 2:
        raise PreconditionError("sieve bound must be at least 2")
    if x > MAX_SIEVE_NORM:
        raise BoundTooLarge(f"x={x} exceeds the 2^34 memory guard")
    return _sieve_cached(f.d, x)


def prime_ideal_count(f: FieldCtx, x: int) -> int:
    if x < 2:
        return 0
    return sieve_primes(f, x).count_upto(x)


# ---------------------------------------------------------------------------
# factorization


@dataclass(frozen=True)
class Factorization:
    unit: RingElt
    factors: tuple  # ((canonical prime, exponent), ...)

    def expand(self, f: FieldCtx) -> RingElt:
        out = self.unit
        for p, e in self.factors:
            for _ in range(e):
                out = ring_mul(f, out, p)
        return out


@lru_cache(maxsize=65536)
def _primes_above(d: int, p: int) -> tuple:
    from .qfield import make_field

    f = make_field(d)
    found = set()
    b = 0
    while f.d4 * b * b <= 4 * p:
        r = 4 * p - f.d4 * b * b
        s = math.isqrt(r)
        if s * s == r:
            for sg in (s, -s):
                num = sg - f.trace_t * b
                if num % 2 == 0:
                    found.add(canonical_associate(f, RingElt(num // 2, b)))
        b += 1
    if not found:
        return (RingElt(p, 0),)
    return tuple(sorted(found, key=lambda n: order_key(f, n)))


def primes_above(f: FieldCtx, p: int) -> tuple:
    """Canonical prime elements dividing the rational prime p."""
    return _primes_above(f.d, int(p))


def factor(f: FieldCtx, n: RingElt) -> Factorization:
    nn = norm(f, n)
    if nn == 0:
        raise ZeroElement("cannot factor zero")
    rem = n
    out = []
    for p in sorted(factorint(nn)):
        for pi in primes_above(f, p):
            k = 0
            while True:
                q = exact_div(f, rem, pi)
                if q is None:
                    break
                rem = q
                k += 1
            if k:
                out.append((pi, k))
    assert norm(f, rem) == 1, "factorization left a non-unit cofactor"
    out.sort(key=lambda pe: order_key(f, pe[0]))
    return Factorization(rem, tuple(out))


def is_prime(f: FieldCtx, n: RingElt) -> bool:
    if not n:
        return False
    fac = factor(f, n)
    return len(fac.factors) == 1 and fac.factors[0][1] == 1


def moebius(f: FieldCtx, n: RingElt) -> int:
    fac = factor(f, n)
    if any(e > 1 for _, e in fac.factors):
        return 0
    return -1 if len(fac.factors) % 2 else 1


def d_k(f: FieldCtx, n: RingElt, k: int) -> int:
    if k < 2:
        raise PreconditionError("k must be at least 2")
    out = 1
    for _, e in factor(f, n).factors:
        out *= math.comb(e + k - 1, k - 1)
    return out


def gcd(f: FieldCtx, a: RingElt, b: RingElt) -> RingElt:
    """Canonical generator of the ideal (a, b), by peeling primes of the smaller argument."""
    if not a and not b:
        raise BothZero("gcd(0, 0) is undefined")
    if not a:
        return canonical_associate(f, b)
    if not b:
        return canonical_associate(f, a)
    small, other = (a, b) if norm(f, a) <= norm(f, b) else (b, a)
    g = UNIT_ONE
    for pi, e in factor(f, small).factors:
        for _ in range(e):
            q = exact_div(f, other, pi)
            if q is None:
                break
            other = q
            g = ring_mul(f, g, pi)
    return canonical_associate(f, g)
