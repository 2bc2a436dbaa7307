"""Exact arithmetic in Z[omega] for the nine class-number-one imaginary quadratic fields.

Elements are pairs (n1, n2) meaning n1 + n2*omega. Real targets such as alpha are
stored in omega-coordinates as fixed-point integers with FRAC_BITS fractional bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from decimal import Decimal
from typing import Iterable, Union

import mpmath
import numpy as np

from .errors import (
    DivisionByZero,
    NotClassNumberOne,
    NotDivisible,
    NotNegativeSquarefree,
    PrecisionLoss,
)

FRAC_BITS = 128
ONE = 1 << FRAC_BITS
HALF = ONE >> 1
HEEGNER = (-1, -2, -3, -7, -11, -19, -43, -67, -163)

# working precision for rectangular inputs, comfortably above the 160-bit contract
_RECT_BITS = 192


@dataclass(frozen=True, order=True)
class RingElt:
    n1: int
    n2: int

    def __add__(self, other: "RingElt") -> "RingElt":
        return RingElt(self.n1 + other.n1, self.n2 + other.n2)

    def __sub__(self, other: "RingElt") -> "RingElt":
        return RingElt(self.n1 - other.n1, self.n2 - other.n2)

    def __neg__(self) -> "RingElt":
        return RingElt(-self.n1, -self.n2)

    def __bool__(self) -> bool:
        return bool(self.n1 or self.n2)

    def __str__(self) -> str:
        return f"{self.n1}{self.n2:+d}w"


ZERO = RingElt(0, 0)
UNIT_ONE = RingElt(1, 0)


@dataclass(frozen=True)
class FieldCtx:
    d: int
    omega_kind: str
    trace_t: int
    xi1: int
    xi2: int
    unit_count: int
    norm_omega: int
    abs_d: int
    im_divisor: int
    im_omega_fx: int
    units: tuple

    @property
    def im_omega(self) -> float:
        return math.sqrt(self.abs_d) / self.im_divisor

    @property
    def re_omega(self) -> float:
        return self.trace_t / 2

    @property
    def area_lambda(self) -> float:
        return self.im_omega

    @property
    def gintner_C(self) -> float:
        return math.sqrt(6) / math.pi * self.area_lambda

    @property
    def d4(self) -> int:
        """4*(Im omega)^2 as an integer, so 4N(n) = (2n1 + t n2)^2 + d4*n2^2."""
        return self.abs_d * (4 // self.im_divisor**2)

    @property
    def basis_matrix(self) -> tuple:
        return ((1.0, self.re_omega), (0.0, self.im_omega))

    def im_omega_mp(self, prec: int = 256) -> mpmath.mpf:
        with mpmath.workprec(prec):
            return mpmath.sqrt(self.abs_d) / self.im_divisor

    def __repr__(self) -> str:
        return f"FieldCtx(d={self.d})"


def _squarefree(n: int) -> bool:
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


_FIELDS: dict = {}


def make_field(d: int) -> FieldCtx:
    """Build the context for Q(sqrt(d)) with the canonical omega."""
    d = int(d)
    if d >= 0 or not _squarefree(-d):
        raise NotNegativeSquarefree(f"d={d} is not a negative square-free integer")
    if d not in HEEGNER:
        raise NotClassNumberOne(f"d={d} is not one of {HEEGNER}")
    if d in _FIELDS:
        return _FIELDS[d]
    if d % 4 == 1:
        kind, t, xi1, xi2, div = "half_plus", 1, (d - 1) // 4, 1, 2
        n_omega = (1 - d) // 4
    else:
        kind, t, xi1, xi2, div = "sqrt_d", 0, d, 0, 1
        n_omega = -d
    im_fx = math.isqrt(-d << (2 * FRAC_BITS)) // div
    units = []
    for b in (0, 1, -1):
        for a in range(-2, 3):
            if a * a + t * a * b + n_omega * b * b == 1:
                units.append(RingElt(a, b))
    units.sort(key=lambda u: (u.n2 != 0, u.n1 < 0, u.n2 < 0, u.n1, u.n2))
    f = FieldCtx(
        d=d, omega_kind=kind, trace_t=t, xi1=xi1, xi2=xi2,
        unit_count=len(units), norm_omega=n_omega, abs_d=-d, im_divisor=div,
        im_omega_fx=im_fx, units=tuple(units),
    )
    _FIELDS[d] = f
    return f


def all_fields() -> list:
    return [make_field(d) for d in HEEGNER]


def norm(f: FieldCtx, n: RingElt) -> int:
    return n.n1 * n.n1 + f.trace_t * n.n1 * n.n2 + f.norm_omega * n.n2 * n.n2


def ring_mul(f: FieldCtx, m: RingElt, n: RingElt) -> RingElt:
    p = m.n2 * n.n2
    return RingElt(m.n1 * n.n1 + f.xi1 * p, m.n1 * n.n2 + m.n2 * n.n1 + f.xi2 * p)


def ring_pow(f: FieldCtx, n: RingElt, e: int) -> RingElt:
    out = UNIT_ONE
    for _ in range(e):
        out = ring_mul(f, out, n)
    return out


def conj(f: FieldCtx, n: RingElt) -> RingElt:
    return RingElt(n.n1 + f.trace_t * n.n2, -n.n2)


def exact_div(f: FieldCtx, m: RingElt, n: RingElt):
    """m/n if it lies in Z[omega], else None."""
    nn = norm(f, n)
    if nn == 0:
        raise DivisionByZero("division by the zero element")
    p = ring_mul(f, m, conj(f, n))
    q1, r1 = divmod(p.n1, nn)
    if r1:
        return None
    q2, r2 = divmod(p.n2, nn)
    if r2:
        return None
    return RingElt(q1, q2)


def try_div(f: FieldCtx, m: RingElt, n: RingElt) -> RingElt:
    q = exact_div(f, m, n)
    if q is None:
        raise NotDivisible(f"{n} does not divide {m}")
    return q


def is_unit(f: FieldCtx, n: RingElt) -> bool:
    return norm(f, n) == 1


# ---------------------------------------------------------------------------
# fixed-point omega-coordinates


@dataclass(frozen=True)
class AlphaCoords:
    """(Re_w, Im_w) of a complex number as integers scaled by 2**FRAC_BITS."""

    re_omega: int
    im_omega: int

    @classmethod
    def from_fractions(cls, re, im) -> "AlphaCoords":
        return cls(fx_from_rational(re), fx_from_rational(im))

    def as_floats(self) -> tuple:
        return fx_to_float(self.re_omega), fx_to_float(self.im_omega)

    def __add__(self, n: RingElt) -> "AlphaCoords":
        return AlphaCoords(self.re_omega + n.n1 * ONE, self.im_omega + n.n2 * ONE)


def fx_from_rational(v) -> int:
    """Round an exact rational (int, Fraction, Decimal, str) to fixed point."""
    q = Fraction(v) if not isinstance(v, Fraction) else v
    return _round_div(q.numerator << FRAC_BITS, q.denominator)


def fx_to_float(v: int) -> float:
    return v / ONE


def fx_to_fraction(v: int) -> Fraction:
    return Fraction(v, ONE)


def _round_div(a: int, b: int) -> int:
    """Nearest integer to a/b for b > 0, halves away from zero."""
    q, r = divmod(abs(a), b)
    if 2 * r >= b:
        q += 1
    return q if a >= 0 else -q


def frac_dist(v: int) -> int:
    """Distance of a fixed-point value to the nearest integer, in fixed point."""
    r = v % ONE
    return min(r, ONE - r)


def dist_omega(f: FieldCtx, z: AlphaCoords) -> int:
    return max(frac_dist(z.re_omega), frac_dist(z.im_omega))


def im_omega_of_product(f: FieldCtx, l: RingElt, rho: AlphaCoords) -> int:
    return l.n2 * rho.re_omega + (l.n1 + l.n2 * f.xi2) * rho.im_omega


def re_omega_of_product(f: FieldCtx, l: RingElt, rho: AlphaCoords) -> int:
    return l.n1 * rho.re_omega + f.xi1 * l.n2 * rho.im_omega


def mul_alpha(f: FieldCtx, n: RingElt, alpha: AlphaCoords) -> AlphaCoords:
    """Omega-coordinates of n*alpha, exact in fixed point."""
    return AlphaCoords(re_omega_of_product(f, n, alpha), im_omega_of_product(f, n, alpha))


def sub_elt(alpha: AlphaCoords, a: RingElt) -> AlphaCoords:
    return AlphaCoords(alpha.re_omega - a.n1 * ONE, alpha.im_omega - a.n2 * ONE)


RealLike = Union[int, Fraction, Decimal, str, mpmath.mpf]


def _scaled(v: RealLike, bits: int) -> int:
    if isinstance(v, bool):
        raise TypeError("bool is not a real input")
    if isinstance(v, float):
        raise PrecisionLoss("float inputs carry 53 bits; pass a decimal string, Fraction or mpf")
    if isinstance(v, mpmath.mpf):
        if mpmath.mp.prec < 160:
            raise PrecisionLoss(f"mpmath working precision {mpmath.mp.prec} < 160 bits")
        return int(mpmath.nint(mpmath.ldexp(v, bits)))
    q = Fraction(str(v)) if isinstance(v, str) else Fraction(v)
    return _round_div(q.numerator << bits, q.denominator)


def rect_to_omega(f: FieldCtx, re: RealLike, im: RealLike) -> AlphaCoords:
    """Convert Re/Im to omega-coordinates: Im_w = im/Im(omega), Re_w = re - Im_w*Re(omega)."""
    K = _RECT_BITS
    re_k = _scaled(re, K)
    im_k = _scaled(im, K)
    s = math.isqrt(f.abs_d << (2 * K))  # sqrt|d| * 2^K
    imw_k = _round_div(im_k * f.im_divisor << K, s)
    rew_2k = 2 * re_k - f.trace_t * imw_k  # twice Re_w, scale 2^K
    shift = K - FRAC_BITS
    return AlphaCoords(_round_div(rew_2k, 2 << shift), _round_div(imw_k, 1 << shift))


def omega_to_rect(f: FieldCtx, z: AlphaCoords, prec: int = 256) -> tuple:
    with mpmath.workprec(prec):
        re_w = mpmath.ldexp(z.re_omega, -FRAC_BITS)
        im_w = mpmath.ldexp(z.im_omega, -FRAC_BITS)
        return re_w + im_w * mpmath.mpf(f.trace_t) / 2, im_w * f.im_omega_mp(prec)


PRESETS = {
    "e_pi": (lambda: mpmath.e, lambda: mpmath.pi),
    "sqrt2_sqrt3": (lambda: mpmath.sqrt(2), lambda: mpmath.sqrt(3)),
    "log2_gamma": (lambda: mpmath.log(2), lambda: mpmath.euler),
}


def preset_rect(name: str, prec: int = 256) -> tuple:
    if name not in PRESETS:
        raise KeyError(name)
    with mpmath.workprec(prec):
        re_fn, im_fn = PRESETS[name]
        return +re_fn(), +im_fn()


def alpha_from_spec(f: FieldCtx, spec: str) -> AlphaCoords:
    """Parse a preset name or an 're,im' decimal pair (taken as exact decimals)."""
    spec = spec.strip()
    if spec in PRESETS:
        re, im = preset_rect(spec)
        with mpmath.workprec(256):
            return rect_to_omega(f, re, im)
    parts = [p.strip() for p in spec.replace(";", ",").split(",")]
    if len(parts) != 2:
        from .errors import ParamError

        raise ParamError(f"alpha must be a preset {sorted(PRESETS)} or 're,im'; got {spec!r}")
    try:
        return rect_to_omega(f, Decimal(parts[0]), Decimal(parts[1]))
    except ArithmeticError as exc:
        from .errors import ParamError

        raise ParamError(f"cannot parse alpha {spec!r}") from exc


# ---------------------------------------------------------------------------
# vectorised helpers (numpy) used by the bulk scanners

_U64_SCALE = 2.0**-64


def _top64(v: int) -> np.uint64:
    return np.uint64((v % ONE) >> (FRAC_BITS - 64))


def frac_u64(f: FieldCtx, alpha: AlphaCoords, n1: np.ndarray, n2: np.ndarray) -> tuple:
    """Fractional parts of Re_w(n alpha), Im_w(n alpha) as uint64 numerators of 2^-64.

    alpha is truncated to 64 fractional bits, so the error is at most
    (|n1| + |xi1 n2|) * 2^-64 for Re and (|n2| + |n1 + xi2 n2|) * 2^-64 for Im.
    """
    a1 = _top64(alpha.re_omega)
    a2 = _top64(alpha.im_omega)
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    u1 = n1.astype(np.uint64)
    with np.errstate(over="ignore"):
        re = u1 * a1 + (n2 * f.xi1).astype(np.uint64) * a2
        im = n2.astype(np.uint64) * a1 + (n1 + n2 * f.xi2).astype(np.uint64) * a2
    return re, im


def u64_dist(u: np.ndarray) -> np.ndarray:
    """Distance to the nearest integer of u * 2^-64, as float64."""
    u = np.asarray(u, dtype=np.uint64)
    other = (~u) + np.uint64(1)
    return np.minimum(u, other).astype(np.float64) * _U64_SCALE


def u64_phase(u: np.ndarray) -> np.ndarray:
    """e(u * 2^-64) as complex128."""
    ang = np.asarray(u, dtype=np.uint64).astype(np.float64) * (2 * math.pi * _U64_SCALE)
    return np.exp(1j * ang)


def u64_error_bound(f: FieldCtx, n1: np.ndarray, n2: np.ndarray) -> float:
    if len(n1) == 0:
        return 0.0
    a = np.abs(np.asarray(n1, dtype=np.int64))
    b = np.abs(np.asarray(n2, dtype=np.int64))
    worst = int(max((a + abs(f.xi1) * b).max(), (b + a + f.xi2 * b).max())) + 2
    return worst * _U64_SCALE + 2.0**-52


def dist_omega_many(f: FieldCtx, alpha: AlphaCoords, n1, n2) -> np.ndarray:
    """Approximate ||n alpha||_w for arrays; see u64_error_bound for the error."""
    re, im = frac_u64(f, alpha, n1, n2)
    return np.maximum(u64_dist(re), u64_dist(im))


def dist_omega_exact(f: FieldCtx, alpha: AlphaCoords, n1: int, n2: int) -> int:
    return dist_omega(f, mul_alpha(f, RingElt(int(n1), int(n2)), alpha))


def below_mask(f: FieldCtx, alpha: AlphaCoords, n1, n2, delta_fx: int, strict: bool = True) -> np.ndarray:
    """Exact mask of ||n alpha||_w < delta (or <= if not strict).

    A fast uint64 pass decides all points whose distance is clearly away from
    delta; the few within the error margin are recomputed in exact fixed point.
    """
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    approx = dist_omega_many(f, alpha, n1, n2)
    delta = delta_fx / ONE
    margin = 4 * u64_error_bound(f, n1, n2) + abs(delta) * 2.0**-50
    mask = approx < delta if strict else approx <= delta
    if margin > 2.0**-20:
        unsure = np.ones(len(n1), dtype=bool)
    else:
        unsure = np.abs(approx - delta) <= margin
    for i in np.nonzero(unsure)[0]:
        dv = dist_omega_exact(f, alpha, int(n1[i]), int(n2[i]))
        mask[i] = dv < delta_fx if strict else dv <= delta_fx
    return mask


def as_elt(v: Union[RingElt, Iterable[int]]) -> RingElt:
    if isinstance(v, RingElt):
        return v
    a, b = v
    return RingElt(int(a), int(b))


def to_fx(v) -> int:
    """Fixed-point value of a real parameter (int, float, Fraction, Decimal or str), exact."""
    if isinstance(v, float):
        return fx_from_rational(Fraction(v))
    if isinstance(v, str):
        return fx_from_rational(Fraction(Decimal(v.strip())))
    return fx_from_rational(v)
