"""Smoothing devices: saw-tooth Fourier truncation, the box-indicator
expansion, Gaussian weights, theta duality, the Gaussian lattice sum and its
Poisson dual, the dual cutoff tail, and the Perron step integral."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import mpmath
import numpy as np
from scipy import integrate

from .arith import _row_bounds, n2_max
from .errors import EqualArguments, ParamOutOfRange, PreconditionError
from .qfield import (
    HALF,
    ONE,
    AlphaCoords,
    FieldCtx,
    RingElt,
    dist_omega,
    fx_to_fraction,
    mul_alpha,
    norm,
    to_fx,
)

_TAIL_BITS = 120
_LN2 = math.log(2)


@dataclass(frozen=True)
class SmoothWeights:
    """Parameters of the Gaussian weights w and w-tilde."""

    field: FieldCtx
    x: int
    epsilon: float
    delta: object  # anything to_fx accepts
    alpha: AlphaCoords

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise ParamOutOfRange("epsilon must lie in (0, 1/2]")
        if self.x < 2:
            raise ParamOutOfRange("x must be at least 2")
        d = self.delta_fx
        if not 0 < d <= HALF:
            raise ParamOutOfRange("delta must lie in (0, 1/2]")
        if math.log(d) - 128 * _LN2 < -1000 * math.log(self.x):
            raise ParamOutOfRange("delta below x^-1000")

    @property
    def delta_fx(self) -> int:
        return to_fx(self.delta)

    @property
    def delta_float(self) -> float:
        return self.delta_fx / ONE

    @property
    def N(self) -> float:
        return float(self.x) ** (1.0 - self.epsilon)


# ---------------------------------------------------------------------------
# saw-tooth


def sawtooth_exact(x: float) -> float:
    return x - math.floor(x) - 0.5


def sawtooth_approx_many(x: np.ndarray, J: int) -> np.ndarray:
    """-sum_{1<=j<J} sin(2 pi j x)/(pi j), vectorized over x."""
    x = np.asarray(x, dtype=np.float64)
    r = x - np.floor(x)
    out = np.zeros_like(r)
    for j in range(1, J):
        out -= np.sin(2 * math.pi * ((j * r) % 1.0)) / (math.pi * j)
    return out


def sawtooth_approx(x: float, J: int) -> tuple:
    if J < 1:
        raise PreconditionError("J must be at least 1")
    exact = sawtooth_exact(x)
    approx = float(sawtooth_approx_many(np.array([x]), J)[0])
    return approx, exact, abs(approx - exact)


def sawtooth_bound(x: float, J: int) -> float:
    """min{log 2J, 1/(J||x||)} with 1/0 read as infinity."""
    d = abs(x - round(x))
    return min(math.log(2 * J), math.inf if d == 0 else 1.0 / (J * d))


# ---------------------------------------------------------------------------
# indicator expansion


def _psi_fx(v: int) -> Fraction:
    return Fraction(v % ONE - HALF, ONE)


def indicator_expansion(f: FieldCtx, w: SmoothWeights, y: RingElt) -> tuple:
    """([||y alpha|| < delta], 4d^2 + 2d(Xi_1 + Xi_2) + Xi_1 Xi_2, boundary flag), exact."""
    z = mul_alpha(f, y, w.alpha)
    d = w.delta_fx
    coords = (z.re_omega, z.im_omega)
    xis = [_psi_fx(-c - d) - _psi_fx(-c + d) for c in coords]
    dq = Fraction(d, ONE)
    rhs = 4 * dq * dq + 2 * dq * (xis[0] + xis[1]) + xis[0] * xis[1]
    lhs = 1 if dist_omega(f, z) < d else 0
    boundary = any((c - d) % ONE == 0 or (c + d) % ONE == 0 for c in coords)
    return lhs, rhs, boundary


# ---------------------------------------------------------------------------
# theta kernel W_delta


def _to_mpf(v) -> mpmath.mpf:
    if isinstance(v, (int, Fraction)):
        q = Fraction(v)
        return mpmath.mpf(q.numerator) / q.denominator
    if isinstance(v, str):
        q = Fraction(v)
        return mpmath.mpf(q.numerator) / q.denominator
    return mpmath.mpf(v)


def theta_wdelta(theta, delta) -> tuple:
    """W_delta(theta) summed directly and through its Poisson dual."""
    dl = float(delta)
    if not 0 < dl <= 0.5:
        raise PreconditionError("delta must lie in (0, 1/2]")
    # the dual sum cancels down to about e^{-pi/(4 delta^2)}; carry those bits
    lost = math.pi / (4 * dl * dl) / _LN2
    prec = 64 + _TAIL_BITS + int(math.ceil(lost))
    with mpmath.workprec(prec):
        th = _to_mpf(theta)
        de = _to_mpf(delta)
        th = th - mpmath.floor(th)
        pi = mpmath.pi
        # direct: all terms within sqrt(tail/pi)*delta of the nearest one
        reach = math.sqrt((_TAIL_BITS + 8) * _LN2 / math.pi) * dl + 1
        lo, hi = int(math.floor(float(th) - reach)) - 1, int(math.ceil(float(th) + reach)) + 1
        direct = mpmath.fsum(mpmath.exp(-pi * (th - n) ** 2 / de**2) for n in range(lo, hi + 1))
        # dual: stop once pi delta^2 J^2 exceeds the tail budget plus the cancellation
        jmax = int(math.ceil(math.sqrt(((_TAIL_BITS + 8) * _LN2 + math.pi / (4 * dl * dl)) / (math.pi * dl * dl)))) + 1
        s = mpmath.fsum(mpmath.exp(-pi * de**2 * j * j) * mpmath.cos(2 * pi * j * th) for j in range(1, jmax + 1))
        dual = de * (1 + 2 * s)
        return +direct, +dual


def theta_float(theta: np.ndarray, delta: float) -> np.ndarray:
    """W_delta on an array in double precision; tail beyond +-4 is below 2^-120."""
    r = np.asarray(theta, dtype=np.float64)
    r = r - np.floor(r)
    out = np.zeros_like(r)
    for n in range(-4, 6):
        out += np.exp(-math.pi * (r - n) ** 2 / (delta * delta))
    return out


# ---------------------------------------------------------------------------
# Gaussian lattice sum and its Poisson dual


@dataclass
class GaussResult:
    direct: complex
    sigma0: float
    sigma_star: float
    cls: str
    rel_err: float
    abs_over_R: float
    far_ratio: float

    @property
    def poisson(self) -> float:
        return self.sigma0 + self.sigma_star

    def to_dict(self) -> dict:
        return {
            "direct_re": repr(self.direct.real),
            "direct_im": repr(self.direct.imag),
            "sigma0": repr(self.sigma0),
            "sigma_star": repr(self.sigma_star),
            "poisson": repr(self.poisson),
            "class": self.cls,
            "rel_err": repr(self.rel_err),
            "abs_over_R": repr(self.abs_over_R),
            "far_ratio": repr(self.far_ratio),
        }


def _poisson_terms(f: FieldCtx, R, b: Fraction, c: Fraction, prec: int) -> tuple:
    """(Sigma_0, Sigma_*) of the dual sum, positive terms, as mpf."""
    with mpmath.workprec(prec):
        R = mpmath.mpf(R)
        im2 = mpmath.mpf(f.d4) / 4
        reo = mpmath.mpf(f.trace_t) / 2
        bm = mpmath.mpf(b.numerator) / b.denominator
        cm = mpmath.mpf(c.numerator) / c.denominator

        def expo(k1, k2):
            w1 = k1 - bm
            w2 = k2 - cm - reo * w1
            return mpmath.pi * R * (w1 * w1 + w2 * w2 / im2)

        k1c = int(mpmath.nint(bm))
        k2c = int(mpmath.nint(cm + reo * (k1c - bm)))
        e0 = expo(k1c, k2c)
        budget = float(e0) + (prec + 16) * _LN2
        r1 = math.sqrt(budget / (math.pi * float(R))) + 1
        pref = R / mpmath.sqrt(im2)
        sig0 = pref * mpmath.exp(-e0)
        rest = []
        bf, cf, rf = float(bm), float(cm), float(reo)
        for k1 in range(int(math.floor(bf - r1)), int(math.ceil(bf + r1)) + 1):
            ctr = cf + rf * (k1 - bf)
            r2 = math.sqrt(float(im2)) * r1 + 1
            for k2 in range(int(math.floor(ctr - r2)), int(math.ceil(ctr + r2)) + 1):
                if k1 == k1c and k2 == k2c:
                    continue
                e = expo(k1, k2)
                if e <= budget:
                    rest.append(mpmath.exp(-e))
        sig_star = pref * mpmath.fsum(rest)
        return sig0, sig_star


def _direct_lattice_sum(f: FieldCtx, R: int, b_fx: int, c_fx: int, prec: int) -> tuple:
    """sum over N(m) <= 200 R of exp(-pi N(m)/R) e(m1 b + m2 c), in gmpy2 at prec bits.

    Returned exactly as the (numerator, denominator) pairs of the real and
    imaginary parts.
    """
    ctx = gmpy2.get_context().copy()
    ctx.precision = prec
    with gmpy2.context(ctx):
        pi = gmpy2.const_pi()
        Rm = gmpy2.mpfr(R)
        two_pi_i = gmpy2.mpc(0, 2 * pi)
        scale = gmpy2.mpfr(2) ** 128
        step = gmpy2.exp(two_pi_i * (gmpy2.mpfr(b_fx % ONE) / scale))
        q = gmpy2.exp(-2 * pi / Rm)
        im2 = gmpy2.mpfr(f.d4) / 4
        half_t = gmpy2.mpfr(f.trace_t) / 2
        X = int(200 * R)
        acc = gmpy2.mpc(0)
        m2max = n2_max(f, X)
        for m2 in range(-m2max, m2max + 1):
            bd = _row_bounds(f, m2, X)
            if bd is None:
                continue
            lo, hi = bd
            s0 = lo + m2 * half_t
            g = gmpy2.exp(-pi * (s0 * s0 + m2 * m2 * im2) / Rm)
            h = gmpy2.exp(-pi * (2 * s0 + 1) / Rm)
            ph = (lo * b_fx + m2 * c_fx) % ONE
            z = gmpy2.exp(two_pi_i * (gmpy2.mpfr(ph) / scale))
            row = gmpy2.mpc(0)
            for _ in range(hi - lo + 1):
                row += g * z
                z *= step
                g *= h
                h *= q
            acc += row
        return acc.real.as_integer_ratio(), acc.imag.as_integer_ratio()


def gauss_lattice_sum(f: FieldCtx, R, theta: AlphaCoords, x_eps: float) -> GaussResult:
    """sum_m exp(-pi N(m)/R) e(Im_w(m theta)) directly and through Poisson summation."""
    if R < 1:
        raise PreconditionError("R must be at least 1")
    R = int(R) if float(R).is_integer() else R
    if not isinstance(R, int):
        raise PreconditionError("R must be an integer in this implementation")
    b_fx = theta.im_omega  # coefficient of m1 in Im_w(m theta)
    c_fx = theta.re_omega + f.xi2 * theta.im_omega  # coefficient of m2
    b, c = fx_to_fraction(b_fx), fx_to_fraction(c_fx)
    s0, ss = _poisson_terms(f, R, b, c, 160)
    total = s0 + ss
    # direct terms are O(1) and cancel down to `total`; carry the lost bits plus 80
    lost = max(0, -int(mpmath.floor(mpmath.log(total, 2))))
    prec = 80 + lost + int(math.log2(200 * R * 4 + 2)) + 16
    (rn, rd), (jn, jd) = _direct_lattice_sum(f, R, b_fx, c_fx, prec)
    with mpmath.workprec(prec):
        dmp = mpmath.mpc(mpmath.mpf(rn) / rd, mpmath.mpf(jn) / jd)
        rel = float(abs(dmp - total) / abs(total))
    direct = complex(dmp)
    dist = dist_omega(f, theta) / ONE
    cls = "near" if dist < x_eps / math.sqrt(R) else "far"
    a = abs(direct)
    return GaussResult(direct, float(s0), float(ss), cls, rel, a / R, a / (R * math.exp(-x_eps)))


# ---------------------------------------------------------------------------
# dual cutoff


def cutoff_index(f: FieldCtx, w: SmoothWeights) -> int:
    c = (1 + abs(f.re_omega)) / f.im_omega
    return int(math.floor(c / w.delta_float * w.x ** (w.epsilon / 2)))


def _smooth_cutoff_tail(f: FieldCtx, x: int, epsilon: float, delta: float) -> mpmath.mpf:
    c = (1 + abs(f.re_omega)) / f.im_omega
    K = int(math.floor(c / delta * x ** (epsilon / 2)))
    with mpmath.workprec(192):
        dl = mpmath.mpf(delta)
        a = mpmath.pi * dl * dl
        head = 1 + 2 * mpmath.fsum(mpmath.exp(-a * j * j) for j in range(1, K + 1))
        tail_terms = []
        j = K + 1
        while True:
            t = mpmath.exp(-a * j * j)
            tail_terms.append(t)
            if not tail_terms[0] or t < tail_terms[0] * mpmath.mpf(2) ** -_TAIL_BITS:
                break
            j += 1
        t1 = 2 * mpmath.fsum(tail_terms)
        return 2 * head * t1 + t1 * t1


def smooth_cutoff_tail(f: FieldCtx, w: SmoothWeights) -> mpmath.mpf:
    """Sum of exp(-pi delta^2 (j1^2 + j2^2)) over max|j_i| beyond the cutoff."""
    return _smooth_cutoff_tail(f, w.x, w.epsilon, w.delta_float)


def cutoff_target(w: SmoothWeights) -> float:
    return w.delta_float**2 * float(w.x) ** -10


# ---------------------------------------------------------------------------
# Perron step integral


def perron_indicator(gamma: float, rho: float, T: float) -> tuple:
    """(1/pi) int_{-T}^{T} e^{i gamma t} sin(rho t)/t dt and the bound 4/(T|gamma-rho|)."""
    if gamma <= 0 or rho <= 0:
        raise PreconditionError("gamma and rho must be positive")
    if T < 1:
        raise PreconditionError("T must be at least 1")
    if gamma == rho:
        raise EqualArguments("gamma and rho must differ")
    limit = max(200, int((gamma + rho) * T / math.pi) * 4 + 50)

    def sinc_part(t):
        return rho * np.sinc(rho * t / math.pi)

    opts = dict(limit=limit, epsabs=1e-11, epsrel=1e-11)
    re, _ = integrate.quad(lambda t: math.cos(gamma * t) * sinc_part(t), 0.0, T, **opts)
    im, _ = integrate.quad(lambda t: math.sin(gamma * t) * sinc_part(t), -T, T, **opts)
    imag = im / math.pi
    if abs(imag) >= 1e-8:
        raise AssertionError(f"imaginary part {imag} did not vanish")
    return 2 * re / math.pi, 4.0 / (T * abs(gamma - rho))


def perron_closed_form(gamma: float, rho: float, T: float) -> float:
    """Same integral via the sine integral, an independent route."""
    from scipy.special import sici

    return float((sici((rho + gamma) * T)[0] + math.copysign(1, rho - gamma) * sici(abs(rho - gamma) * T)[0]) / math.pi)


# ---------------------------------------------------------------------------
# weights


def f_N(w: SmoothWeights, z: RingElt) -> float:
    return math.exp(-math.pi * norm(w.field, z) / w.N)


def weight_eval(w: SmoothWeights, z: RingElt) -> tuple:
    """(w(z), w-tilde(z)) = (delta^2 f_N(z), f_N(z) W(Im_w(z alpha)) W(Re_w(z alpha) + xi2 Im_w(z alpha)))."""
    f = w.field
    fn = f_N(w, z)
    za = mul_alpha(f, z, w.alpha)
    t1 = (za.im_omega % ONE) / ONE
    t2 = ((za.re_omega + f.xi2 * za.im_omega) % ONE) / ONE
    dl = w.delta_float
    W = theta_float(np.array([t1, t2]), dl)
    return dl * dl * fn, fn * float(W[0]) * float(W[1])


def weight_arrays(w: SmoothWeights, n1: np.ndarray, n2: np.ndarray) -> tuple:
    """Vectorized weight_eval over coordinate arrays, float64."""
    from .qfield import frac_u64

    f = w.field
    nn = n1 * n1 + f.trace_t * n1 * n2 + f.norm_omega * n2 * n2
    fn = np.exp(-math.pi * nn.astype(np.float64) / w.N)
    re_u, im_u = frac_u64(f, w.alpha, n1, n2)
    t2_u = re_u + np.uint64(f.xi2 % (1 << 64)) * im_u  # wraps mod 2^64
    sc = 2.0**-64
    W1 = theta_float(im_u.astype(np.float64) * sc, w.delta_float)
    W2 = theta_float(t2_u.astype(np.float64) * sc, w.delta_float)
    dl = w.delta_float
    return dl * dl * fn, fn * W1 * W2
