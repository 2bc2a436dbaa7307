"""Diophantine approximation of alpha by ratios a/q of ring elements, and the
lower bounds for ||n alpha||_w that follow from a good approximation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .arith import enumerate_by_norm, gcd, is_canonical, lattice_points
from .errors import AlphaLooksRational, PreconditionError
from .qfield import (
    ONE,
    AlphaCoords,
    FieldCtx,
    RingElt,
    _round_div,
    dist_omega,
    exact_div,
    below_mask,
    mul_alpha,
    norm,
    ring_mul,
    sub_elt,
    to_fx,
)
from .report import BoundReport, Timer

_RATIONAL_EPS_SQ = Fraction(1, 2**200)  # |gamma| < 2^-100


@dataclass(frozen=True)
class Approximation:
    a: RingElt
    q: RingElt
    gamma_abs_sq: Fraction
    C: float
    alpha: AlphaCoords = field(repr=False, compare=False, default=None)

    @property
    def gamma_abs(self) -> float:
        return math.sqrt(self.gamma_abs_sq)

    def norm_q(self, f: FieldCtx) -> int:
        return norm(f, self.q)

    def to_dict(self, f: FieldCtx) -> dict:
        nq = norm(f, self.q)
        return {
            "a": [self.a.n1, self.a.n2],
            "q": [self.q.n1, self.q.n2],
            "norm_q": nq,
            "gamma": mpmath.nstr(mpmath.sqrt(mpmath.mpf(self.gamma_abs_sq.numerator) / self.gamma_abs_sq.denominator), 17),
            "C_over_norm_q": repr(self.C / nq),
        }


def _abs_sq(f: FieldCtx, z: AlphaCoords) -> int:
    """|z|^2 scaled by ONE^2, exact."""
    u, v = z.re_omega, z.im_omega
    return u * u + f.trace_t * u * v + f.norm_omega * v * v


def _gintner_C_sq(f: FieldCtx) -> mpmath.mpf:
    with mpmath.workprec(256):
        return mpmath.mpf(6 * f.abs_d) / (f.im_divisor**2 * mpmath.pi**2)


def round_elt(z: AlphaCoords) -> RingElt:
    """Coordinate-wise nearest ring element, halves away from zero."""
    return RingElt(_round_div(z.re_omega, ONE), _round_div(z.im_omega, ONE))


def make_approximation(f: FieldCtx, alpha: AlphaCoords, a: RingElt, q: RingElt, C: float | None = None) -> Approximation:
    r = sub_elt(mul_alpha(f, q, alpha), a)
    gsq = Fraction(_abs_sq(f, r), ONE * ONE * norm(f, q))
    return Approximation(a, q, gsq, f.gintner_C if C is None else float(C), alpha)


def gintner_search(f: FieldCtx, alpha: AlphaCoords, qmax_norm: int, C: float | None = None) -> list:
    """All reduced (a, q) with N(q) <= qmax_norm and |alpha - a/q| <= C/N(q)."""
    if qmax_norm < 2:
        raise PreconditionError("qmax_norm must be at least 2")
    if C is None:
        c_sq = _gintner_C_sq(f)
        c_val = f.gintner_C
    else:
        c_val = float(C)
        c_sq = mpmath.mpf(c_val) ** 2
    found = {}
    for q in enumerate_by_norm(f, qmax_norm):
        if norm(f, q) == 1:
            continue
        a = round_elt(mul_alpha(f, q, alpha))
        nq0 = norm(f, q)
        big = math.gcd(norm(f, a), nq0)  # N(gcd(a, q)) divides this
        r0 = _abs_sq(f, sub_elt(mul_alpha(f, q, alpha), a))
        # reduction by g scales |r|^2 N(q) down by N(g)^2 <= big^2
        with mpmath.workprec(256):
            if mpmath.mpf(r0 * nq0) / (ONE * ONE) > c_sq * big * big:
                continue
        if big == 1:
            a2, q2 = a, q
        else:
            g = gcd(f, a, q)
            a2 = exact_div(f, a, g)
            q2 = exact_div(f, q, g)
        nq = norm(f, q2)
        if nq == 1:
            continue
        if not is_canonical(f, q2):
            for u in f.units:
                if is_canonical(f, ring_mul(f, u, q2)):
                    q2, a2 = ring_mul(f, u, q2), ring_mul(f, u, a2)
                    break
        key = (a2, q2)
        if key in found:
            continue
        r = sub_elt(mul_alpha(f, q2, alpha), a2)
        r_sq = _abs_sq(f, r)
        gsq = Fraction(r_sq, ONE * ONE * nq)
        if gsq < _RATIONAL_EPS_SQ:
            raise AlphaLooksRational(f"alpha = {a2}/{q2} to within 2^-100; alpha looks like an element of K")
        with mpmath.workprec(256):
            ok = mpmath.mpf(r_sq * nq) / (ONE * ONE) <= c_sq
        if ok:
            found[key] = Approximation(a2, q2, gsq, c_val, alpha)
    out = list(found.values())
    out.sort(key=lambda ap: (norm(f, ap.q), ap.q.n2, ap.q.n1, ap.a.n2, ap.a.n1))
    return out


def best_approximation(f: FieldCtx, alpha: AlphaCoords, target_norm: int, search_max: int | None = None):
    """The Gintner approximation whose N(q) is closest to target_norm (ties to the smaller)."""
    from .errors import NoApproximationFound

    found = gintner_search(f, alpha, search_max or max(4 * target_norm, 16))
    if not found:
        raise NoApproximationFound(f"no Gintner approximation with N(q) <= {search_max}")
    return min(found, key=lambda ap: (abs(norm(f, ap.q) - target_norm), norm(f, ap.q)))


def residue_system(f: FieldCtx, q: RingElt) -> tuple:
    """Arrays (a1, a2) forming a complete residue system mod q."""
    g2 = math.gcd(q.n2, q.n1 + f.xi2 * q.n2)
    h11 = norm(f, q) // g2
    a1, a2 = np.meshgrid(np.arange(h11, dtype=np.int64), np.arange(g2, dtype=np.int64), indexing="ij")
    return a1.ravel(), a2.ravel()


def check_lower_bound_static(f: FieldCtx, qmax: int) -> list:
    """Residues a mod q with a/q not in O and ||a/q||_w < 1/(2|q omega|); expected empty.

    Writing a/q = c/N(q) with c = a * conj(q), the claim is the integer test
    4 m^2 N(omega) >= N(q), where m is the larger coordinate distance numerator.
    """
    violations = []
    for q in enumerate_by_norm(f, qmax):
        nq = norm(f, q)
        if nq == 1:
            continue
        a1, a2 = residue_system(f, q)
        c1q, c2q = q.n1 + f.trace_t * q.n2, -q.n2
        c1 = a1 * c1q + f.xi1 * a2 * c2q
        c2 = a1 * c2q + a2 * c1q + f.xi2 * a2 * c2q
        r1, r2 = c1 % nq, c2 % nq
        m = np.maximum(np.minimum(r1, nq - r1), np.minimum(r2, nq - r2))
        nonzero = m > 0
        bad = nonzero & (4 * m * m * f.norm_omega < nq)
        for i in np.nonzero(bad)[0]:
            violations.append((q, RingElt(int(a1[i]), int(a2[i]))))
    return violations


def perturbed_range(f: FieldCtx, q: RingElt, C: float) -> int:
    """Largest integer norm bound for |n| <= |q|/(12 C |omega|^2)."""
    return int(math.floor(norm(f, q) / (144.0 * C * C * f.norm_omega**2) * (1 - 1e-12)))


def check_lower_bound_perturbed(f: FieldCtx, approx: Approximation, nmax: int, alpha: AlphaCoords | None = None) -> list:
    """n in range with q not dividing n a and ||n alpha||_w < 1/(4|q omega|); expected empty."""
    alpha = alpha or approx.alpha
    if alpha is None:
        raise PreconditionError("approximation carries no alpha; pass alpha explicitly")
    q, a = approx.q, approx.a
    bound = min(nmax, perturbed_range(f, q, approx.C))
    if bound < 1:
        return []
    with mpmath.workprec(256):
        thr = 1 / (4 * mpmath.sqrt(norm(f, q) * f.norm_omega)) - mpmath.mpf(2) ** -80
        thr_fx = int(mpmath.floor(thr * ONE))
    n1, n2, _ = lattice_points(f, bound, lo=1)
    violations = []
    for x1, x2 in zip(n1.tolist(), n2.tolist()):
        n = RingElt(x1, x2)
        if exact_div(f, ring_mul(f, n, a), q) is not None:
            continue
        if dist_omega(f, mul_alpha(f, n, alpha)) < thr_fx:
            violations.append(n)
    return violations


def h_alpha_count(f: FieldCtx, alpha: AlphaCoords, x: int, delta, approx: Approximation | None = None) -> tuple:
    """#{n : 0 < N(n) <= x, ||n alpha||_w <= delta} over all elements."""
    delta_fx = to_fx(delta)
    if not 0 < delta_fx <= ONE // 2:
        raise PreconditionError("delta must lie in (0, 1/2]")
    with Timer() as tm:
        if x < 1:
            count = 0
        else:
            n1, n2, _ = lattice_points(f, x, lo=1)
            count = int(below_mask(f, alpha, n1, n2, delta_fx, strict=False).sum())
    report = None
    if approx is not None:
        nq = norm(f, approx.q)
        dv = delta_fx / ONE
        rhs = (1 + x / nq) * (1 + dv * dv * nq)
        report = BoundReport(float(count), rhs, {"x": x, "delta": dv, "norm_q": nq}, tm.elapsed)
    return count, report


def vanishing_parameters(f: FieldCtx, approx: Approximation) -> tuple:
    """(x, delta_fx) at the edge of the vanishing clause: delta just below 1/(4|q omega|)."""
    nq = norm(f, approx.q)
    x = int(math.floor(nq / (144.0 * approx.C**2 * f.norm_omega**2) * (1 - 1e-12)))
    with mpmath.workprec(256):
        d = 1 / (4 * mpmath.sqrt(nq * f.norm_omega))
        delta_fx = int(mpmath.floor(d * ONE)) - 1
    return x, delta_fx


def spacing_count(f: FieldCtx, alpha: AlphaCoords, center: tuple, side: float, delta_fx: int) -> int:
    """Count n in an axis-aligned square (complex plane) with ||n alpha||_w <= delta."""
    cx, cy = center
    h = side / 2
    reach = (abs(cx) + abs(cy) + side) ** 2 + 1
    n1, n2, _ = lattice_points(f, int(math.ceil(reach)))
    re = n1 + n2 * f.re_omega
    im = n2 * f.im_omega
    keep = (np.abs(re - cx) <= h) & (np.abs(im - cy) <= h)
    n1, n2 = n1[keep], n2[keep]
    if len(n1) == 0:
        return 0
    return int(below_mask(f, alpha, n1, n2, delta_fx, strict=False).sum())
