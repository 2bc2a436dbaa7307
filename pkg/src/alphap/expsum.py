"""Direct evaluation of the lattice exponential sums and their ratio to the
published bounds (implied constants set to 1)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import lattice_points
from .dioph import Approximation
from .errors import ParamOutOfRange, PreconditionError
from .qfield import (
    ONE,
    AlphaCoords,
    FieldCtx,
    RingElt,
    fx_to_float,
    frac_dist,
    frac_u64,
    im_omega_of_product,
    mul_alpha,
    norm,
    u64_dist,
)
from .report import BoundReport, Timer

_TWO_PI_2_64 = 2 * math.pi * 2.0**-64
_SUM_BITS = 52
_SUM_CHUNK = 512


def fixed_sum_int(values: np.ndarray, bits: int = _SUM_BITS) -> int:
    """Sum of values (|v| <= 1), each rounded to a multiple of 2^-bits, as an exact integer numerator.

    The accumulation is order independent, so sums over disjoint sets add up exactly.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return 0
    ints = np.rint(v * 2.0**bits).astype(np.int64)
    pad = (-len(ints)) % _SUM_CHUNK
    if pad:
        ints = np.concatenate([ints, np.zeros(pad, dtype=np.int64)])
    partial = ints.reshape(-1, _SUM_CHUNK).sum(axis=1)
    return int(sum(int(p) for p in partial))


def fixed_sum(values: np.ndarray, bits: int = _SUM_BITS) -> float:
    return fixed_sum_int(values, bits) / 2.0**bits


def phase_sum_int(u: np.ndarray) -> tuple:
    """Exact numerators (of 2^-52) for the real and imaginary parts of sum e(u * 2^-64)."""
    ang = np.asarray(u, dtype=np.uint64).astype(np.float64) * _TWO_PI_2_64
    return fixed_sum_int(np.cos(ang)), fixed_sum_int(np.sin(ang))


def phase_sum(u: np.ndarray) -> complex:
    """sum of e(u * 2^-64), accumulated in exact fixed point."""
    re, im = phase_sum_int(u)
    return complex(re / 2.0**_SUM_BITS, im / 2.0**_SUM_BITS)


def _phase(u: np.ndarray) -> np.ndarray:
    return np.exp(1j * (np.asarray(u, dtype=np.uint64).astype(np.float64) * _TWO_PI_2_64))


# ---------------------------------------------------------------------------
# linear sums


def lin_sum_fixed(f: FieldCtx, alpha: AlphaCoords, x: int, y: int) -> tuple:
    """lin_sum as exact integer numerators of 2^-52; sums over disjoint norm ranges add exactly."""
    if not 0 <= x <= y:
        raise PreconditionError(f"need 0 <= x <= y, got x={x}, y={y}")
    n1, n2, _ = lattice_points(f, y, lo=x)
    _, im = frac_u64(f, alpha, n1, n2)
    return phase_sum_int(im)


def lin_sum(f: FieldCtx, alpha: AlphaCoords, x: int, y: int) -> tuple:
    """sum over x <= N(m) <= y (all elements, m=0 included when x=0) of e(Im_w(m alpha))."""
    with Timer() as tm:
        re, im = lin_sum_fixed(f, alpha, x, y)
        value = complex(re / 2.0**_SUM_BITS, im / 2.0**_SUM_BITS)
    return value, lin_bound_report(f, alpha, y, abs(value), tm.elapsed)


def lin_bound_rhs(f: FieldCtx, alpha: AlphaCoords, y: int) -> float:
    yy = max(y, 1)
    d_re = fx_to_float(frac_dist(alpha.re_omega))
    d_im = fx_to_float(frac_dist(alpha.im_omega))
    cands = [math.sqrt(yy)]
    if d_re > 0:
        cands.append(1 / d_re)
    if d_im > 0:
        cands.append(1 / d_im)
    return f.norm_omega * math.sqrt(yy) * min(cands)


def lin_bound_report(f, alpha, y, value, elapsed=0.0) -> BoundReport:
    return BoundReport(float(value), lin_bound_rhs(f, alpha, y), {"y": y}, elapsed)


# ---------------------------------------------------------------------------
# the weight E(n, M) and its average


def e_weight(f: FieldCtx, alpha: AlphaCoords, n: RingElt, M: float) -> float:
    """min{M, 1/||Re_w(n alpha)||, 1/||Im_w(n alpha)||} with 1/0 = +inf."""
    if M < 2:
        raise PreconditionError("M must be at least 2")
    z = mul_alpha(f, n, alpha)
    out = float(M)
    for c in (z.re_omega, z.im_omega):
        dv = frac_dist(c)
        if dv:
            out = min(out, ONE / dv)
    return out


def e_weight_many(f: FieldCtx, alpha: AlphaCoords, n1, n2, M: float) -> np.ndarray:
    re, im = frac_u64(f, alpha, n1, n2)
    dm = np.minimum(u64_dist(re), u64_dist(im))
    with np.errstate(divide="ignore"):
        inv = np.where(dm > 0, 1.0 / np.where(dm > 0, dm, 1.0), np.inf)
    return np.minimum(float(M), inv)


@dataclass(frozen=True)
class Region:
    """{x0 <= N(n) < x}; a ball when x0 = 1."""

    x: int
    x0: int = 1

    def points(self, f: FieldCtx) -> tuple:
        if self.x <= self.x0:
            e = np.zeros(0, dtype=np.int64)
            return e, e
        n1, n2, _ = lattice_points(f, self.x - 1, lo=max(self.x0, 1))
        return n1, n2


def avg_sum(f: FieldCtx, alpha: AlphaCoords, X: Region, M: float, approx: Approximation) -> tuple:
    """S = sum over n in X of E(n, M), with the two bound reports (second may be None)."""
    if M < 2:
        raise PreconditionError("M must be at least 2")
    with Timer() as tm:
        n1, n2 = X.points(f)
        S = float(np.sum(e_weight_many(f, alpha, n1, n2, M))) if len(n1) else 0.0
    nq = norm(f, approx.q)
    C = approx.C
    nqw = nq * f.norm_omega
    rhs1 = (1 + C * C * f.norm_omega**2 * X.x / nq) * (M + nqw * math.log(M))
    params = {"x": X.x, "x0": X.x0, "M": M, "norm_q": nq, "count": int(len(n1))}
    r1 = BoundReport(S, rhs1, dict(params, bound="general"), tm.elapsed)
    r2 = None
    if X.x <= nq / (12 * C * f.norm_omega) ** 2:
        r2 = BoundReport(S, nqw * math.log(max(nqw, 2)), dict(params, bound="short"), tm.elapsed)
    return S, (r1, r2)


# ---------------------------------------------------------------------------
# index set and bilinear forms


@dataclass(frozen=True)
class IndexSet:
    J1: int
    J2: int
    elements: tuple
    pairs: tuple  # (j1, j2) for each element


def ell_of(f: FieldCtx, j1: int, j2: int) -> RingElt:
    return RingElt(f.xi2 * j1 - j2, -j1)


def index_set(f: FieldCtx, J1: int, J2: int) -> IndexSet:
    if J1 < 1 or J2 < 1:
        raise PreconditionError("J1, J2 must be at least 1")
    pairs, elems = [], []
    for j1 in range(-J1 + 1, J1):
        for j2 in range(-J2 + 1, J2):
            if j1 == 0 and j2 == 0:
                continue
            pairs.append((j1, j2))
            elems.append(ell_of(f, j1, j2))
    out = IndexSet(J1, J2, tuple(elems), tuple(pairs))
    assert len(elems) <= 9 * J1 * J2
    cap = 5 * f.norm_omega**2 * (J1 + J2) ** 2
    assert all(1 <= norm(f, l) < cap for l in elems)
    return out


def transform_identity_holds(f: FieldCtx, j1: int, j2: int, y: AlphaCoords) -> bool:
    """-j1 Re_w(y) - j2 Im_w(y) equals Im_w(l y) as fixed-point integers."""
    lhs = -j1 * y.re_omega - j2 * y.im_omega
    return lhs == im_omega_of_product(f, ell_of(f, j1, j2), y)


@dataclass(frozen=True)
class BilinearRange:
    """Type I: 1 <= N(m) < M.  Type II: x^mu < N(m) < x^(mu+kappa).  Always x/2 <= N(mn) < x."""

    kind: str
    x: int
    M: float = 0.0
    mu: float = 0.0
    kappa: float = 0.0

    def m_bounds(self) -> tuple:
        """Integer norm range [lo, hi] for m."""
        if self.kind == "type1":
            return 1, int(math.ceil(self.M)) - 1
        if self.kind == "type2":
            if not 0 < self.kappa <= 0.5:
                raise ParamOutOfRange("kappa must lie in (0, 1/2]")
            if not 0 < self.mu <= 1:
                raise ParamOutOfRange("mu must lie in (0, 1]")
            lo = int(math.floor(self.x**self.mu)) + 1
            hi = int(math.ceil(self.x ** (self.mu + self.kappa))) - 1
            return lo, hi
        raise ParamOutOfRange(f"unknown range kind {self.kind!r}")


def _mix(n1: np.ndarray, n2: np.ndarray, seed: int) -> np.ndarray:
    """splitmix64 of the coordinates: a deterministic pseudo-random word per element."""
    with np.errstate(over="ignore"):
        z = (n1.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)) ^ (
            n2.astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
        ) ^ np.uint64((seed * 0x165667B19E3779F9) % 2**64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def random_signs(n1, n2, seed: int) -> np.ndarray:
    return np.where(_mix(np.asarray(n1), np.asarray(n2), seed) & np.uint64(1), 1.0, -1.0)


@dataclass
class Coeffs:
    """Coefficient choice: 'ones', 'zeros', 'signs' (seeded), or a callable of (n1, n2) arrays.

    For a, 'adversarial' aligns a_m with the conjugate inner sum of the heaviest l.
    """

    a: object = "ones"
    b: object = "ones"
    seed: int = 0

    @staticmethod
    def _eval(spec, n1, n2, seed):
        if callable(spec):
            return np.asarray(spec(n1, n2))
        if spec == "ones":
            return np.ones(len(n1))
        if spec == "zeros":
            return np.zeros(len(n1))
        if spec == "signs":
            return random_signs(n1, n2, seed)
        raise PreconditionError(f"unknown coefficient spec {spec!r}")

    def a_values(self, n1, n2):
        return self._eval(self.a, n1, n2, self.seed)

    def b_values(self, n1, n2):
        return self._eval(self.b, n1, n2, self.seed + 7919)


@dataclass
class PairData:
    """All (m, n) pairs of a bilinear range with the fractional coordinates of mn*alpha."""

    m1: np.ndarray
    m2: np.ndarray
    m_idx: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    X1: np.ndarray  # Re_w(mn alpha) mod 1 as uint64
    X2: np.ndarray  # Im_w(mn alpha) mod 1 as uint64

    @property
    def size(self) -> int:
        return len(self.m_idx)


def bilinear_pairs(f: FieldCtx, alpha: AlphaCoords, rng: BilinearRange) -> PairData:
    lo, hi = rng.m_bounds()
    x = rng.x
    hi = min(hi, x - 1)
    e = np.zeros(0, dtype=np.int64)
    if hi < lo:
        return PairData(e, e, e, e, e, e.astype(np.uint64), e.astype(np.uint64))
    m1, m2, mn = lattice_points(f, hi, lo=lo)
    nmax = (x - 1) // max(lo, 1)
    k1, k2, kn = lattice_points(f, nmax, lo=1)
    order = np.argsort(kn, kind="stable")
    k1, k2, kn = k1[order], k2[order], kn[order]
    n_lo = (x + 2 * mn - 1) // (2 * mn)
    n_hi = (x - 1) // mn
    s = np.searchsorted(kn, n_lo, side="left")
    t = np.searchsorted(kn, n_hi, side="right")
    counts = np.maximum(t - s, 0)
    total = int(counts.sum())
    m_idx = np.repeat(np.arange(len(m1)), counts)
    starts = np.repeat(s - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    n_idx = np.arange(total) + starts
    n1, n2 = k1[n_idx], k2[n_idx]
    a1, a2 = m1[m_idx], m2[m_idx]
    r1 = a1 * n1 + f.xi1 * a2 * n2
    r2 = a1 * n2 + a2 * n1 + f.xi2 * a2 * n2
    X1, X2 = frac_u64(f, alpha, r1, r2)
    return PairData(m1, m2, m_idx, n1, n2, X1, X2)


def _ell_phase(pd: PairData, j1: int, j2: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        u = np.uint64(-j1 % 2**64) * pd.X1 + np.uint64(-j2 % 2**64) * pd.X2
    return _phase(u)


def _inner_by_m(pd: PairData, ph: np.ndarray, b: np.ndarray) -> np.ndarray:
    w = ph * b
    nm = len(pd.m1)
    return np.bincount(pd.m_idx, weights=w.real, minlength=nm) + 1j * np.bincount(
        pd.m_idx, weights=w.imag, minlength=nm
    )


def _inner_all(pd: PairData, I: IndexSet, b: np.ndarray) -> list:
    """B_l(m) = sum_n b_n e(Im_w(l m n alpha)) for every l in the index set."""
    return [_inner_by_m(pd, _ell_phase(pd, j1, j2), b) for j1, j2 in I.pairs]


def _F_from_inner(inner: list, a) -> float:
    if isinstance(a, str) and a == "adversarial":
        best = max(range(len(inner)), key=lambda i: float(np.sum(np.abs(inner[i]))))
        B0 = inner[best]
        mag = np.abs(B0)
        a = np.where(mag > 0, np.conj(B0) / np.where(mag > 0, mag, 1.0), 0.0)
    return float(sum(abs(np.sum(a * B)) for B in inner))


def bilinear_F(
    f: FieldCtx,
    alpha: AlphaCoords,
    J1: int,
    J2: int,
    range_spec: BilinearRange,
    coeffs: Coeffs | None = None,
    pairs: PairData | None = None,
) -> tuple:
    """F(J1, J2) = sum over l of |sum a_m b_n e(Im_w(l m n alpha))|. Returns (value, range_empty)."""
    coeffs = coeffs or Coeffs()
    pd = pairs if pairs is not None else bilinear_pairs(f, alpha, range_spec)
    I = index_set(f, J1, J2)
    if pd.size == 0 or not I.pairs:
        return 0.0, pd.size == 0
    b = np.ones(pd.size) if range_spec.kind == "type1" else coeffs.b_values(pd.n1, pd.n2)
    inner = _inner_all(pd, I, b)
    adversarial = isinstance(coeffs.a, str) and coeffs.a == "adversarial"
    a = "adversarial" if adversarial else coeffs.a_values(pd.m1, pd.m2)
    return _F_from_inner(inner, a), False


def g_sum(f: FieldCtx, alpha: AlphaCoords, J: int, delta: float, range_spec: BilinearRange,
          pairs: PairData | None = None) -> float:
    """G with |a_m b_n| = 1 over the given range."""
    if J < 1:
        raise PreconditionError("J must be at least 1")
    pd = pairs if pairs is not None else bilinear_pairs(f, alpha, range_spec)
    if pd.size == 0:
        return 0.0
    du = np.uint64(int(round(delta * 2.0**64)) % 2**64)
    cap = math.log(2 * J)
    total = 0.0
    for X in (pd.X1, pd.X2):
        for sgn in (1, -1):
            with np.errstate(over="ignore"):
                diff = (du if sgn == 1 else (np.uint64(0) - du)) - X
            dist = u64_dist(diff)
            with np.errstate(divide="ignore"):
                val = np.where(dist > 0, 1.0 / (J * np.where(dist > 0, dist, 1.0)), np.inf)
            total += float(np.sum(np.minimum(cap, val)))
    return total


# ---------------------------------------------------------------------------
# bound verification


def type2_rhs(f, C, nq, x, J1, J2, mu, kappa, eps=0.0) -> float:
    jj = J1 * J2
    inner = (J1 + J2) * x / math.sqrt(nq) + (J1 + J2) * x ** (1 - mu / 4) + math.sqrt(nq) * x ** ((2 + mu + kappa) / 4)
    return C * f.norm_omega**3.5 * x**eps * (jj * x ** ((1 + mu + kappa) / 2) + jj ** (0.5 + eps) * inner)


def type1_rhs(f, C, nq, x, J1, J2, M, eps=0.0) -> float:
    s = J1 + J2
    main = s * s * x / nq + s * s * math.sqrt(x * M) + math.sqrt(x) * nq
    return C * C * f.norm_omega**7 * s**eps * (x * nq) ** eps * main


def g_rhs(f, C, nq, x, J, eps=0.0) -> float:
    return C * C * f.norm_omega**3 * (x * J) ** eps * (math.sqrt(nq) + nq / J + x / math.sqrt(nq) + x / J)


def verify_section5_bound(kind: str, params: dict) -> BoundReport:
    """Ratio of a directly computed F or G to the matching right-hand side.

    params: field, alpha, approx, x, and per kind
      type1: M, J1, J2        type2: mu, kappa, J1, J2        gsum: J, delta, M
    optional: eps (default 0), seeds (signs family size, default 3).
    """
    f = params["field"]
    alpha = params["alpha"]
    approx: Approximation = params["approx"]
    x = int(params["x"])
    eps = float(params.get("eps", 0.0))
    if not 0 <= eps <= 0.5:
        raise ParamOutOfRange("eps must lie in [0, 1/2]")
    if x < 3:
        raise ParamOutOfRange("x must be at least 3")
    nq = norm(f, approx.q)
    C = approx.C
    n_seeds = int(params.get("seeds", 3))
    rec = {"kind": kind, "x": x, "norm_q": nq, "eps": eps}
    with Timer() as tm:
        if kind in ("type1", "type2"):
            J1, J2 = int(params["J1"]), int(params["J2"])
            if kind == "type1":
                M = float(params.get("M", math.sqrt(x)))
                if M > x:
                    raise ParamOutOfRange("Type I needs M <= x")
                rng = BilinearRange("type1", x, M=M)
                rhs = type1_rhs(f, C, nq, x, J1, J2, M, eps)
                rec.update(M=M)
            else:
                mu, kappa = float(params["mu"]), float(params["kappa"])
                rng = BilinearRange("type2", x, mu=mu, kappa=kappa)
                lo, hi = rng.m_bounds()
                if hi < lo:
                    raise ParamOutOfRange("Type II norm window for m is empty")
                rhs = type2_rhs(f, C, nq, x, J1, J2, mu, kappa, eps)
                rec.update(mu=mu, kappa=kappa)
            rec.update(J1=J1, J2=J2)
            pd = bilinear_pairs(f, alpha, rng)
            I = index_set(f, J1, J2)
            values = {}
            if pd.size:
                # b-sequences: ones, plus seeded signs for Type II; a-family per b
                b_specs = {"ones": "ones"}
                if kind == "type2":
                    b_specs.update({f"signs{s}": s for s in range(n_seeds)})
                for bname, bspec in b_specs.items():
                    b = np.ones(pd.size) if bspec == "ones" else random_signs(pd.n1, pd.n2, 7919 + bspec)
                    inner = _inner_all(pd, I, b)
                    values[f"a=ones,b={bname}"] = _F_from_inner(inner, np.ones(len(pd.m1)))
                    for s in range(n_seeds):
                        values[f"a=signs{s},b={bname}"] = _F_from_inner(inner, random_signs(pd.m1, pd.m2, s))
                    values[f"a=adversarial,b={bname}"] = _F_from_inner(inner, "adversarial")
            value = max(values.values()) if values else 0.0
            rec["by_coeffs"] = values
            rec["pairs"] = pd.size
        elif kind == "gsum":
            J = int(params["J"])
            delta = float(params["delta"])
            if not 0 < delta <= 0.5:
                raise ParamOutOfRange("delta must lie in (0, 1/2]")
            M = float(params.get("M", math.sqrt(x)))
            rng = BilinearRange("type1", x, M=M)
            pd = bilinear_pairs(f, alpha, rng)
            value = g_sum(f, alpha, J, delta, rng, pairs=pd)
            rhs = g_rhs(f, C, nq, x, J, eps)
            rec.update(J=J, delta=delta, M=M, pairs=pd.size)
        else:
            raise ParamOutOfRange(f"unknown bound kind {kind!r}")
    return BoundReport(float(value), float(rhs), rec, tm.elapsed)
