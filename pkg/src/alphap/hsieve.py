"""Sieve identities at desk scale: sifted sums, Legendre inclusion-exclusion,
the Buchstab P/Q decomposition and the Type I/II split.

Weights are associate-invariant and finitely supported, so they are stored as
tables over canonical classes. Values are integers with a common scale
(1 for integer weights, 2^40 for fixed-point ones), which keeps every
identity exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .arith import canonical_mask, factor, lattice_points, n2_max
from .errors import GNotVanishing, ParamOutOfRange, PreconditionError, SupportUnbounded
from .qfield import FieldCtx, RingElt, make_field, norm

FIXED_SCALE = 1 << 40


@dataclass(frozen=True)
class SieveConfig:
    x: int
    kappa: float
    mu: float
    M: int
    support_bound: int

    def __post_init__(self):
        if self.x < 3:
            raise ParamOutOfRange("x must be at least 3")
        if not 0 < self.kappa <= 0.5:
            raise ParamOutOfRange("kappa must lie in (0, 1/2]")
        if not 0 < self.mu < 1:
            raise ParamOutOfRange("mu must lie in (0, 1)")
        if not self.x_mu < self.M <= self.x:
            raise ParamOutOfRange("M must satisfy x^mu < M <= x")
        if self.support_bound < 1:
            raise ParamOutOfRange("support bound must be positive")

    @property
    def z(self) -> int:
        return int(math.ceil(self.x**self.kappa - 1e-9))

    @property
    def x_mu(self) -> float:
        return self.x**self.mu * (1 + 1e-12)

    @property
    def t_default(self) -> int:
        return int(math.floor(math.log(self.x) / math.log(2))) + 1


@dataclass(frozen=True)
class DecompositionNode:
    s: int
    primes: tuple  # strictly decreasing in the fixed order
    kind: str  # "P" or "Q"
    norm: int


# ---------------------------------------------------------------------------
# class tables


class ClassTable:
    """Canonical classes with 0 < N <= R, a lookup grid from any element to its
    class index, and the least prime-factor norm of each class."""

    def __init__(self, f: FieldCtx, R: int):
        self.field = f
        self.R = R
        n1, n2, nn = lattice_points(f, R, lo=1, n2_nonneg=True)
        keep = canonical_mask(f, n1, n2)
        n1, n2, nn = n1[keep], n2[keep], nn[keep]
        idx = np.lexsort((n1, n2, nn))
        self.c1, self.c2, self.cn = n1[idx], n2[idx], nn[idx]
        self.m2 = n2_max(f, R)
        self.m1 = math.isqrt(R) + (f.trace_t * self.m2 + 1) // 2 + 1
        self.grid = np.full((2 * self.m2 + 1, 2 * self.m1 + 1), -1, dtype=np.int64)
        ids = np.arange(len(self.cn), dtype=np.int64)
        for u in f.units:
            e1 = u.n1 * self.c1 + f.xi1 * u.n2 * self.c2
            e2 = u.n1 * self.c2 + u.n2 * self.c1 + f.xi2 * u.n2 * self.c2
            self.grid[e2 + self.m2, e1 + self.m1] = ids
        self.index = {(int(a), int(b)): i for i, (a, b) in enumerate(zip(self.c1, self.c2))}
        lpf = np.full(len(self.cn), np.iinfo(np.int64).max, dtype=np.int64)
        self.is_prime = np.zeros(len(self.cn), dtype=bool)
        for i in range(len(self.cn)):
            if self.cn[i] == 1:
                continue
            fac = factor(f, RingElt(int(self.c1[i]), int(self.c2[i]))).factors
            lpf[i] = min(norm(f, p) for p, _ in fac)
            self.is_prime[i] = len(fac) == 1 and fac[0][1] == 1
        self.least_prime_norm = lpf

    def __len__(self) -> int:
        return len(self.cn)

    def elt(self, i: int) -> RingElt:
        return RingElt(int(self.c1[i]), int(self.c2[i]))

    def lookup(self, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
        """Class index of each element, -1 where N > R."""
        f = self.field
        nn = e1 * e1 + f.trace_t * e1 * e2 + f.norm_omega * e2 * e2
        ok = (nn <= self.R) & (nn > 0)
        out = np.full(e1.shape, -1, dtype=np.int64)
        out[ok] = self.grid[e2[ok] + self.m2, e1[ok] + self.m1]
        return out

    def class_of(self, n: RingElt) -> int:
        if not n or norm(self.field, n) > self.R:
            return -1
        return int(self.grid[n.n2 + self.m2, n.n1 + self.m1])

    def primes_below(self, z: int) -> list:
        """Canonical primes with N(p) < z, increasing in the fixed order."""
        sel = np.nonzero(self.is_prime & (self.cn < z))[0]
        return [self.elt(int(i)) for i in sel]


@lru_cache(maxsize=64)
def _class_table(d: int, R: int) -> ClassTable:
    return ClassTable(make_field(d), R)


def class_table(f: FieldCtx, R: int) -> ClassTable:
    return _class_table(f.d, int(R))


@dataclass
class Weight:
    """An associate-invariant weight with support N <= table.R; value = values[i]/scale."""

    table: ClassTable
    values: np.ndarray
    scale: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.shape != (len(self.table),):
            raise PreconditionError("weight table has the wrong length")

    def __call__(self, n: RingElt):
        i = self.table.class_of(n)
        v = 0 if i < 0 else int(self.values[i])
        return v if self.scale == 1 else v / self.scale

    @classmethod
    def from_function(cls, table: ClassTable, func: Callable, fixed: bool = False) -> "Weight":
        """Evaluate func on canonical representatives; fixed=True quantizes to 2^-40."""
        scale = FIXED_SCALE if fixed else 1
        vals = []
        for i in range(len(table)):
            v = func(table.elt(i))
            vals.append(int(round(v * scale)) if fixed else int(v))
        return cls(table, np.array(vals, dtype=np.int64), scale)

    @classmethod
    def from_array(cls, table: ClassTable, arr, fixed: bool = False) -> "Weight":
        arr = np.asarray(arr)
        if fixed:
            return cls(table, np.rint(arr.astype(np.float64) * FIXED_SCALE).astype(np.int64), FIXED_SCALE)
        return cls(table, arr.astype(np.int64), 1)

    @classmethod
    def norm_indicator(cls, table: ClassTable, lo: int = 1, hi: int | None = None) -> "Weight":
        hi = table.R if hi is None else hi
        return cls(table, ((table.cn >= lo) & (table.cn <= hi)).astype(np.int64), 1)

    def __sub__(self, other: "Weight") -> "Weight":
        _compatible(self, other)
        return Weight(self.table, self.values - other.values, self.scale)

    def unscale(self, v: int):
        return v if self.scale == 1 else v / self.scale


def _compatible(a: Weight, b: Weight):
    if a.table is not b.table or a.scale != b.scale:
        raise PreconditionError("weights must share a class table and a scale")


def _require_weight(w) -> Weight:
    if not isinstance(w, Weight):
        raise SupportUnbounded("weight must be a finite-support Weight table")
    return w


# ---------------------------------------------------------------------------
# sums


def sifted_sum_raw(w: Weight, z: int) -> int:
    """Scaled integer value of S(w, z)."""
    t = w.table
    keep = t.least_prime_norm >= z
    return t.field.unit_count * int(w.values[keep].sum())


def sifted_sum(f: FieldCtx, weight, z: int):
    """Sum of weight(r) over r != 0 whose prime factors all have norm >= z."""
    w = _require_weight(weight)
    if w.table.field.d != f.d:
        raise PreconditionError("weight belongs to another field")
    return w.unscale(sifted_sum_raw(w, z))


def _multiples_sum(w: Weight, m: RingElt, nm: int) -> int:
    """sum_n w(mn) over all n, scaled: u * sum over classes k with N(k) <= R/N(m)."""
    t = w.table
    f = t.field
    stop = int(np.searchsorted(t.cn, t.R // nm, side="right"))
    if stop == 0:
        return 0
    k1, k2 = t.c1[:stop], t.c2[:stop]
    e1 = m.n1 * k1 + f.xi1 * m.n2 * k2
    e2 = m.n1 * k2 + m.n2 * k1 + f.xi2 * m.n2 * k2
    idx = t.lookup(e1, e2)
    return f.unit_count * int(w.values[idx].sum())


def squarefree_products(f: FieldCtx, primes: list, bound: int):
    """Yield (m, N(m), omega(m)) over squarefree products of the given primes with N(m) <= bound."""
    pn = [norm(f, p) for p in primes]
    stack = [(RingElt(1, 0), 1, 0, len(primes))]
    while stack:
        m, nm, k, top = stack.pop()
        yield m, nm, k
        for i in range(top - 1, -1, -1):
            nn = nm * pn[i]
            if nn > bound:
                continue
            a, b = m, primes[i]
            prod = RingElt(a.n1 * b.n1 + f.xi1 * a.n2 * b.n2, a.n1 * b.n2 + a.n2 * b.n1 + f.xi2 * a.n2 * b.n2)
            stack.append((prod, nn, k + 1, i))


@dataclass
class LegendreResult:
    lhs: object
    rhs: object
    equal: bool
    m_count: int


def legendre_identity_check(f: FieldCtx, weight, z: int) -> LegendreResult:
    w = _require_weight(weight)
    t = w.table
    lhs = sifted_sum_raw(w, z)
    rhs = 0
    count = 0
    for m, nm, k in squarefree_products(f, t.primes_below(z), t.R):
        rhs += (-1) ** k * _multiples_sum(w, m, nm)
        count += 1
    return LegendreResult(w.unscale(lhs), w.unscale(rhs), lhs == rhs, count)


# ---------------------------------------------------------------------------
# Buchstab decomposition


@dataclass
class BuchstabResult:
    terms: list  # level s -> sum over P_s (level 0 holds g(1))
    residual: object
    identity_gap: object
    direct: object
    t: int
    max_q_level: int
    q_level_bound: int
    p_nodes: list  # count of P_s tuples per level
    q_nodes: list
    nodes: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.identity_gap == 0 and self.max_q_level <= self.q_level_bound

    def to_dict(self) -> dict:
        return {
            "terms": [str(v) for v in self.terms],
            "residual": str(self.residual),
            "identity_gap": str(self.identity_gap),
            "direct": str(self.direct),
            "t": self.t,
            "max_q_level": self.max_q_level,
            "q_level_bound": self.q_level_bound,
            "p_nodes": self.p_nodes,
            "q_nodes": self.q_nodes,
        }


def _mul(f: FieldCtx, a: RingElt, b: RingElt) -> RingElt:
    return RingElt(a.n1 * b.n1 + f.xi1 * a.n2 * b.n2, a.n1 * b.n2 + a.n2 * b.n1 + f.xi2 * a.n2 * b.n2)


def buchstab_decompose(f: FieldCtx, cfg: SieveConfig, g, t: int | None = None, keep_nodes: bool = False) -> BuchstabResult:
    """Split S = sum_{m | P(z)} mu(m) g(m) into signed level sums over P_s plus a Q_t residual."""
    g = _require_weight(g)
    tab = g.table
    xmu = cfg.x_mu
    low = tab.cn <= xmu
    if np.any(g.values[low] != 0):
        raise GNotVanishing(f"g is nonzero on some r with N(r) <= x^mu = {cfg.x**cfg.mu:.6g}")
    t = cfg.t_default if t is None else t
    if t < 1:
        raise PreconditionError("t must be at least 1")
    primes = tab.primes_below(cfg.z)
    pn = [norm(f, p) for p in primes]
    R = tab.R

    def gval(m: RingElt) -> int:
        i = tab.class_of(m)
        return 0 if i < 0 else int(g.values[i])

    def inner(m: RingElt, nm: int, top: int) -> int:
        """sum over d | Pi(p_top) of mu(d) g(m d)."""
        total = 0
        for d, nd, k in squarefree_products(f, primes[:top], R // nm):
            total += (-1) ** k * gval(_mul(f, m, d))
        return total

    direct = sum((-1) ** k * gval(m) for m, _, k in squarefree_products(f, primes, R))
    terms = [0] * (t + 1)
    terms[0] = gval(RingElt(1, 0))
    p_nodes = [0] * (t + 1)
    q_nodes = [0] * (t + 1)
    nodes = []
    residual = 0
    max_q = 0
    # frontier of Q_{s-1} tuples: (product, norm, index of smallest prime, tuple)
    frontier = [(RingElt(1, 0), 1, len(primes), ())]
    for s in range(1, t + 1):
        nxt = []
        for m, nm, top, tup in frontier:
            for i in range(top):
                nn = nm * pn[i]
                prod = _mul(f, m, primes[i])
                tup2 = tup + (primes[i],)
                if nn > xmu:
                    p_nodes[s] += 1
                    if keep_nodes:
                        nodes.append(DecompositionNode(s, tup2, "P", nn))
                    if nn <= R:
                        terms[s] += inner(prod, nn, i)
                else:
                    q_nodes[s] += 1
                    max_q = s
                    if keep_nodes:
                        nodes.append(DecompositionNode(s, tup2, "Q", nn))
                    nxt.append((prod, nn, i, tup2))
        frontier = nxt
    for m, nm, top, _ in frontier:
        residual += inner(m, nm, top)
    recon = sum((-1) ** s * terms[s] for s in range(t + 1)) + (-1) ** t * residual
    qbound = int(math.floor(cfg.mu * math.log(cfg.x) / math.log(2) + 1e-12))
    u = g.unscale
    return BuchstabResult(
        [u(v) for v in terms], u(residual), u(direct - recon), u(direct), t, max_q, qbound, p_nodes, q_nodes, nodes
    )


# ---------------------------------------------------------------------------
# Type I / Type II split


@dataclass
class TypeSplit:
    S_I: object
    S_II: object
    difference: object
    total_check: bool


def delta_values(f: FieldCtx, diff: Weight, primes: list) -> list:
    """(m, N(m), mu(m), Delta(m)) over squarefree m | P(z) inside the support."""
    out = []
    for m, nm, k in squarefree_products(f, primes, diff.table.R):
        out.append((m, nm, (-1) ** k, _multiples_sum(diff, m, nm)))
    return out


def type_split(f: FieldCtx, cfg: SieveConfig, w_weight, wtilde_weight) -> TypeSplit:
    w = _require_weight(w_weight)
    wt = _require_weight(wtilde_weight)
    diff = w - wt
    s1 = s2 = 0
    for m, nm, mu, dv in delta_values(f, diff, diff.table.primes_below(cfg.z)):
        if nm < cfg.M:
            s1 += mu * dv
        else:
            s2 += mu * dv
    target = sifted_sum_raw(w, cfg.z) - sifted_sum_raw(wt, cfg.z)
    return TypeSplit(w.unscale(s1), w.unscale(s2), w.unscale(target), s1 + s2 == target)


def harman_smoke(f: FieldCtx, cfg: SieveConfig, w: Weight, wt: Weight) -> dict:
    """|S(w,z) - S(w~,z)| against Y (log xX)^3, with Y the largest Type I/II sum of |Delta(m)|.

    Y is sampled (b_n = 1, a_m sign-aligned), so the ratio is reported only.
    """
    from .arith import d_k

    diff = w - wt
    tab = diff.table
    lhs = abs(sifted_sum_raw(w, cfg.z) - sifted_sum_raw(wt, cfg.z)) / w.scale
    y1 = y2 = 0
    hi2 = cfg.x ** (cfg.mu + cfg.kappa)
    for i in range(len(tab)):
        nm = int(tab.cn[i])
        if nm >= cfg.M and not (cfg.x_mu < nm <= hi2):
            continue
        dv = abs(_multiples_sum(diff, tab.elt(i), nm)) * f.unit_count  # all associates of m
        if nm < cfg.M:
            y1 += dv
        if cfg.x_mu < nm <= hi2:
            y2 += dv
    Y = max(y1, y2) / w.scale
    X = max(
        max(d_k(f, tab.elt(i), 4) * abs(int(w.values[i])) for i in range(len(tab))),
        max(d_k(f, tab.elt(i), 4) * abs(int(wt.values[i])) for i in range(len(tab))),
    ) / w.scale
    denom = Y * math.log(cfg.x * max(X, 1.0)) ** 3
    return {
        "lhs": lhs,
        "Y_type1": y1 / w.scale,
        "Y_type2": y2 / w.scale,
        "X": X,
        "ratio": lhs / denom if denom > 0 else (0.0 if lhs == 0 else math.inf),
    }


def gaussian_weights(f: FieldCtx, x: int, delta, alpha, epsilon: float = 0.25, R: int | None = None) -> tuple:
    """(w, w~) from the smoothing module, truncated to N <= R and quantized to 2^-40.

    w~ is averaged over the unit group so that both weights are associate-invariant.
    """
    from .smooth import SmoothWeights, weight_arrays

    R = x if R is None else R
    tab = class_table(f, R)
    sw = SmoothWeights(f, x, epsilon, delta, alpha)
    wv = np.zeros(len(tab))
    wtv = np.zeros(len(tab))
    for u in f.units:
        e1 = u.n1 * tab.c1 + f.xi1 * u.n2 * tab.c2
        e2 = u.n1 * tab.c2 + u.n2 * tab.c1 + f.xi2 * u.n2 * tab.c2
        a, b = weight_arrays(sw, e1, e2)
        wv += a
        wtv += b
    wv /= f.unit_count
    wtv /= f.unit_count
    return Weight.from_array(tab, wv, fixed=True), Weight.from_array(tab, wtv, fixed=True)
