import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphap.arith import factor, lattice_points
from alphap.errors import GNotVanishing, ParamOutOfRange, SupportUnbounded
from alphap.hsieve import (
    SieveConfig,
    Weight,
    buchstab_decompose,
    class_table,
    gaussian_weights,
    harman_smoke,
    legendre_identity_check,
    sifted_sum,
    type_split,
)
from alphap.qfield import HEEGNER, RingElt, alpha_from_spec, make_field, norm


def brute_sifted(f, func, R, z):
    """Direct sum over every nonzero element, factoring each one."""
    n1, n2, _ = lattice_points(f, R, lo=1)
    total = 0
    for a, b in zip(n1.tolist(), n2.tolist()):
        r = RingElt(a, b)
        if all(norm(f, p) >= z for p, _ in factor(f, r).factors):
            total += func(r)
    return total


def test_sifted_sum_example():
    f = make_field(-1)
    tab = class_table(f, 20)
    w = Weight.norm_indicator(tab)
    assert sifted_sum(f, w, 4) == 32
    assert sifted_sum(f, w, 2) == len(lattice_points(f, 20, lo=1)[0])
    zero = Weight(tab, np.zeros(len(tab), dtype=np.int64))
    assert sifted_sum(f, zero, 4) == 0
    with pytest.raises(SupportUnbounded):
        sifted_sum(f, lambda r: 1, 4)


@pytest.mark.parametrize("d", [-1, -2, -3, -7, -19])
def test_sifted_sum_matches_factor(d):
    f = make_field(d)
    R = 400
    tab = class_table(f, R)
    w = Weight.from_function(tab, lambda r: (norm(f, r) * 7) % 11 - 3)
    for z in (2, 5, 13, 40):
        assert sifted_sum(f, w, z) == brute_sifted(f, w, R, z)


def test_legendre_examples():
    f = make_field(-1)
    tab = class_table(f, 20)
    w = Weight.norm_indicator(tab)
    res = legendre_identity_check(f, w, 4)
    assert res.equal and res.lhs == res.rhs == 32
    big = legendre_identity_check(f, w, 100)
    assert big.equal and big.lhs == 4


def test_legendre_gaussian_weight():
    f = make_field(-3)
    alpha = alpha_from_spec(f, "e_pi")
    w, wt = gaussian_weights(f, 2**10, Fraction(3, 10), alpha, R=2**10)
    for weight in (w, wt):
        res = legendre_identity_check(f, weight, 32)
        assert res.equal
        assert abs(res.lhs - res.rhs) <= 2.0**-40


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(HEEGNER), st.integers(50, 1500), st.integers(2, 64), st.integers(0, 2**32))
def test_legendre_random(d, R, z, seed):
    f = make_field(d)
    tab = class_table(f, R)
    rng = np.random.default_rng(seed)
    w = Weight(tab, rng.integers(-50, 50, len(tab)))
    assert legendre_identity_check(f, w, z).equal


def test_buchstab_example():
    f = make_field(-1)
    x = 2**10
    cfg = SieveConfig(x, 0.5, 0.3, 16, x)
    assert cfg.z == 32
    tab = class_table(f, x)
    g = Weight.norm_indicator(tab, lo=16)
    res = buchstab_decompose(f, cfg, g)
    assert res.identity_gap == 0
    assert res.max_q_level <= res.q_level_bound
    zero = Weight(tab, np.zeros(len(tab), dtype=np.int64))
    r0 = buchstab_decompose(f, cfg, zero)
    assert all(v == 0 for v in r0.terms) and r0.residual == 0


def test_buchstab_early_truncation():
    f = make_field(-1)
    x = 2**12
    cfg = SieveConfig(x, 0.5, 0.3, 64, x)
    g = Weight.norm_indicator(class_table(f, x), lo=64)
    res = buchstab_decompose(f, cfg, g, t=1)
    assert res.identity_gap == 0
    assert res.residual != 0


def test_buchstab_requires_vanishing():
    f = make_field(-1)
    cfg = SieveConfig(2**10, 0.5, 0.3, 16, 2**10)
    g = Weight.norm_indicator(class_table(f, 2**10), lo=2)
    with pytest.raises(GNotVanishing):
        buchstab_decompose(f, cfg, g)


def test_buchstab_nodes_partition():
    f = make_field(-3)
    x = 2**10
    cfg = SieveConfig(x, 0.5, 0.3, 16, x)
    tab = class_table(f, x)
    res = buchstab_decompose(f, cfg, Weight.norm_indicator(tab, lo=16), keep_nodes=True)
    order = {tab.class_of(p): i for i, p in enumerate(tab.primes_below(cfg.z))}
    by_level = {}
    for node in res.nodes:
        keys = [order[tab.class_of(p)] for p in node.primes]
        assert keys == sorted(keys, reverse=True) and len(set(keys)) == len(keys)
        norms = [norm(f, p) for p in node.primes]
        assert norms == sorted(norms, reverse=True)
        assert node.norm == math.prod(norms)
        assert (node.kind == "P") == (node.norm > cfg.x_mu)
        by_level.setdefault(node.s, []).append(node)
    # Q'_s: extensions of Q_{s-1} by a smaller prime; P_s and Q_s split it
    q_prev = [()]
    for s in sorted(by_level):
        ext = {tup + (p,) for tup in q_prev for p in tab.primes_below(cfg.z)
               if not tup or order[tab.class_of(p)] < order[tab.class_of(tup[-1])]}
        assert {n.primes for n in by_level[s]} == ext
        q_prev = [n.primes for n in by_level[s] if n.kind == "Q"]


def test_type_split_examples():
    f = make_field(-1)
    x = 2**10
    cfg = SieveConfig(x, 0.5, 0.3, 32, x)
    tab = class_table(f, x)
    w = Weight.norm_indicator(tab, lo=1)
    ts = type_split(f, cfg, w, w)
    assert ts.S_I == 0 and ts.S_II == 0 and ts.total_check
    wt = Weight.norm_indicator(tab, lo=1, hi=700)
    cfg_big = SieveConfig(x, 0.5, 0.3, x, x)
    ts = type_split(f, cfg_big, w, wt)
    assert ts.total_check
    # every m in the support has N(m) <= x < M only when M > R
    big_m = SieveConfig(2**11, 0.5, 0.3, 2**11, x)
    ts = type_split(f, big_m, w, wt)
    assert ts.S_II == 0 and ts.total_check


def test_type_split_gaussian_desk():
    f = make_field(-1)
    x = 2**12
    alpha = alpha_from_spec(f, "sqrt2_sqrt3")
    w, wt = gaussian_weights(f, x, Fraction(3, 10), alpha, R=x)
    cfg = SieveConfig(x, 0.5, 5 / 14, 64, x)
    ts = type_split(f, cfg, w, wt)
    assert ts.total_check
    assert abs(ts.S_I + ts.S_II - ts.difference) <= 2.0**-40
    smoke = harman_smoke(f, cfg, w, wt)
    assert math.isfinite(smoke["ratio"]) and smoke["lhs"] >= 0


def test_gaussian_weights_associate_invariant():
    f = make_field(-3)
    alpha = alpha_from_spec(f, "log2_gamma")
    w, wt = gaussian_weights(f, 2**9, Fraction(1, 4), alpha)
    for n1 in range(-6, 7):
        for n2 in range(-6, 7):
            n = RingElt(n1, n2)
            if not n:
                continue
            for u in f.units:
                un = RingElt(u.n1 * n1 + f.xi1 * u.n2 * n2, u.n1 * n2 + u.n2 * n1 + f.xi2 * u.n2 * n2)
                assert w(un) == w(n) and wt(un) == wt(n)


def test_sieve_config_validation():
    with pytest.raises(ParamOutOfRange):
        SieveConfig(2**10, 0.6, 0.3, 16, 2**10)
    with pytest.raises(ParamOutOfRange):
        SieveConfig(2**10, 0.5, 0.3, 8, 2**10)
    assert SieveConfig(2**10, 0.5, 0.3, 16, 2**10).t_default == 11
