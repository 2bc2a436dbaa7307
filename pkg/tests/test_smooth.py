import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphap.errors import EqualArguments, ParamOutOfRange, PreconditionError
from alphap.qfield import HEEGNER, ONE, AlphaCoords, RingElt, alpha_from_spec, make_field, mul_alpha, norm, to_fx
from alphap.smooth import (
    SmoothWeights,
    _smooth_cutoff_tail,
    cutoff_index,
    gauss_lattice_sum,
    indicator_expansion,
    perron_closed_form,
    perron_indicator,
    sawtooth_approx,
    sawtooth_approx_many,
    sawtooth_bound,
    sawtooth_exact,
    smooth_cutoff_tail,
    theta_float,
    theta_wdelta,
    weight_arrays,
    weight_eval,
)


def fx_pair(a, b):
    return AlphaCoords.from_fractions(Fraction(a), Fraction(b))


def test_sawtooth_examples():
    assert sawtooth_exact(0.5) == 0
    assert sawtooth_exact(0.25) == -0.25
    errs = [sawtooth_approx(0.5, J)[2] for J in (1, 10, 100)]
    assert max(errs) < 1e-12
    _, _, err = sawtooth_approx(0.3, 100)
    assert err <= 2 * min(math.log(200), 1 / (100 * 0.3))
    with pytest.raises(PreconditionError):
        sawtooth_approx(0.3, 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-100, 100, allow_nan=False), st.sampled_from([10, 100, 1000]))
def test_sawtooth_bound_property(x, J):
    _, _, err = sawtooth_approx(x, J)
    assert err <= 2 * sawtooth_bound(x, J)


def test_sawtooth_vectorized_matches_scalar():
    xs = np.linspace(-3, 3, 41)
    v = sawtooth_approx_many(xs, 50)
    for x, a in zip(xs, v):
        assert a == pytest.approx(sawtooth_approx(float(x), 50)[0], abs=1e-13)


@pytest.fixture(scope="module")
def weights():
    f = make_field(-1)
    return SmoothWeights(f, 10**4, 0.25, Fraction(3, 10), alpha_from_spec(f, "e_pi"))


def test_smooth_weights_validation():
    f = make_field(-1)
    a = fx_pair(0, 0)
    with pytest.raises(ParamOutOfRange):
        SmoothWeights(f, 100, 0.0, "0.3", a)
    with pytest.raises(ParamOutOfRange):
        SmoothWeights(f, 100, 0.2, "0.6", a)
    w = SmoothWeights(f, 100, 0.5, "0.5", a)
    assert w.N == pytest.approx(10)


@pytest.mark.parametrize("d", [-1, -3, -7])
def test_indicator_expansion_exact_off_boundary(d):
    f = make_field(d)
    w = SmoothWeights(f, 10**4, 0.25, Fraction(3, 10), alpha_from_spec(f, "sqrt2_sqrt3"))
    seen = {0: 0, 1: 0}
    for n1 in range(-15, 16):
        for n2 in range(-15, 16):
            lhs, rhs, boundary = indicator_expansion(f, w, RingElt(n1, n2))
            assert not boundary
            assert rhs == lhs
            seen[lhs] += 1
    assert seen[0] and seen[1]


def test_indicator_expansion_boundary():
    f = make_field(-1)
    w = SmoothWeights(f, 100, 0.25, Fraction(1, 4), fx_pair(Fraction(1, 4), Fraction(1, 10)))
    lhs, rhs, boundary = indicator_expansion(f, w, RingElt(1, 0))
    assert boundary


def test_theta_examples():
    direct, dual = theta_wdelta(0, Fraction(1, 10))
    with mpmath.workprec(600):
        assert abs(direct - 1) < mpmath.mpf(10) ** -130
        direct, _ = theta_wdelta(Fraction(1, 2), Fraction(1, 10))
        two = 2 * mpmath.exp(-25 * mpmath.pi)
        assert abs(direct / two - 1) < 1e-30


def test_theta_duality_grid():
    for th in np.linspace(0, 1, 10):
        for dl in (0.05, 0.1, 0.2, 0.35, 0.5):
            direct, dual = theta_wdelta(repr(float(th)), repr(dl))
            assert abs(direct - dual) <= 1e-12 * abs(direct) or abs(direct) < mpmath.mpf(2) ** -120


def test_theta_float_agrees():
    for th in (0.0, 0.1, 0.37, 0.5, 0.93):
        for dl in (0.1, 0.3, 0.5):
            direct, _ = theta_wdelta(repr(th), repr(dl))
            assert theta_float(np.array([th]), dl)[0] == pytest.approx(float(direct), rel=1e-13, abs=1e-300)


def test_gauss_sum_spot_value():
    f = make_field(-1)
    g = gauss_lattice_sum(f, 1, fx_pair(0, 0), 1.0)
    expect = math.sqrt(math.pi) / math.gamma(0.75) ** 2
    assert g.direct.real == pytest.approx(1.1803405990160962, rel=1e-14)
    assert g.direct.real == pytest.approx(expect, rel=1e-14)
    assert g.poisson == pytest.approx(expect, rel=1e-14)
    shifted = gauss_lattice_sum(f, 1, fx_pair(3, -2), 1.0)
    assert shifted.direct == g.direct


def test_gauss_sum_far_example():
    f = make_field(-1)
    g = gauss_lattice_sum(f, 100, fx_pair(Fraction(1, 2), Fraction(1, 2)), 2.0)
    assert g.cls == "far"
    assert g.rel_err < 1e-9
    assert math.isfinite(g.far_ratio)


@pytest.mark.parametrize("d", HEEGNER)
def test_gauss_sum_poisson_identity(d):
    f = make_field(d)
    rng = np.random.default_rng(-d)
    for R in (1, 4, 25):
        th = AlphaCoords(int(rng.integers(0, 2**62)) << 66, int(rng.integers(0, 2**62)) << 66)
        assert gauss_lattice_sum(f, R, th, 1.0).rel_err < 1e-9


def test_cutoff_tail_examples():
    f = make_field(-1)
    a = fx_pair(0, 0)
    w = SmoothWeights(f, 10**4, 0.1, Fraction(3, 10), a)
    tail = float(smooth_cutoff_tail(f, w))
    assert tail == pytest.approx(5.1924783625e-4, rel=1e-9)
    w2 = SmoothWeights(f, 100, 0.5, Fraction(1, 2), a)
    assert math.isfinite(float(smooth_cutoff_tail(f, w2)))
    assert cutoff_index(f, w2) == 6
    assert math.isfinite(float(_smooth_cutoff_tail(f, 100, 0.0, 0.5)))


@pytest.mark.parametrize("d", [-1, -3, -11])
@pytest.mark.parametrize("x,eps,dl", [(10**4, 0.1, 0.3), (100, 0.25, 0.5), (10**3, 0.5, 0.2)])
def test_cutoff_tail_brute_force(d, x, eps, dl):
    f = make_field(d)
    c = (1 + abs(f.re_omega)) / f.im_omega
    K = int(math.floor(c / dl * x ** (eps / 2)))
    L = K + 80
    j = np.arange(-L, L + 1)
    J1, J2 = np.meshgrid(j, j)
    mask = np.maximum(abs(J1), abs(J2)) > K
    brute = float(np.exp(-math.pi * dl * dl * (J1**2 + J2**2))[mask].sum())
    got = float(_smooth_cutoff_tail(f, x, eps, dl))
    assert got == pytest.approx(brute, rel=1e-12, abs=1e-300)


def test_perron_examples():
    v, bound = perron_indicator(1, 2, 100)
    assert abs(v - 1) <= bound and bound == pytest.approx(0.04)
    v, bound = perron_indicator(2, 1, 100)
    assert abs(v) <= bound
    with pytest.raises(EqualArguments):
        perron_indicator(1, 1, 10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(1, 200))
def test_perron_matches_sine_integral(gamma, rho, T):
    if abs(gamma - rho) < 1e-6:
        return
    v, bound = perron_indicator(gamma, rho, T)
    assert v == pytest.approx(perron_closed_form(gamma, rho, T), abs=1e-8)
    assert abs(v - (1 if gamma < rho else 0)) <= bound


def test_weight_eval_examples(weights):
    f = weights.field
    w0, wt0 = weight_eval(weights, RingElt(0, 0))
    dl = weights.delta_float
    assert w0 == pytest.approx(dl * dl)
    W0 = float(theta_wdelta(0, Fraction(3, 10))[0])
    assert wt0 == pytest.approx(W0 * W0, rel=1e-14)
    far = RingElt(400, 400)
    assert max(weight_eval(weights, far)) < 1e-100


def test_weight_eval_lattice_alpha():
    f = make_field(-3)
    w = SmoothWeights(f, 10**4, 0.25, Fraction(1, 4), fx_pair(Fraction(1, 4), Fraction(3, 4)))
    z = RingElt(4, 0)
    assert mul_alpha(f, z, w.alpha) == AlphaCoords(ONE, 3 * ONE)
    fn = math.exp(-math.pi * norm(f, z) / w.N)
    W0 = float(theta_wdelta(0, Fraction(1, 4))[0])
    assert weight_eval(w, z)[1] == pytest.approx(fn * W0 * W0, rel=1e-14)


def test_w_depends_only_on_norm(weights):
    f = weights.field
    by_norm = {}
    for n1 in range(-20, 21):
        for n2 in range(-20, 21):
            z = RingElt(n1, n2)
            val = weight_eval(weights, z)[0]
            assert by_norm.setdefault(norm(f, z), val) == val


def test_weight_arrays_match_scalar(weights):
    n1 = np.arange(-30, 31, 7, dtype=np.int64)
    n2 = np.arange(-12, 49, 7, dtype=np.int64)
    w_arr, wt_arr = weight_arrays(weights, n1, n2)
    for i in range(len(n1)):
        w, wt = weight_eval(weights, RingElt(int(n1[i]), int(n2[i])))
        assert w_arr[i] == pytest.approx(w, rel=1e-12)
        assert wt_arr[i] == pytest.approx(wt, rel=1e-9, abs=1e-300)
