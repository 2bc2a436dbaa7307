import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphap.dioph import (
    check_lower_bound_perturbed,
    check_lower_bound_static,
    gintner_search,
    h_alpha_count,
    perturbed_range,
    spacing_count,
)
from alphap.errors import AlphaLooksRational
from alphap.qfield import ONE, AlphaCoords, RingElt, alpha_from_spec, make_field, norm, to_fx


@pytest.fixture(scope="module")
def gauss():
    return make_field(-1)


def test_gintner_example(gauss):
    alpha = alpha_from_spec(gauss, "sqrt2_sqrt3")
    hits = gintner_search(gauss, alpha, 2)
    pairs = {(h.a, h.q): h for h in hits}
    h = pairs[(RingElt(0, 3), RingElt(1, 1))]
    z = (1 + 1j) * complex(math.sqrt(2), math.sqrt(3)) - 3j
    assert abs(z) == pytest.approx(0.3501, abs=5e-4)
    assert h.gamma_abs == pytest.approx(abs(z) / math.sqrt(2), rel=1e-12)
    assert h.gamma_abs == pytest.approx(0.2476, abs=5e-4)
    assert h.gamma_abs <= gauss.gintner_C / 2
    assert all(norm(gauss, h.q) > 1 for h in hits)


def test_gintner_invariants_hold(gauss):
    for d in (-1, -3, -7, -163):
        f = make_field(d)
        alpha = alpha_from_spec(f, "e_pi")
        hits = gintner_search(f, alpha, 2000)
        assert hits
        norms = [norm(f, h.q) for h in hits]
        assert norms == sorted(norms)
        for h in hits:
            nq = norm(f, h.q)
            assert h.gamma_abs_sq * nq * nq <= Fraction(f.gintner_C) ** 2
            assert norm(f, h.q) > 1


def test_gintner_rational_alpha(gauss):
    alpha = AlphaCoords.from_fractions(Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(AlphaLooksRational):
        gintner_search(gauss, alpha, 10)


@pytest.mark.parametrize("d", [-1, -3])
def test_static_lower_bound_small(d):
    assert check_lower_bound_static(make_field(d), 50) == []


def test_perturbed_lower_bound():
    for d in (-1, -3, -11):
        f = make_field(d)
        alpha = alpha_from_spec(f, "log2_gamma")
        for h in gintner_search(f, alpha, 5000)[-5:]:
            assert check_lower_bound_perturbed(f, h, 10**5, alpha) == []


def test_h_alpha_examples(gauss):
    alpha = alpha_from_spec(gauss, "e_pi")
    assert h_alpha_count(gauss, alpha, 10, Fraction(1, 2))[0] == 36
    assert h_alpha_count(gauss, alpha, 0, Fraction(1, 2))[0] == 0


def test_h_alpha_monotone(gauss):
    alpha = alpha_from_spec(gauss, "sqrt2_sqrt3")
    prev_x = -1
    for x in (10, 100, 1000, 5000):
        row = [h_alpha_count(gauss, alpha, x, Fraction(k, 20))[0] for k in range(1, 11)]
        assert row == sorted(row)
        assert row[0] >= prev_x
        prev_x = row[0]


def test_h_alpha_bound_report(gauss):
    alpha = alpha_from_spec(gauss, "e_pi")
    h = gintner_search(gauss, alpha, 500)[-1]
    count, rep = h_alpha_count(gauss, alpha, 2000, Fraction(1, 10), approx=h)
    assert rep.value == count and rep.rhs > 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([-1, -2, -3, -7]), st.floats(-30, 30), st.floats(-30, 30), st.integers(0, 2**32))
def test_spacing_bound(d, cx, cy, seed):
    f = make_field(d)
    alpha = alpha_from_spec(f, "e_pi")
    h = gintner_search(f, alpha, 3000)[-1]
    nq = norm(f, h.q)
    diam = math.sqrt(nq) / (12 * h.C * f.norm_omega)
    side = diam / math.sqrt(2)
    rng = np.random.default_rng(seed)
    dv = float(rng.uniform(0.001, 0.05))
    count = spacing_count(f, alpha, (cx, cy), side, to_fx(Fraction(repr(dv))))
    assert count <= 4 * (1 + 4 * math.sqrt(nq * f.norm_omega) * dv) ** 2


def test_perturbed_range_positive():
    f = make_field(-1)
    assert perturbed_range(f, RingElt(100, 0), f.gintner_C) >= 1
    assert ONE > 0
