import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reference_rate import reference_rate
from sepm_qkd.errors import DegenerateInputError, ParameterError
from sepm_qkd.keyrate import (CSV_COLUMNS, bs_attack_term, coincidence_rate, cutoff_distance,
                              detection_rates, distance_grid, error_rate, h2, key_rate,
                              plob_bound, read_csv, single_repeater_bound, sweep, to_csv,
                              transmittance)
from sepm_qkd.params import ProtocolParams

DEFAULTS = ProtocolParams()


@pytest.mark.parametrize("p,expected", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0)])
def test_h2_exact(p, expected):
    assert h2(p) == expected


def test_h2_011():
    # direct evaluation gives 0.499916, slightly below the rounded 0.49993 quoted elsewhere
    assert h2(0.11) == pytest.approx(0.4999160, abs=1e-6)


@pytest.mark.parametrize("p", [-0.01, 1.01])
def test_h2_domain(p):
    with pytest.raises(ParameterError):
        h2(p)


@pytest.mark.parametrize("x,eta", [(0, 1.0), (50, 0.1), (100, 0.01)])
def test_transmittance(x, eta):
    assert transmittance(x) == pytest.approx(eta, rel=1e-12)


def test_transmittance_alpha_f_form():
    p = ProtocolParams(beta_l=0.35)
    assert transmittance(17.0, 0.35) == pytest.approx(math.exp(-p.alpha_f * 17.0), rel=1e-14)


def test_detection_rate_examples():
    r = detection_rates(DEFAULTS, 1.0)
    assert r.p_d == pytest.approx(1.0513e-8, rel=1e-4)
    assert r.p_hom == pytest.approx(5.256e-15, rel=1e-3)
    assert r.p_e_dark == pytest.approx(1.28e-14, rel=1e-12)
    assert r.p_e_hom == r.p_r_hom == r.p_hom / 2


def test_error_rate_default():
    assert error_rate(DEFAULTS, 1.0) == pytest.approx(0.0150, abs=5e-5)


def test_error_rate_limits():
    clean = ProtocolParams(p_dark=0.0, gamma=1e-4)
    assert error_rate(clean, 1.0) == pytest.approx(clean.e_d, rel=1e-6)
    assert error_rate(DEFAULTS, 1e-30) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(DegenerateInputError):
        error_rate(ProtocolParams(p_dark=0.0, gamma=0.0), 0.5)


def test_key_rate_examples():
    p0 = key_rate(DEFAULTS, 0.0)
    assert p0.chi2_term == 0.0
    assert p0.rate == pytest.approx(8.8e-9, rel=0.01)
    expected = p0.Q * (1 - 1.2 * h2(p0.qber) - 2 * p0.qber)
    assert p0.rate == pytest.approx(expected, rel=1e-14)
    p100 = key_rate(DEFAULTS, 100.0)
    assert p100.eta == pytest.approx(0.01)
    assert p100.rate == pytest.approx(8.8e-11, rel=0.01)
    assert 0 < p100.chi2_term < 2e-5


@pytest.mark.parametrize("x", [0.0, 25.0, 100.0, 200.0, 250.0])
@pytest.mark.parametrize("bs", [True, False])
def test_key_rate_matches_reference(x, bs):
    q, e, r = reference_rate(x, bs_attack=bs)
    pt = key_rate(DEFAULTS.replace(include_bs_attack=bs), x)
    assert pt.Q == pytest.approx(q, rel=1e-12)
    assert pt.qber == pytest.approx(e, rel=1e-12)
    assert pt.rate == pytest.approx(r, rel=1e-9, abs=1e-30)


def test_rate_clamped():
    pt = key_rate(DEFAULTS.replace(e_d=0.3), 0.0)
    assert pt.rate == 0.0


def test_rate_never_exceeds_q():
    for pt in sweep(DEFAULTS.replace(gamma=0.01), distance_grid(0, 300, 5)):
        assert 0 <= pt.rate <= pt.Q


def test_bs_term_nonnegative_and_null_at_unit_eta():
    assert bs_attack_term(DEFAULTS, 1.0) == 0.0
    for eta in np.logspace(-6, 0, 40):
        assert bs_attack_term(DEFAULTS, eta) >= 0


def test_bs_off_dominates():
    on = sweep(DEFAULTS, distance_grid(0, 300, 2))
    off = sweep(DEFAULTS.replace(include_bs_attack=False), distance_grid(0, 300, 2))
    assert all(b.rate >= a.rate for a, b in zip(on, off))


def test_rate_strictly_decreasing_before_cutoff():
    cut = cutoff_distance(DEFAULTS)
    rates = [p.rate for p in sweep(DEFAULTS, distance_grid(0, math.floor(cut), 1))]
    assert all(b < a for a, b in zip(rates, rates[1:]))


def test_cutoff_resolution():
    cut = cutoff_distance(DEFAULTS)
    assert key_rate(DEFAULTS, cut).rate > 0
    assert key_rate(DEFAULTS, cut + 0.01).rate == 0


def test_literal_mode_never_cuts_off():
    assert cutoff_distance(DEFAULTS.replace(dark_mode="literal")) == math.inf


def test_literal_vs_quadratic_when_dark_counts_negligible():
    # the relative gap is about p_dark / Q, so it stays under 0.1 % once p_d >= 1000 p_dark
    for gamma in (0.1, 0.3):
        quad = ProtocolParams(gamma=gamma)
        lit = quad.replace(dark_mode="literal")
        for eta in np.logspace(-3, 0, 30):
            pd = detection_rates(quad, eta).p_d
            a, b = coincidence_rate(quad, eta), coincidence_rate(lit, eta)
            assert (b - a) / a == pytest.approx((quad.p_dark - 4 * quad.p_dark ** 2) / a, rel=1e-9)
            if pd >= 1000 * quad.p_dark:
                assert abs(b - a) / a < 1e-3
                assert abs(error_rate(lit, eta) / error_rate(quad, eta) - 1) < 1e-3


def test_reference_bounds():
    assert plob_bound(0.5) == pytest.approx(1.0)
    assert single_repeater_bound(0.25) == pytest.approx(1.0)
    assert plob_bound(1.0) == math.inf
    pt = key_rate(DEFAULTS, 50.0)
    assert pt.plob == pytest.approx(-math.log2(1 - 0.01))
    assert pt.srb == pytest.approx(-math.log2(1 - 0.1))
    assert pt.total_km == 100.0


def test_sweep_validation():
    with pytest.raises(ParameterError):
        sweep(DEFAULTS, [])
    with pytest.raises(ParameterError):
        sweep(DEFAULTS, [2.0, 1.0])
    assert len(distance_grid(0, 300, 1)) == 301


def test_csv_round_trip():
    pts = sweep(DEFAULTS, distance_grid(0, 300, 10))
    text = to_csv(pts)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    back = read_csv(io.StringIO(text))
    assert len(back) == len(pts)
    for a, b in zip(pts, back):
        for u, v in zip(a.csv_row(), b.csv_row()):
            assert v == pytest.approx(u, rel=1e-9)
    assert to_csv(back) == text


def test_csv_rejects_bad_header():
    with pytest.raises(ParameterError):
        read_csv("a,b\n1,2\n")


@settings(max_examples=100, deadline=None)
@given(x=st.floats(0, 400), gamma=st.floats(1e-4, 0.05))
def test_rate_properties(x, gamma):
    p = ProtocolParams(gamma=gamma)
    pt = key_rate(p, x)
    assert 0 <= pt.rate <= pt.Q
    assert 0 <= pt.qber <= 0.5
    assert pt.rate <= key_rate(p.replace(include_bs_attack=False), x).rate
