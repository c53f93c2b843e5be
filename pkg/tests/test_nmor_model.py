import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oamrot.errors import NoCrossing
from oamrot.nmor_model import (
    DEFAULT_MEDIUM, DispersionSample, MediumParams, find_extrema, find_zero_crossing,
    larmor_frequency, monotone_limit, rotation_angle, sweep, weak_field_slope,
)

P = DEFAULT_MEDIUM


# --- independent oracles (unscaled MHz arithmetic, written out literally) ----

def eq5_literal(B, p=P):
    G, g, k, Dl = p.Gamma, p.gamma, p.kappa2, p.Delta
    W = p.larmor_coeff * B
    N = 8 * W**2 * (8 * W**2 + G**2 * (k + 2) - 8 * Dl**2) + g * (4 * g * (G**2 - 4 * Dl**2) - G**3 * k * (k + 2))
    D = (8 * W**2 * (32 * G**2 * (k + 3) * (W**2 + Dl**2) + 192 * (Dl**2 - W**2) ** 2 + G**4 * (k + 2) * (k + 6))
         + 2 * g**2 * (G**2 * (k + 2) ** 2 + 16 * Dl**2) * (G**2 * (k + 3) + 12 * Dl**2))
    return 6 * G * W * p.d / (p.l * D * p.d0) * N


def slope_oracle_deg(p=P):
    G, g, k = p.Gamma, p.gamma, p.kappa2
    rad_per_mhz = (6 * p.d / (p.l * p.d0)) * (4 * g - G * k * (k + 2)) / (2 * g * G * (k + 2) ** 2 * (k + 3))
    return math.degrees(rad_per_mhz * p.larmor_coeff)


def crossing_oracle(p=P):
    G, g, k = p.Gamma, p.gamma, p.kappa2
    a, b, c = 64.0, 8 * G**2 * (k + 2), -(g * G**3 * k * (k + 2) - 4 * g**2 * G**2)
    x = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    return math.sqrt(x) / p.larmor_coeff


def grid_extrema(p=P, b_max=1000.0, n=10**6):
    B = np.linspace(b_max / n, b_max, n)
    t = eq5_literal(B, p)
    i = np.nonzero(np.diff(np.sign(np.diff(t))))[0] + 1
    return B[i], t[i]


# --- params ---------------------------------------------------------------

def test_default_medium():
    assert (P.Gamma, P.kappa2, P.Delta, P.d, P.d0, P.larmor_coeff) == (266, 3.3, 0, 5, 0.5, 0.7)
    assert P.gamma == pytest.approx(1.064)
    assert MediumParams.with_gamma_ratio(0.004) == P
    assert P.rabi_frequency == pytest.approx(math.sqrt(3.3 * 266 * 1.064))


@pytest.mark.parametrize("kw", [dict(Gamma=0), dict(gamma=-1), dict(d=0), dict(d0=0), dict(kappa2=-0.1),
                                dict(l=0), dict(larmor_coeff=0), dict(l=1.5)])
def test_params_invariants(kw):
    with pytest.raises(ValueError):
        MediumParams(**kw)


def test_larmor_frequency():
    assert larmor_frequency(1.0) == pytest.approx(0.7)
    assert larmor_frequency(0.0) == 0.0
    assert larmor_frequency(-2.0) == pytest.approx(-1.4)


# --- rotation angle -----------------------------------------------------------

def test_matches_literal_formula():
    B = np.linspace(-300, 300, 2001)
    np.testing.assert_allclose(rotation_angle(B), eq5_literal(B), rtol=1e-12, atol=1e-300)


def test_matches_literal_formula_detuned():
    p = P.replace(Delta=40.0)
    B = np.linspace(-300, 300, 501)
    np.testing.assert_allclose(rotation_angle(B, p), eq5_literal(B, p), rtol=1e-11)


def test_zero_field():
    assert rotation_angle(0.0) == 0.0


def test_large_field_stays_finite():
    t = rotation_angle(np.array([1e4, -1e4, 1e6]))
    assert np.all(np.isfinite(t))


@given(st.floats(1e-6, 1e4))
def test_odd(B):
    a, b = rotation_angle(B), rotation_angle(-B)
    assert abs(a + b) <= 1e-12 * abs(a)


@given(st.floats(-1e3, 1e3).filter(lambda b: abs(b) > 1e-9), st.sampled_from([-3, -1, 1, 3, 4]))
def test_inverse_l_scaling(B, l):
    ref = rotation_angle(B, P) * P.l
    assert abs(rotation_angle(B, P.replace(l=l)) * l - ref) <= 1e-12 * abs(ref)


def test_dispersion_sample_degrees():
    s = DispersionSample(0.3, 0.123)
    assert abs(s.theta_deg - 0.123 * 180 / math.pi) < 1e-12


def test_sweep_order_and_oddness():
    out = sweep(P, [0.0])
    assert out[0].theta == 0
    Bs = [3.0, -1.0, 0.5, 200.0]
    assert [s.B for s in sweep(P, Bs)] == Bs
    pos, neg = sweep(P, [0.7, -0.7])
    assert pos.theta == -neg.theta
    full = sweep(P, np.linspace(-138, 138, 277))
    th = np.array([s.theta for s in full])
    assert len(full) == 277
    np.testing.assert_allclose(th, -th[::-1], rtol=1e-12, atol=1e-300)


# --- slope ------------------------------------------------------------------

def test_weak_field_slope_value():
    s = weak_field_slope()
    assert s == pytest.approx(slope_oracle_deg(), rel=1e-12)
    assert s < 0
    assert abs(s) == pytest.approx(55.8, abs=0.05)
    # measured slope is about 59 deg/G
    assert abs(abs(s) - 59) / 59 < 0.1
    assert abs(math.radians(s)) == pytest.approx(0.975, abs=0.001)


@pytest.mark.parametrize("p", [P, P.replace(l=1), P.replace(Delta=30.0), P.replace(kappa2=0.5, gamma=3.0)])
def test_weak_field_slope_vs_finite_difference(p):
    h = 1e-4
    fd = math.degrees((rotation_angle(h, p) - rotation_angle(-h, p)) / (2 * h))
    assert weak_field_slope(p) == pytest.approx(fd, rel=1e-6)


def test_weak_field_slope_scalings():
    s2 = weak_field_slope(P)
    assert weak_field_slope(P.replace(l=1)) == pytest.approx(2 * s2, rel=1e-14)
    assert weak_field_slope(P.replace(d=10.0)) == pytest.approx(2 * s2, rel=1e-14)


# --- zero crossing ------------------------------------------------------------

def test_zero_crossing_value():
    B = find_zero_crossing()
    assert B == pytest.approx(crossing_oracle(), abs=1e-6)
    assert B == pytest.approx(15.4, abs=0.05)
    assert find_zero_crossing(method="bracket") == pytest.approx(crossing_oracle(), abs=1e-6)


@pytest.mark.parametrize("kw", [dict(l=1), dict(l=-3), dict(d=9.0), dict(d0=0.1)])
def test_zero_crossing_independent_of_prefactors(kw):
    ref = find_zero_crossing()
    assert find_zero_crossing(P.replace(**kw)) == pytest.approx(ref, abs=1e-9)
    assert find_zero_crossing(P.replace(**kw), method="bracket") == pytest.approx(ref, abs=1e-6)


def test_zero_crossing_detuned_uses_bracket():
    p = P.replace(Delta=20.0)
    B = find_zero_crossing(p)
    assert abs(rotation_angle(B, p)) < 1e-9
    Bs = np.linspace(1e-3, B * 0.999, 2000)
    assert np.all(np.sign(rotation_angle(Bs, p)) == np.sign(rotation_angle(1e-3, p)))
    with pytest.raises(ValueError):
        find_zero_crossing(p, method="quadratic")


def test_no_crossing():
    # with kappa2 = 0 the constant term is 4 gamma^2 Gamma^2 > 0: no sign change
    p = P.replace(kappa2=0.0)
    with pytest.raises(NoCrossing):
        find_zero_crossing(p)
    with pytest.raises(NoCrossing):
        find_zero_crossing(p, method="bracket")
    with pytest.raises(NoCrossing):
        find_zero_crossing(P, b_max=10.0)


# --- extrema ----------------------------------------------------------------------

def test_extrema_match_dense_grid():
    ext = find_extrema()
    gB, gt = grid_extrema()
    assert len(ext) == len(gB) == 2
    for (b, t), b_ref in zip(ext, gB):
        assert b == pytest.approx(b_ref, abs=2e-3)
        assert t == pytest.approx(rotation_angle(b), abs=0)
    z = find_zero_crossing()
    assert ext[0][0] < z < ext[1][0]
    assert np.sign(ext[0][1]) == -np.sign(ext[1][1])


def test_extrema_are_stationary():
    for b, _ in find_extrema():
        h = 1e-6 * max(1.0, b)
        left, mid, right = rotation_angle(np.array([b - h, b, b + h]))
        assert (mid - left) * (right - mid) <= 0


def test_extrema_positions_independent_of_prefactors():
    ref = [b for b, _ in find_extrema()]
    for kw in (dict(l=1), dict(d=2.0), dict(d0=1.3)):
        got = [b for b, _ in find_extrema(P.replace(**kw))]
        np.testing.assert_allclose(got, ref, atol=1e-6)


def test_extrema_empty_when_monotone():
    assert find_extrema(P, b_max=1.0) == []


def test_monotone_branch():
    bm = monotone_limit()
    assert bm == pytest.approx(1.4157, abs=1e-3)
    B = np.linspace(-bm, bm, 1000)
    d = np.diff(rotation_angle(B))
    assert np.all(d < 0)


def test_asymptotic_tail():
    # |theta| decreases beyond the second extremum; theta ~ 6 Gamma d / (24 l d0 W)
    b2 = find_extrema()[1][0]
    B = np.geomspace(b2 * 1.001, 1e4, 2000)
    assert np.all(np.diff(np.abs(rotation_angle(B))) < 0)
    limit = 6 * P.Gamma * P.d / (24 * P.l * P.d0 * P.larmor_coeff)
    assert 1e6 * rotation_angle(1e6) == pytest.approx(limit, rel=1e-3)
