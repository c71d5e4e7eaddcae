import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from flux_oracle import _breakpoints, density_minus, density_plus, flux_oracle, flux_scales
from kinpipe.kinetic import (SQRT3, CellKineticState, chi, chi_gauss, exact_flux,
                             interface_flux, interface_flux_arrays, maxwellian_from_macro,
                             partial_moments)

G = 9.81


def test_chi_values():
    assert chi(0.0) == pytest.approx(1.0 / (2.0 * SQRT3), rel=1e-15)
    assert float(chi(0.0)) == pytest.approx(0.28868, abs=1e-5)
    assert chi(2.0) == 0.0
    assert chi(-1.7) == chi(1.7)


@pytest.mark.parametrize("profile", [chi, chi_gauss])
def test_profile_moments(profile):
    lim = SQRT3 if profile is chi else 40.0
    for p, expected in ((0, 1.0), (1, 0.0), (2, 1.0)):
        val, _ = quad(lambda w: w**p * profile(w), -lim, lim, points=[0.0], limit=200)
        assert val == pytest.approx(expected, abs=1e-12)


def test_flat_closed_form_moments():
    # closed form of the profile: half-width sqrt 3, height 1/(2 sqrt 3)
    h = 1.0 / (2.0 * SQRT3)
    assert 2 * SQRT3 * h == pytest.approx(1.0, rel=1e-15)
    assert 2 * SQRT3**3 / 3 * h == pytest.approx(1.0, rel=1e-15)


def test_full_line_moments():
    for c in (0.5, 10.0, 1400.0):
        m = partial_moments(CellKineticState(2.0, 3.0, c))
        np.testing.assert_allclose(m, (2.0, 6.0, 18.0 + 2.0 * c * c), rtol=1e-13)


def test_half_line_moments_match_midpoint_quadrature():
    A, c = 1.7, 3.0
    m = partial_moments(CellKineticState(A, 0.0, c), 0.0, np.inf)
    expected = (A / 2, SQRT3 * A * c / 4, A * c * c / 2)
    np.testing.assert_allclose(m, expected, rtol=1e-14)
    # independent midpoint rule with 10^6 nodes over the support
    n = 1_000_000
    a = SQRT3 * c
    xi = (np.arange(n) + 0.5) * a / n
    dens = CellKineticState(A, 0.0, c).density(xi)
    brute = [np.sum(xi**p * dens) * a / n for p in range(3)]
    np.testing.assert_allclose(m, brute, rtol=1e-9)


def test_disjoint_interval_gives_zero():
    st_ = CellKineticState(1.0, 0.0, 1.0)
    assert partial_moments(st_, 5.0, 7.0) == (0.0, 0.0, 0.0)
    assert partial_moments(st_, -np.inf, -2.0) == (0.0, 0.0, 0.0)


def test_partial_moments_rejects_reversed_interval():
    with pytest.raises(ValueError):
        partial_moments(CellKineticState(1.0, 0.0, 1.0), 1.0, 0.0)


def test_gauss_moments_against_quadrature():
    s = CellKineticState(1.3, 0.4, 0.9)
    for a, b in ((-np.inf, 0.0), (0.2, 1.5), (-1.0, np.inf)):
        m = partial_moments(s, a, b, "gauss")
        for p in range(3):
            ref, _ = quad(lambda x: x**p * s.density(x, "gauss"), a, b)
            assert m[p] == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_maxwellian_from_macro():
    assert maxwellian_from_macro(2.0, 10.0, 1400.0).U == 5.0
    assert maxwellian_from_macro(1.0, 0.0, 1.0).U == 0.0
    with pytest.raises(ValueError):
        maxwellian_from_macro(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        maxwellian_from_macro(1.0, 1.0, -1.0)


def test_consistency_with_exact_flux():
    s = CellKineticState(2.0, 1.5, 3.0)
    f = interface_flux(s, s, 0.0)
    fa, fq = exact_flux(2.0, 3.0, 3.0)
    for v, ref in ((f.fa_minus, fa), (f.fa_plus, fa), (f.fq_minus, fq), (f.fq_plus, fq)):
        assert v == pytest.approx(ref, rel=1e-14)


def test_total_reflection_at_high_barrier():
    c = 2.0
    left, right = CellKineticState(1.0, 0.0, c), CellKineticState(0.7, 0.0, c)
    dz = 1.01 * 3.0 * c * c / (2.0 * G)
    f = interface_flux(left, right, dz, G)
    # no left particle crosses; only right particles rolling down the barrier do
    downhill = partial_moments(right, -np.inf, 0.0)[1]
    assert f.fa_minus == pytest.approx(downhill, rel=1e-14)
    assert f.fa_plus == pytest.approx(downhill, rel=1e-14)
    f_empty = interface_flux(left, CellKineticState(1e-300, 0.0, c), dz, G)
    assert abs(f_empty.fa_minus) < 1e-15
    # the barrier acts as a wall for the left cell
    assert f_empty.fq_minus == pytest.approx(c * c * 1.0, rel=1e-14)


def test_upwind_limit():
    c = 1.0
    for u in (2.0, -2.0):
        left, right = CellKineticState(1.2, u, c), CellKineticState(0.8, u * 1.1, c)
        f = interface_flux(left, right, 0.0)
        up = left if u > 0 else right
        fa, fq = exact_flux(up.A, up.Q, c)
        assert f.fa_minus == pytest.approx(fa, rel=1e-14)
        assert f.fq_minus == pytest.approx(fq, rel=1e-14)
        assert f.fq_plus == pytest.approx(fq, rel=1e-14)


def test_negative_barrier_is_pure_transmission():
    c = 1.0
    left = CellKineticState(1.0, 0.3, c)
    right = CellKineticState(1.0, -0.2, c)
    f = interface_flux(left, right, -0.5, G)
    # every right-moving left particle gets through: mass flux is the half moment
    out_l = partial_moments(left, 0.0, np.inf)[1]
    in_r = partial_moments(right, -np.inf, -math.sqrt(2 * G * 0.5))[1]
    assert f.fa_minus == pytest.approx(out_l + in_r, rel=1e-14)


def test_still_water_flux_balance():
    c, dz = 1400.0, 3.0
    AL = 2.0
    AR = AL * math.exp(-G * dz / c**2)
    f = interface_flux(CellKineticState(AL, 0.0, c), CellKineticState(AR, 0.0, c), dz, G)
    # momentum flux of each side balances its own pressure at rest
    assert f.fq_minus == pytest.approx(c * c * AL, rel=1e-6)
    assert f.fq_plus == pytest.approx(c * c * AR, rel=1e-6)


def test_interface_flux_rejects_mixed_sound_speeds():
    with pytest.raises(ValueError):
        interface_flux(CellKineticState(1.0, 0.0, 1.0), CellKineticState(1.0, 0.0, 2.0), 0.0)


def test_unknown_equilibrium():
    with pytest.raises(ValueError):
        interface_flux_arrays(1.0, 0.0, 1.0, 0.0, 0.0, 1.0, G, "lorentz")


@pytest.mark.parametrize("seed", range(6))
def test_closed_form_matches_adaptive_quadrature(seed):
    rng = np.random.default_rng(seed)
    c = [10.0, 1400.0][seed % 2]
    AL, AR = rng.uniform(0.1, 10.0, 2)
    UL, UR = rng.uniform(-5.0, 5.0, 2)
    dz = rng.uniform(-5.0, 5.0)
    lam = 2 * G * dz
    f = interface_flux(CellKineticState(AL, UL, c), CellKineticState(AR, UR, c), dz, G)
    cuts = np.unique(_breakpoints(*(np.atleast_1d(v) for v in (AL, UL, AR, UR, lam)),
                                  np.atleast_1d(c))[0])
    span = np.max(np.abs(cuts)) + 1.0
    for dens, fa, fq in ((density_minus, f.fa_minus, f.fq_minus),
                         (density_plus, f.fa_plus, f.fq_plus)):
        for p, val in ((1, fa), (2, fq)):
            ref, _ = quad(lambda x: x**p * float(dens(AL, UL, AR, UR, lam, c, np.array(x))),
                          -span, span, points=cuts, limit=400, epsabs=0, epsrel=1e-11)
            scale = flux_scales(AL, UL, AR, UR, dz, c)[p - 1]
            assert abs(val - ref) <= 1e-9 * scale


@pytest.mark.parametrize("dz", [-3.0, 0.0, 0.05, 2.0])
def test_gauss_interface_against_quadrature(dz):
    c = 1.0
    AL, UL, AR, UR = 1.3, 0.4, 0.8, -0.7
    lam = 2 * G * dz
    f = interface_flux(CellKineticState(AL, UL, c), CellKineticState(AR, UR, c), dz, G, "gauss")

    def m(A, U, x):
        return A / c * chi_gauss((x - U) / c)

    def dminus(x):
        if x > 0:
            return m(AL, UL, x)
        if x * x < lam:
            return m(AL, UL, -x)
        return m(AR, UR, -math.sqrt(x * x - lam))

    cuts = [0.0] + ([-math.sqrt(lam)] if lam > 0 else [])
    for p, val in ((1, f.fa_minus), (2, f.fq_minus)):
        ref, _ = quad(lambda x: x**p * dminus(x), -30, 30, points=cuts, limit=400)
        assert float(val) == pytest.approx(ref, rel=1e-10, abs=1e-13)
    assert float(f.fa_plus) == pytest.approx(float(f.fa_minus), rel=1e-12, abs=1e-14)


states = st.tuples(st.floats(1e-3, 1e3), st.floats(-3.0, 3.0))


@settings(max_examples=300, deadline=None)
@given(states, states, st.floats(-2.0, 2.0), st.sampled_from([1.0, 10.0, 1400.0]))
def test_mass_flux_equality(sl, sr, dzr, c):
    (AL, ul), (AR, ur) = sl, sr
    UL, UR, dz = ul * c, ur * c, dzr * c * c / G
    fa_m, _, fa_p, _ = interface_flux_arrays(AL, UL, AR, UR, dz, c, G)
    scale = flux_scales(AL, UL, AR, UR, dz, c)[0]
    assert abs(fa_m - fa_p) <= 1e-13 * scale


@settings(max_examples=300, deadline=None)
@given(states, states, st.floats(-2.0, 2.0), st.sampled_from([1.0, 10.0, 1400.0]))
def test_mirror_symmetry(sl, sr, dzr, c):
    (AL, ul), (AR, ur) = sl, sr
    UL, UR, dz = ul * c, ur * c, dzr * c * c / G
    fam, fqm, fap, fqp = interface_flux_arrays(AL, UL, AR, UR, dz, c, G)
    gam, gqm, gap, gqp = interface_flux_arrays(AR, -UR, AL, -UL, -dz, c, G)
    ms, qs = flux_scales(AL, UL, AR, UR, dz, c)
    assert abs(gam + fap) <= 1e-13 * ms
    assert abs(gap + fam) <= 1e-13 * ms
    assert abs(gqm - fqp) <= 1e-13 * qs
    assert abs(gqp - fqm) <= 1e-13 * qs


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(-5.0, 5.0), st.floats(1e-2, 1e3))
def test_consistency_property(A, ur, c):
    U = ur * c
    fam, fqm, fap, fqp = interface_flux_arrays(A, U, A, U, 0.0, c, G)
    fa, fq = exact_flux(A, A * U, c)
    scale = A * (abs(U) + c)
    assert abs(fam - fa) <= 1e-13 * scale and abs(fap - fa) <= 1e-13 * scale
    assert fqm == pytest.approx(fq, rel=1e-13) and fqp == pytest.approx(fq, rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(states, states, st.floats(-2.0, 2.0), st.sampled_from([1.0, 1400.0]))
def test_matches_breakpoint_oracle(sl, sr, dzr, c):
    (AL, ul), (AR, ur) = sl, sr
    args = (AL, ul * c, AR, ur * c, dzr * c * c / G, c)
    got = interface_flux_arrays(*args, G)
    ref = flux_oracle(*args)
    ms, qs = flux_scales(*args)
    for k, s in zip(range(4), (ms, qs, ms, qs)):
        assert abs(got[k] - ref[k][0]) <= 1e-12 * s
