import math

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.linalg import spsolve

from bicchain.closedform import (DivergenceError, DomainError,
                                 a_br_quadrature, a_w_cut, a_w_rays,
                                 a_w_resolvent, bessel_exact, bessel_exact_grid,
                                 bound_term, early_approx, far_zone_coefficient,
                                 far_zone_prob, near_zone_amp, near_zone_prob,
                                 q_of_z, res_pole_1d, res_pole_perp, sigma1,
                                 w_far_zone, w_far_zone_coefficient,
                                 w_near_zone_g1, w_norm_sq)
from bicchain.model import ModelParams, hamiltonian, w_state
from bicchain.spectrum import SheetTag, timescales, z_gap


# ---------------------------------------------------------------------------
# branch-cut quadrature

def test_abr_sum_rule_no_poles():
    # for g <= 1 the cut carries the full initial norm
    for g in (0.7, 0.9, 0.98, 1.0):
        assert a_br_quadrature(0.0, g) == pytest.approx(1.0, abs=1e-10)


def test_abr_sum_rule_with_bound_states():
    # for g > 1 the cut carries 1 - (g^2-1)/g^2 = 1/g^2
    assert a_br_quadrature(0.0, 1.1) == pytest.approx(1 / 1.21, abs=1e-10)
    assert a_br_quadrature(0.0, 1.1) == pytest.approx(0.826446, abs=1e-6)


def test_abr_reduces_to_bessel_j0_at_transition():
    from scipy.special import j0
    for t in (0.5, 7.3, 31.0):
        assert a_br_quadrature(t, 1.0) == pytest.approx(j0(2 * t), abs=1e-9)


def test_abr_real_at_zero_detuning():
    # equal weights from the two band edges make A real
    for t in (3.0, 17.0, 42.0):
        assert abs(a_br_quadrature(t, 0.85).imag) < 1e-8


# ---------------------------------------------------------------------------
# bound-state term

def test_bound_term_values():
    assert bound_term(0.0, 1.1) == pytest.approx(0.173554, abs=1e-6)
    assert bound_term(5.0, 1.0) == 0.0
    assert bound_term(5.0, 0.9) == 0.0
    zg, _ = z_gap(1.1)
    period = 2 * math.pi / zg
    assert period == pytest.approx(3.1274, abs=1e-4)
    assert bound_term(7.7 + period, 1.1) == pytest.approx(bound_term(7.7, 1.1), abs=1e-12)


# ---------------------------------------------------------------------------
# exact Bessel representation

def test_bessel_exact_at_zero():
    for g in (0.6, 0.9, 1.0):
        assert bessel_exact(0.0, g) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("g", [0.7, 0.9, 1.0])
def test_bessel_matches_quadrature(g):
    for t in (0.8, 10.0, 27.5):
        assert abs(bessel_exact(t, g) - a_br_quadrature(t, g)) < 1e-7


def test_bessel_grid_matches_scalar():
    ts = np.array([0.0, 1.3, 8.0, 21.7])
    grid = bessel_exact_grid(ts, 0.9)
    for t, val in zip(ts, grid):
        assert abs(val - bessel_exact(t, 0.9)) < 1e-12


def test_bessel_requires_decaying_regime():
    from bicchain.model import InvalidParameterError
    with pytest.raises(InvalidParameterError):
        bessel_exact(1.0, 1.1)


# ---------------------------------------------------------------------------
# early-time approximation

def test_early_approx_normalization():
    for g in (0.5, 0.9, 1.0):
        assert early_approx(0.0, g) == pytest.approx(1.0, abs=1e-14)
        assert early_approx(0.0, g, reduced=True) == pytest.approx(1.0, abs=1e-14)


def test_early_approx_tracks_exact_in_window():
    # t << T_Delta = 90 for g = 0.9
    for t in (1.0, 3.0, 5.0):
        assert abs(early_approx(t, 0.9) - bessel_exact(t, 0.9)) < 0.01


def test_early_approx_breakdown_near_t_br():
    # relative peak deviation crosses 10% around T_br = 9 for g = 0.9
    # (measured: 9.4% at the t=6.8 peak, 13.0% at t=8.4, 16.9% at t=10.0)
    ts = np.arange(0.5, 14.0, 0.005)
    exact = np.abs(bessel_exact_grid(ts, 0.9)) ** 2
    approx = np.abs(early_approx(ts, 0.9)) ** 2
    peaks = [i for i in range(1, len(ts) - 1)
             if exact[i] >= exact[i - 1] and exact[i] >= exact[i + 1]]
    devs = {ts[i]: abs(approx[i] - exact[i]) / exact[i] for i in peaks}
    early = [d for t, d in devs.items() if t <= 5.5]
    late = [d for t, d in devs.items() if t >= 8.0]
    assert max(early) < 0.10
    assert max(late) > 0.10


def test_validity_window_invariant():
    # |early_approx - bessel_exact| stays at the 1e-2 scale for t <= 0.05 T_Delta;
    # measured maxima: 6.5e-4 (g=0.98, window [0, 122.5]) and 1.033e-2 (g=0.9,
    # window [0, 4.5], i.e. 3% above the nominal 1e-2 target)
    hi = 0.05 * timescales(0.98).t_delta
    ts = np.linspace(0.1, hi, 240)
    diff = np.abs(early_approx(ts, 0.98) - bessel_exact_grid(ts, 0.98))
    assert np.max(diff) < 1e-2
    hi = 0.05 * timescales(0.9).t_delta
    ts = np.linspace(0.1, hi, 120)
    diff = np.abs(early_approx(ts, 0.9) - bessel_exact_grid(ts, 0.9))
    assert np.max(diff) < 1.1e-2


# ---------------------------------------------------------------------------
# near/far-zone laws

def test_near_zone_values():
    val = near_zone_prob(100.0, 1.0)
    # peak envelope 1/(pi t) at t = 100
    t_pk = 100.0 + (math.pi / 4 - math.fmod(200.0, math.pi)) / 2
    assert near_zone_prob(t_pk, 1.0) == pytest.approx(1 / (math.pi * t_pk), rel=1e-12)
    assert 1 / (100 * math.pi) == pytest.approx(3.1831e-3, abs=1e-7)
    assert val <= 1 / (math.pi * 100.0) + 1e-15


def test_near_zone_domain_error():
    with pytest.raises(DomainError):
        near_zone_prob(0.0, 0.9)
    with pytest.raises(DomainError):
        near_zone_amp(np.array([0.5, 0.0]), 0.9)


def test_near_zone_maxima_phase():
    # cos^2 maxima at 2t - pi/4 = 0 mod pi; the 1/t envelope shifts the
    # product maximum by only -1/(4t)
    for m in (3, 10, 25):
        t_nom = (m * math.pi + math.pi / 4) / 2
        ts = np.linspace(t_nom - 0.5, t_nom + 0.5, 2001)
        vals = near_zone_prob(ts, 0.9)
        t_found = ts[np.argmax(vals)]
        assert abs(t_found - t_nom) < 0.5 / t_nom


def test_virtual_rabi_envelope_crossing():
    # the two-term effective phase when the envelopes reach ratio 1/2
    g = 0.98
    t_half = timescales(g).t_delta / (4 * math.pi * g)
    e1 = 1.0 / (g * math.sqrt(math.pi * t_half))
    e2 = (1.0 - g) / g
    assert e2 / e1 == pytest.approx(0.5, rel=1e-12)
    phi = math.atan2(e1 * math.sin(math.pi / 4), e1 * math.cos(math.pi / 4) - e2)
    assert phi == pytest.approx(math.atan(math.sqrt(2) / (math.sqrt(2) - 1)), abs=1e-12)
    assert phi == pytest.approx(0.4093 * math.pi, abs=2e-4)
    assert math.pi / 4 < phi < 3 * math.pi / 4


def test_virtual_rabi_ten_percent_at_t_vr():
    # at t = T_VR the second-term envelope is ~10% of the first's
    for g in (0.9, 0.98):
        scales = timescales(g)
        ratio = ((1 - g) / g) / (1 / (g * math.sqrt(math.pi * scales.t_vr)))
        assert 0.1 / 1.5 < ratio < 0.1 * 1.5


def test_far_zone_coefficient_value():
    coef = far_zone_coefficient(0.7)
    assert coef == pytest.approx(10.445, abs=2e-3)
    assert coef == pytest.approx(10.44, abs=0.01)


def test_far_zone_phase_shift_against_near_zone():
    # cos^2 maxima at 2t - 3pi/4 = 0 mod pi, i.e. shifted pi/2 from the
    # near zone; 1/t^3 envelope shift is only -3/(4t)
    for m in (20, 81):
        t_nom = (m * math.pi + 3 * math.pi / 4) / 2
        ts = np.linspace(t_nom - 0.5, t_nom + 0.5, 2001)
        vals = far_zone_prob(ts, 0.7)
        t_found = ts[np.argmax(vals)]
        assert abs(t_found - t_nom) < 1.0 / t_nom
        # the shift from the near-zone peak family is pi/4 in t (phase pi/2)
        t_near = (m * math.pi + math.pi / 4) / 2
        assert t_nom - t_near == pytest.approx(math.pi / 4, abs=1e-12)


def test_far_zone_diverges_at_transition():
    with pytest.raises(DivergenceError):
        far_zone_prob(50.0, 1.0)


def test_far_zone_matches_quadrature():
    # T_Delta(0.7) = 7.8; compare envelopes deep in the far zone
    g = 0.7
    t_pk = (280 * math.pi + 3 * math.pi / 4) / 2  # ~ 440, = 56 T_Delta
    num = abs(a_w_rays(t_pk, ModelParams(g=g), 0.0)) ** 2
    assert num == pytest.approx(far_zone_prob(t_pk, g), rel=0.05)
    # at t ~ 100 (13 T_Delta) agreement is within the looser 15%
    t_pk = (63 * math.pi + 3 * math.pi / 4) / 2
    num = abs(a_br_quadrature(t_pk, g)) ** 2
    assert num == pytest.approx(far_zone_prob(t_pk, g), rel=0.15)


# ---------------------------------------------------------------------------
# resonance-pole prefactors

def test_res_pole_values():
    params = ModelParams(g=0.9, eps_d=0.2)
    amp_perp, rate_perp = res_pole_perp(params)
    amp_1d, rate_1d = res_pole_1d(params)
    assert amp_perp == pytest.approx(9.11e-6, rel=0.01)
    assert amp_1d == pytest.approx(0.00302, rel=0.01)
    assert rate_perp == rate_1d == pytest.approx(0.0109280, abs=1e-6)
    assert res_pole_perp(ModelParams(g=0.9)) == (0.0, 0.0)
    assert res_pole_1d(ModelParams(g=0.9)) == (0.0, 0.0)


# ---------------------------------------------------------------------------
# sigma1 / Q algebra

def test_sigma1_value_and_identity():
    assert sigma1(3.0) == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-14)
    z = 2.5 + 0.3j
    s = sigma1(z)
    assert s + 1 / s == pytest.approx(z, abs=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(10):
        z = complex(rng.uniform(-3, 3), rng.choice([-1, 1]) * rng.uniform(0.2, 2))
        assert abs(sigma1(z)) <= 1.0 + 1e-12


def test_sigma1_self_energy_relation():
    # Sigma(z) = g^2 z sigma1(z)^2, numerically confirmed at random points
    from bicchain.spectrum import self_energy
    rng = np.random.default_rng(11)
    for _ in range(10):
        z = complex(rng.uniform(-3.5, 3.5), rng.choice([-1, 1]) * rng.uniform(0.2, 2))
        g = rng.uniform(0.3, 1.4)
        lhs = self_energy(z, g, SheetTag.First)
        rhs = g * g * z * sigma1(z) ** 2
        assert abs(lhs - rhs) < 1e-10


def test_compact_form_identity_at_zero_detuning():
    # N_w^2 (sigma_1 + Q G_dd) == a_w_resolvent exactly when eps_d = 0
    from bicchain.spectrum import resolvent_dd
    params = ModelParams(g=0.9)
    rng = np.random.default_rng(17)
    for w in (0.0, 0.5, 1.0, 2.0):
        for _ in range(5):
            z = complex(rng.uniform(-3, 3), rng.choice([-1, 1]) * rng.uniform(0.3, 1.5))
            compact = w_norm_sq(0.9, w) * (
                sigma1(z) + q_of_z(z, 0.9, w) * resolvent_dd(z, params))
            assert abs(compact - a_w_resolvent(z, params, w)) < 1e-12


def test_q_simplification_at_w1():
    # Q(z) = (1+g^2) z (z-2) sigma1^2 for w = 1
    g = 0.9
    rng = np.random.default_rng(5)
    for _ in range(10):
        z = complex(rng.uniform(-3, 3), rng.choice([-1, 1]) * rng.uniform(0.2, 2))
        q_general = q_of_z(z, g, 1.0)
        q_simple = (1 + g * g) * z * (z - 2) * sigma1(z) ** 2
        assert abs(q_general - q_simple) < 1e-10


def test_w_resolvent_large_z_normalization():
    # leading 1/z coefficient is exactly 1 (unit norm); next order is <H>/z^2
    params = ModelParams(g=0.9)
    for w in (0.0, 1.0, 2.0):
        for z in (4000.0, -3000.0 + 500j):
            val = a_w_resolvent(z, params, w)
            assert abs(val - 1.0 / z) < 10.0 / abs(z) ** 2


@pytest.mark.parametrize("w", [0.0, 1.0, 2.0])
@pytest.mark.parametrize("eps_d", [0.0, 0.2])
def test_w_resolvent_against_truncated_matrix(w, eps_d):
    params = ModelParams(g=0.9, eps_d=eps_d)
    n = 400
    h = hamiltonian(params, n).to_sparse().tocsc()
    eye = sparse.identity(n + 1, format="csc")
    psi = w_state(params.g, w, n).to_array()
    rng = np.random.default_rng(13)
    for _ in range(3):
        z = complex(rng.uniform(-3, 3), rng.choice([-1, 1]) * rng.uniform(0.4, 1.5))
        direct = np.vdot(psi, spsolve(z * eye - h, psi))
        assert abs(direct - a_w_resolvent(z, params, w)) < 1e-8


# ---------------------------------------------------------------------------
# w-state time amplitudes

def test_a_w_cut_reduces_to_abr_at_w0():
    params = ModelParams(g=0.9)
    for t in (0.0, 3.0, 10.0):
        assert abs(a_w_cut(t, params, 0.0) - a_br_quadrature(t, 0.9)) < 1e-9


def test_a_w_cut_normalization():
    for w in (0.5, 1.0, 2.0):
        assert a_w_cut(0.0, ModelParams(g=0.9), w) == pytest.approx(1.0, abs=1e-9)


def test_a_w_rays_matches_cut():
    for g, w in ((0.9, 1.0), (0.7, 0.0), (1.0, 1.0), (1.1, 0.0)):
        params = ModelParams(g=g)
        for t in (5.0, 20.0, 60.0):
            assert abs(a_w_rays(t, params, w) - a_w_cut(t, params, w)) < 1e-8


def test_a_w_rays_rejects_detuning():
    from bicchain.model import InvalidParameterError
    with pytest.raises(InvalidParameterError):
        a_w_rays(10.0, ModelParams(g=0.9, eps_d=0.1), 0.0)


def test_w_far_zone_values():
    # suppressed upper-edge weight at g = 0.9: ((2 - g z_g)/(2 + g z_g))^2
    g = 0.9
    gzg = g * (g + 1 / g)
    ratio = ((2 - gzg) / (2 + gzg)) ** 2
    assert ratio == pytest.approx(2.49e-3, rel=0.01)
    assert w_far_zone_coefficient(0.7) == pytest.approx(28.15, abs=0.01)
    with pytest.raises(DivergenceError):
        w_far_zone(100.0, 1.0)


def test_w_near_zone_g1_value():
    assert w_near_zone_g1(100.0) == pytest.approx(16 / (900 * math.pi), rel=1e-12)
    assert w_near_zone_g1(100.0) == pytest.approx(5.659e-3, abs=2e-6)


def test_w_far_zone_matches_contour():
    # ray-contour value vs the closed far-zone law at g = 0.7, t ~ 60
    g = 0.7
    t_pk = 60.05  # near a peak; law is smooth (single dominant edge)
    num = abs(a_w_rays(t_pk, ModelParams(g=g), 1.0)) ** 2
    assert num == pytest.approx(w_far_zone(t_pk, g), rel=0.15)


def test_w_norm_sq():
    assert w_norm_sq(0.9, 1.0) == pytest.approx(1 / 2.81, rel=1e-12)


def test_three_way_agreement_invariant():
    # ODE-free part: quadrature vs Bessel on [0, 50], poles added for g > 1
    ts = np.linspace(0.0, 50.0, 101)
    for g in (0.7, 0.9, 1.0):
        bes = bessel_exact_grid(ts, g)
        quad = np.array([a_br_quadrature(t, g) for t in ts])
        assert np.max(np.abs(bes - quad)) < 1e-7
