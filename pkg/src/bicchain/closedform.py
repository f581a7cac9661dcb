"""Semi-analytic and closed-form survival amplitudes.

Routes to the survival amplitude of the BIC-orthogonal state at eps_d = 0:

* ``a_br_quadrature`` -- the branch-cut contour reduced to a real integral
  over k in [0, pi] (z = -2 cos k) and evaluated by adaptive Gauss
  quadrature on half-period pieces of the oscillatory factor exp(2it cos k).
  The discontinuity sign is pinned by the t = 0 sum rule: the cut carries
  the full norm for g <= 1 and 1/g^2 for g > 1 (the bound-state pair takes
  the rest).
* ``bessel_exact`` -- the exact Bessel-function representation obtained by
  fraction decomposition: A_br = -(1/2g)(I(+z_g) - I(-z_g)) with

      I(+/- z_g) = e^{∓ i z_g t} [∓ g - i INT_0^t e^{+/- i z_g tau}
                                           J_1(2 tau)/tau d tau],

  the integrable tau -> 0 limit J_1(2 tau)/tau -> 1 handled analytically.
* ``a_w_cut`` -- the same contour reduction for the generalized w-state
  resolvent N_w^2 (C0 + Q G_dd) from the chain Dyson algebra; works for any
  detuning.
* ``a_w_rays`` -- band-edge ray deformation of the cut contour (eps_d = 0),
  exact for t >= ~1 at O(1) cost; the route of choice deep in the far zone.

Closed-form approximations (each with its validity window):

* early-time two-edge form with the virtual-Rabi term (``early_approx``),
* near-zone 1/t law (``near_zone_amp`` / ``near_zone_prob``),
* far-zone 1/t^3 law (``far_zone_prob``),
* resonance-pole exponential prefactors (``res_pole_perp`` / ``res_pole_1d``),
* w = 1 decoherence laws (``w_far_zone`` / ``w_near_zone_g1``).
"""

from __future__ import annotations

import cmath
import enum
import math

import numpy as np
from scipy.special import j0, j1, roots_legendre

from .model import InvalidParameterError, ModelParams
from .spectrum import (BranchPointError, SheetTag, resolvent_dd,
                       resonance_expansion, sqrt_band, z_gap)


class QuadratureError(RuntimeError):
    """Oscillatory quadrature failed to reach the requested accuracy."""

    def __init__(self, message: str, error_estimate: float) -> None:
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class DomainError(ValueError):
    """Argument outside the mathematical domain of a closed-form law."""


class DivergenceError(ValueError):
    """Closed form diverges at these parameters; a different law applies."""


class ApproximationTag(enum.Enum):
    EarlyBessel = "EarlyBessel"
    NearZoneAmp = "NearZoneAmp"
    NearZoneEarlyProb = "NearZoneEarlyProb"
    FarZoneProb = "FarZoneProb"
    BoundTerm = "BoundTerm"
    ResPolePerp = "ResPolePerp"
    ResPole1d = "ResPole1d"
    WFarZone = "WFarZone"
    WNearZoneG1 = "WNearZoneG1"


_GL15 = roots_legendre(15)
_GL30 = roots_legendre(30)


def _gauss(f, a: float, b: float, rule) -> complex:
    x, w = rule
    nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
    return 0.5 * (b - a) * complex(np.dot(w, f(nodes)))


def _adaptive_gauss(f, a: float, b: float, tol: float, depth: int = 0) -> tuple[complex, float]:
    coarse = _gauss(f, a, b, _GL15)
    fine = _gauss(f, a, b, _GL30)
    err = abs(fine - coarse)
    if err < tol or depth >= 28:
        return fine, err
    mid = 0.5 * (a + b)
    left, e1 = _adaptive_gauss(f, a, mid, 0.5 * tol, depth + 1)
    right, e2 = _adaptive_gauss(f, mid, b, 0.5 * tol, depth + 1)
    return left + right, e1 + e2


def _cut_integral(h, t: float, abs_tol: float) -> complex:
    """INT_0^pi h(k) exp(2 i t cos k) dk with half-period splitting.

    The phase 2 t cos k is split at multiples of pi so each piece holds at
    most half an oscillation; pieces are integrated adaptively and summed.
    """
    # k = pi/2 (z = 0) is always an interval boundary: quadrature nodes are
    # strictly interior, so the removable BIC-point 0/0 of the w-state
    # integrand at eps_d = 0 is never sampled
    pts = [0.0, 0.5 * math.pi, math.pi]
    if t > 0:
        j_max = int(math.floor(2.0 * t / math.pi))
        for j in range(-j_max, j_max + 1):
            c = 0.5 * j * math.pi / t
            if -1.0 < c < 1.0:
                pts.append(math.acos(c))
    edges = np.unique(np.asarray(pts))
    piece_tol = abs_tol / max(len(edges) - 1, 1)
    total = 0.0 + 0.0j
    err_total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = _adaptive_gauss(
            lambda k: h(k) * np.exp(2j * t * np.cos(k)), a, b, piece_tol)
        total += val
        err_total += err
    if err_total > abs_tol:
        raise QuadratureError("branch-cut quadrature did not converge", err_total)
    return total


def a_br_quadrature(t: float, g: float, abs_tol: float = 1e-9) -> complex:
    """Branch-cut contribution to the survival amplitude, by quadrature.

    A_br(t) = (2 (1+g^2) / (pi g^2)) INT_0^pi e^{2 i t cos k}
              sin^2 k / (z_g^2 - 4 cos^2 k) dk.

    At g = 1 the endpoint zeros of the denominator cancel against sin^2 k,
    so no principal value is ever needed.  Practical for t <= ~500.
    """
    if not (g > 0 and np.isfinite(g)):
        raise InvalidParameterError(f"coupling g must be positive and finite, got {g}")
    if t < 0:
        raise InvalidParameterError(f"time must be non-negative, got {t}")
    zg, _ = z_gap(g)
    pref = 2.0 * (1.0 + g * g) / (math.pi * g * g)

    def h(k: np.ndarray) -> np.ndarray:
        sk = np.sin(k)
        return sk * sk / (zg * zg - 4.0 * np.cos(k) ** 2)

    return pref * _cut_integral(h, float(t), abs_tol / pref)


def bound_term(t: float, g: float) -> float:
    """Combined bound-state pair contribution ((g^2-1)/g^2) cos(z_g t); 0 for g <= 1."""
    if not (g > 0 and np.isfinite(g)):
        raise InvalidParameterError(f"coupling g must be positive and finite, got {g}")
    if g <= 1.0:
        return 0.0
    zg, _ = z_gap(g)
    return (g * g - 1.0) / (g * g) * math.cos(zg * t)


def _bessel_tail(ts: np.ndarray, zg: float) -> np.ndarray:
    """Cumulative INT_0^t e^{i z_g tau} J_1(2 tau)/tau d tau on an ascending grid."""

    def f(tau: np.ndarray) -> np.ndarray:
        out = np.ones_like(tau)
        m = tau > 1e-12
        out[m] = j1(2.0 * tau[m]) / tau[m]
        return out * np.exp(1j * zg * tau)

    t_max = float(ts[-1])
    grid = np.round(np.arange(0.0, t_max + 0.3, 0.25), 12)
    edges = np.union1d(grid, np.round(ts, 12))
    cum = np.zeros(len(edges), dtype=complex)
    for i in range(1, len(edges)):
        cum[i] = cum[i - 1] + _gauss(f, edges[i - 1], edges[i], _GL30)
    return cum[np.searchsorted(edges, np.round(ts, 12))]


def bessel_exact_grid(ts: np.ndarray, g: float) -> np.ndarray:
    """Exact Bessel-representation A_br on an ascending time grid (0 < g <= 1).

    Evaluates the tail integral incrementally, so a dense grid costs no more
    than its largest time.  A_br is real at eps_d = 0; the real value is
    returned as complex for interface parity with the quadrature route.
    """
    if not (0 < g <= 1.0):
        raise InvalidParameterError(f"Bessel representation requires 0 < g <= 1, got {g}")
    ts = np.asarray(ts, dtype=float)
    if ts.ndim != 1 or len(ts) == 0 or np.any(np.diff(ts) < 0) or ts[0] < 0:
        raise InvalidParameterError("ts must be a non-empty ascending grid of times >= 0")
    zg, _ = z_gap(g)
    tail = _bessel_tail(ts, zg)
    i_plus = np.exp(-1j * zg * ts) * (-g - 1j * tail)
    # I(-z_g) = -conj(I(+z_g)), so A_br = -(1/2g)(I(+) - I(-)) = -Re I(+)/g
    return (-np.real(i_plus) / g).astype(complex)


def bessel_exact(t: float, g: float) -> complex:
    """Exact Bessel-representation A_br at a single time (0 < g <= 1)."""
    return complex(bessel_exact_grid(np.array([float(t)]), g)[0])


def early_approx(t, g: float, reduced: bool = False):
    """Short/intermediate-time two-edge approximation, valid t << T_Delta.

    Default is the sharper form
        (1/g) [(g-1) cos(z_g t) + cos(Delta_g t) J_0(2t) - sin(Delta_g t) J_1(2t)];
    with ``reduced=True`` the simpler (1/g) J_0(2t) - ((1-g)/g) cos 2t.
    """
    if not (0 < g <= 1.0):
        raise InvalidParameterError(f"early-time form requires 0 < g <= 1, got {g}")
    t = np.asarray(t, dtype=float)
    zg, dg = z_gap(g)
    if reduced:
        out = (1.0 / g) * j0(2.0 * t) - ((1.0 - g) / g) * np.cos(2.0 * t)
    else:
        out = (1.0 / g) * ((g - 1.0) * np.cos(zg * t)
                           + np.cos(dg * t) * j0(2.0 * t)
                           - np.sin(dg * t) * j1(2.0 * t))
    return out + 0j


def near_zone_amp(t, g: float):
    """Near-zone amplitude cos(2t - pi/4)/(g sqrt(pi t)) - ((1-g)/g) cos 2t.

    Intended for T_Z << t << T_Delta.  The second term is the virtual Rabi
    oscillation; its envelope (1-g)/g is constant while the first decays.
    """
    if not (0 < g <= 1.0):
        raise InvalidParameterError(f"near-zone form requires 0 < g <= 1, got {g}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("near-zone amplitude diverges at t = 0 (1/sqrt(t))")
    return (np.cos(2.0 * t - math.pi / 4.0) / (g * np.sqrt(math.pi * t))
            - ((1.0 - g) / g) * np.cos(2.0 * t)) + 0j


def near_zone_prob(t, g: float):
    """Early near-zone survival probability cos^2(2t - pi/4)/(pi g^2 t)."""
    if not (0 < g <= 1.0):
        raise InvalidParameterError(f"near-zone form requires 0 < g <= 1, got {g}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("near-zone probability diverges at t = 0 (1/t)")
    return np.cos(2.0 * t - math.pi / 4.0) ** 2 / (math.pi * g * g * t)


def far_zone_coefficient(g: float) -> float:
    """Coefficient C in the far-zone law P(t) ~ C cos^2(2t - 3pi/4)/t^3."""
    if not (0 < g < 1.0):
        raise DivergenceError(
            "far-zone law requires 0 < g < 1 (gap Delta_g > 0); at g = 1 the "
            "near-zone 1/t law describes the asymptotics instead")
    zg, dg = z_gap(g)
    return (1.0 + g * g) ** 2 / (math.pi * g ** 4 * dg * dg * (2.0 + zg) ** 2)


def far_zone_prob(t, g: float):
    """Far-zone survival probability, valid t >> T_Delta (0 < g < 1)."""
    coef = far_zone_coefficient(g)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("far-zone probability requires t > 0")
    return coef * np.cos(2.0 * t - 3.0 * math.pi / 4.0) ** 2 / t ** 3


def res_pole_perp(params: ModelParams) -> tuple[float, float]:
    """(amplitude, rate) of the resonance-pole exponential in P_perp.

    amplitude = g^4 eps_d^4 / (1+g^2)^8: both the O(eps_d) and O(eps_d^2)
    contributions cancel for the BIC-orthogonal state, leaving a fourth-order
    prefactor; rate = Gamma from the resonance expansion.
    """
    g = params.g
    amp = g ** 4 * params.eps_d ** 4 / (1.0 + g * g) ** 8
    return amp, resonance_expansion(params).gamma


def res_pole_1d(params: ModelParams) -> tuple[float, float]:
    """(amplitude, rate) of the resonance-pole exponential in P_1d.

    Only the lowest order cancels here: amplitude = g^2 eps_d^2 / (1+g^2)^4.
    """
    g = params.g
    amp = g * g * params.eps_d ** 2 / (1.0 + g * g) ** 4
    return amp, resonance_expansion(params).gamma


def sigma1(z: complex, sheet: SheetTag = SheetTag.First,
           *, branch_point_limit: bool = False) -> complex:
    """Chain edge resolvent factor sigma_1(z) = (z - sqrt(z^2-4))/2.

    Satisfies sigma_1 + 1/sigma_1 = z and |sigma_1| <= 1 on the first sheet;
    the second sheet takes the reciprocal root.  Relates to the self-energy
    through Sigma(z) = g^2 z sigma_1(z)^2.
    """
    z = complex(z)
    if z == 2.0 or z == -2.0:
        if not branch_point_limit:
            raise BranchPointError(
                f"sigma_1 evaluated exactly at the branch point z = {z.real:g}; "
                "pass branch_point_limit=True for the limit value")
        return z / 2.0
    val = (z - sqrt_band(z)) / 2.0
    if sheet is SheetTag.Second:
        return 1.0 / val
    return val


def q_of_z(z: complex, g: float, w: float, sheet: SheetTag = SheetTag.First) -> complex:
    """Compact chain polynomial Q(z) of the w-state resolvent at eps_d = 0.

    Q = g^2 + sigma_1^2 (2g^2 - 2g^2 w z + g^2 sigma_1^2 - 2 w z + w^2 z^2);
    for w = 1 this collapses to (1+g^2) z (z-2) sigma_1^2.  Together with a
    bare sigma_1 chain term it reproduces the resolvent diagonal exactly at
    eps_d = 0 (it absorbs a (z - Sigma) multiple of the chain background);
    the detuning-safe split is :func:`a_w_resolvent`.
    """
    sig = sigma1(z, sheet)
    return _q_poly(sig, complex(z), g, w)


def _q_poly(sig, z, g: float, w: float):
    sig2 = sig * sig
    return g * g + sig2 * (2.0 * g * g - 2.0 * g * g * w * z
                           + g * g * sig2 - 2.0 * w * z + w * w * z * z)


def _chain_split(sig, g: float, w: float):
    """(background, coupling) of the w-state resolvent for any detuning.

    Dyson algebra on the bare-chain edge Green function (G0_11 = sigma_1,
    G0_12 = -sigma_1^2, G0_22 = sigma_1 + sigma_1^3) gives

        <psi_w| G |psi_w> / N_w^2 = C0 + Q G_dd,
        C0 = sigma_1 (1 - w sigma_1)^2 + w^2 sigma_1,
        Q  = g^2 (1 + sigma_1^2)^2 (1 - w sigma_1)^2,

    with every eps_d dependence confined to G_dd.
    """
    one = 1.0 - w * sig
    background = sig * one * one + w * w * sig
    coupling = g * g * (1.0 + sig * sig) ** 2 * one * one
    return background, coupling


def w_norm_sq(g: float, w: float) -> float:
    """Normalization N_w^2 = 1/(1 + g^2 + w^2) of the generalized state."""
    return 1.0 / (1.0 + g * g + w * w)


def a_w_resolvent(z: complex, params: ModelParams, w: float,
                  sheet: SheetTag = SheetTag.First) -> complex:
    """Diagonal resolvent element of the generalized BIC-orthogonal state.

    Evaluates N_w^2 (C0(z) + Q(z) G_dd(z)) from the chain Dyson algebra,
    exact for any detuning; at eps_d = 0 this equals the compact form
    N_w^2 (sigma_1 + q_of_z G_dd) identically.  Tends to 1/z at large |z|
    by normalization.
    """
    sig = sigma1(z, sheet)
    background, coupling = _chain_split(sig, params.g, w)
    return w_norm_sq(params.g, w) * (
        background + coupling * resolvent_dd(z, params, sheet))


def _disc_on_cut(k: np.ndarray, g: float, eps_d: float, w: float) -> np.ndarray:
    """Below-minus-above jump of the w-state resolvent across the band.

    On the cut z = -2 cos k the boundary values of sigma_1 are -e^{+/- i k}
    (above/below), and Sigma = g^2 z sigma_1^2 on either side.
    """
    z = -2.0 * np.cos(k)
    out = 0j * z
    for sign in (+1.0, -1.0):
        sig = -np.exp(sign * 1j * k)  # +: above the cut, -: below
        background, coupling = _chain_split(sig, g, w)
        g_dd = 1.0 / (z - eps_d - g * g * z * sig * sig)
        out -= sign * (background + coupling * g_dd)
    return out


def a_w_cut(t: float, params: ModelParams, w: float, abs_tol: float = 1e-9) -> complex:
    """Survival amplitude of the w-state from the branch-cut contour.

    Reduces the counter-clockwise contour around the band to the jump of
    N_w^2 (sigma_1 + Q G_dd) across the cut and integrates over k in
    [0, pi].  Valid for any detuning; bound-state poles (g > 1) are not
    included and must be added by the caller when present.
    """
    g, eps_d = params.g, params.eps_d
    nw2 = w_norm_sq(g, w)

    def h(k: np.ndarray) -> np.ndarray:
        return (nw2 / (2j * math.pi)) * 2.0 * np.sin(k) * _disc_on_cut(k, g, eps_d, w)

    return _cut_integral(h, float(t), abs_tol)


_GL_RAY = roots_legendre(320)


def a_w_rays(t, params: ModelParams, w: float, v_max: float = 10.0):
    """Survival amplitude (eps_d = 0) from band-edge ray deformation.

    The cut integral is deformed onto the two rays descending from z = -/+2
    into the lower half-plane, where the integrand decays like e^{-ut}; the
    substitution u = v^2/t absorbs the edge square-root.  Exact (no poles
    are crossed at eps_d = 0); accurate to ~1e-10 for t >= 1 at O(1) cost
    per time, which makes it the far-zone route of choice.  Accepts an
    array of times.
    """
    if params.eps_d != 0.0:
        raise InvalidParameterError(
            "ray deformation crosses the detuned resonance pole; "
            "it is restricted to eps_d = 0 (use a_w_cut for eps_d != 0)")
    g = params.g
    nw2 = w_norm_sq(g, w)
    x, wts = _GL_RAY
    v = 0.5 * v_max * (x + 1.0)
    weights = 0.5 * v_max * wts * 2.0 * v * np.exp(-v * v)

    def disc_lower(z: np.ndarray) -> np.ndarray:
        s = np.sqrt(z - 2.0) * np.sqrt(z + 2.0)
        sig_below = (z - s) / 2.0
        sig_above = 1.0 / sig_below  # continuation of the from-above value
        out = 0j * z
        for sig, sign in ((sig_below, -1.0), (sig_above, +1.0)):
            background, coupling = _chain_split(sig, g, w)
            g_dd = 1.0 / (z - g * g * z * sig * sig)
            out -= sign * (background + coupling * g_dd)
        return out

    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0.5):
        raise DomainError("ray deformation is intended for t >= ~1; got t < 0.5")
    out = np.empty(ts.shape, dtype=complex)
    for i, ti in enumerate(ts):
        u = v * v / ti
        lower = disc_lower(-2.0 - 1j * u)
        upper = disc_lower(2.0 - 1j * u)
        out[i] = (nw2 / (2j * math.pi)) * (
            -1j * cmath.exp(2j * ti) * complex(np.dot(weights, lower)) / ti
            + 1j * cmath.exp(-2j * ti) * complex(np.dot(weights, upper)) / ti)
    return out if np.ndim(t) else complex(out[0])


def w_far_zone_coefficient(g: float) -> float:
    """Coefficient of the w = 1 far-zone law P_w(t) ~ C_w cos^2(...)/t^3 envelope."""
    if not (0 < g < 1.0):
        raise DivergenceError(
            "w = 1 far-zone law requires 0 < g < 1; at g = 1 the 16/(9 pi t) "
            "near-zone law applies")
    zg, dg = z_gap(g)
    return ((2.0 + g * zg) ** 4
            / (4.0 * math.pi * g ** 4 * (2.0 + g * g) ** 2 * (2.0 + zg) ** 2 * dg * dg))


def w_far_zone(t, g: float):
    """w = 1 far-zone survival probability envelope (0 < g < 1, t >> T_Delta).

    The upper band edge enters with relative weight ((2 - g z_g)/(2 + g z_g))^2,
    tiny near g = 1, so the two-edge oscillations are almost fully damped and
    the law is a smooth power law.
    """
    coef = w_far_zone_coefficient(g)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("far-zone probability requires t > 0")
    return coef / t ** 3


def w_near_zone_g1(t):
    """w = 1, g = 1 asymptotic near-zone law P_w(t) = 16/(9 pi t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("near-zone probability requires t > 0")
    return 16.0 / (9.0 * math.pi * t)
