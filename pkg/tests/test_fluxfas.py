import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.legendre import leggauss

from fasbench.errors import AccuracyError, PreconditionError
from fasbench.fluxfas import (
    ConeSurface,
    cone_probability,
    current,
    dollard_probability,
    fas_verify,
    flux_series,
    homogeneity_check,
    surface_flux,
    time_integrated_flux,
)
from fasbench.pointmodel import (
    PointInteraction,
    WavePacket,
    outgoing_state_point,
    spectral_norm,
)
from fasbench.quadrature import make_graded_grid

from .oracles import free_gaussian_value_grad, mc_cone_probability


# ---------------------------------------------------------------------------
# geometry and current
# ---------------------------------------------------------------------------

def test_cone_surface_validation():
    with pytest.raises(PreconditionError):
        ConeSurface(theta=5.0)
    with pytest.raises(PreconditionError):
        ConeSurface(axis=(0, 0, 2), theta=1.0)
    assert ConeSurface(theta=math.pi).solid_angle == pytest.approx(4 * math.pi)


def test_current_plane_wave():
    k = 1.7
    psi = np.exp(1j * k * 2.0)
    assert current(psi, 1j * k * psi) == pytest.approx(k, rel=1e-14)


def test_current_real_state_vanishes():
    assert current(1.3, -0.7) == 0.0


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), c=st.floats(-2, 2), d=st.floats(-2, 2))
def test_current_is_imag_of_product(a, b, c, d):
    v = complex(a, b)
    g = complex(c, d)
    assert current(v, g) == pytest.approx((np.conj(v) * g).imag, abs=1e-15)


def test_current_matches_finite_differences(resonant_spec, resonant_point):
    state = resonant_spec.evolver()
    x, t = 40.0, 10.0
    ev = state.evaluate(x, t)
    h = 1e-4
    vp = state.evaluate(x + h, t).value
    vm = state.evaluate(x - h, t).value
    fd_grad = (vp - vm) / (2 * h)
    assert current(ev.value, ev.gradient) == pytest.approx(
        current(ev.value, fd_grad), rel=1e-5)


# ---------------------------------------------------------------------------
# surface flux
# ---------------------------------------------------------------------------

def test_surface_flux_geometry_half(resonant_spec):
    state = resonant_spec.evolver()
    full = surface_flux(state, 25.0, 8.0, ConeSurface())
    half = surface_flux(state, 25.0, 8.0, ConeSurface(theta=math.pi / 2))
    assert half == pytest.approx(0.5 * full, rel=1e-12)


def test_surface_flux_free_gaussian_closed_form(gaussian_packet, free_point):
    spec = outgoing_state_point(gaussian_packet, free_point)
    state = spec.evolver()
    R, t = 30.0, 15.0
    val, grad = free_gaussian_value_grad(1.0, R, t)
    ref = 2.0 * 4 * math.pi * R * R * (np.conj(val) * grad).imag
    assert surface_flux(state, R, t, ConeSurface()) == pytest.approx(ref, rel=1e-6)


def test_surface_flux_boosted_matches_brute_cap_quadrature(boosted_packet, free_point):
    spec = outgoing_state_point(boosted_packet, free_point)
    state = spec.evolver()
    R, t = 40.0, 18.0
    xg, wg = leggauss(400)
    mu = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    vals, grads = zip(*(free_gaussian_value_grad(1.0, R, t, boost=1.0, mu=m)
                        for m in mu))
    j = np.imag(np.conj(np.array(vals)) * np.array(grads))
    ref = 2.0 * 2 * math.pi * R * R * np.sum(w * j)
    got = surface_flux(state, R, t, ConeSurface(theta=math.pi / 2))
    assert got == pytest.approx(ref, rel=1e-8)


# ---------------------------------------------------------------------------
# time-integrated flux
# ---------------------------------------------------------------------------

def test_stationary_bound_state_has_zero_flux():
    pi = PointInteraction(0.5)
    kappa = pi.bound_state_kappa

    class BoundEvolver:
        class _Spec:
            has_boost_closed_form = False

            class packet:
                sigma = 1.0
                boost = 0.0

        spec = _Spec()

        def evaluate(self, x, t):
            nb = math.sqrt(kappa / (2 * math.pi))
            phase = np.exp(1j * kappa * kappa * t)
            val = nb * math.exp(-kappa * x) / x * phase
            grad = val * (-kappa - 1.0 / x)

            class R:
                pass

            r = R()
            r.value = complex(val)
            r.gradient = complex(grad)
            r.alpha = 0j
            r.alpha_gradient = 0j
            return r

    val, tail = time_integrated_flux(BoundEvolver(), 5.0, ConeSurface(), 0.0, 50.0)
    assert abs(val) < 1e-10


def test_time_integrated_flux_free_conservation(gaussian_packet, free_point):
    spec = outgoing_state_point(gaussian_packet, free_point)
    state = spec.evolver()
    val, tail = time_integrated_flux(state, 40.0, ConeSurface(), 0.0, 400.0)
    rhs = cone_probability(spec, ConeSurface())
    assert val + tail == pytest.approx(rhs, rel=1e-3)


def test_absolute_mode_cross_terms_decrease(resonant_spec):
    state = resonant_spec.evolver()
    cone = ConeSurface()
    vals = []
    for R in (20.0, 40.0, 80.0):
        v, _ = time_integrated_flux(state, R, cone, 0.0, 200.0, mode="absolute")
        vals.append(v)
    assert vals[0] > vals[1] > vals[2] > 0


def test_time_window_validation(resonant_spec):
    state = resonant_spec.evolver()
    with pytest.raises(PreconditionError):
        time_integrated_flux(state, 10.0, ConeSurface(), 5.0, 5.0)
    with pytest.raises(PreconditionError):
        time_integrated_flux(state, 10.0, ConeSurface(), 0.0, 10.0, mode="rms")


def test_flux_series_cumulative(resonant_spec):
    state = resonant_spec.evolver()
    series = flux_series(state, 20.0, ConeSurface(), 0.0, 120.0, n=80)
    assert series.cumulative[0] == 0.0
    assert series.cumulative[-1] <= 1.0 + 1e-4
    assert np.all(np.diff(series.cumulative) >= -1e-9)


# ---------------------------------------------------------------------------
# cone probability
# ---------------------------------------------------------------------------

def test_cone_probability_normalization(resonant_spec):
    assert cone_probability(resonant_spec, ConeSurface()) == pytest.approx(1.0, abs=1e-6)
    assert cone_probability(resonant_spec, ConeSurface(theta=math.pi / 2)) == \
        pytest.approx(0.5, abs=1e-6)


def test_cone_probability_monte_carlo(resonant_spec, gaussian_packet):
    # brute-force 3-d Monte Carlo over the cone for the resonant state
    C3 = (2 * math.pi) ** -1.5

    def psi_hat(k):
        return gaussian_packet.fourier_avg(k) \
            + 1j * C3 * gaussian_packet.j_integral(k) / k

    cone = ConeSurface(theta=math.pi / 3)
    est, err = mc_cone_probability(psi_hat, math.cos(math.pi / 3),
                                   resonant_spec.grid.k_max, n=1_500_000)
    det = cone_probability(resonant_spec, cone)
    assert abs(det - est) < max(4.0 * err, 1e-3)


def test_cone_additivity_exact(resonant_spec, boosted_packet, resonant_point):
    # radial: complementary cones share the k-quadrature, so the sum is the
    # total up to floating-point addition
    theta = 1.1
    a = cone_probability(resonant_spec, ConeSurface(theta=theta))
    # complement of a theta-cone about +z is the (pi - theta)-cone about -z;
    # radial states only see the solid angles
    b_equiv = cone_probability(resonant_spec, ConeSurface(theta=math.pi - theta))
    total = cone_probability(resonant_spec, ConeSurface())
    # solid angles satisfy O(theta) + O(pi - theta) = 4 pi exactly
    assert (a + b_equiv) == pytest.approx(total, rel=1e-14)


def test_cone_probability_boosted_total(boosted_packet, resonant_point):
    spec = outgoing_state_point(boosted_packet, resonant_point)
    assert cone_probability(spec, ConeSurface()) == pytest.approx(1.0, abs=2e-5)


# ---------------------------------------------------------------------------
# position-space (detection) probability
# ---------------------------------------------------------------------------

def test_dollard_limit_free_boosted(boosted_packet, free_point):
    spec = outgoing_state_point(boosted_packet, free_point)
    state = spec.evolver()
    cone = ConeSurface(theta=math.pi / 2)
    val = dollard_probability(state, cone, 200.0)
    assert val == pytest.approx(cone_probability(spec, cone), abs=1e-3)


def test_dollard_total_norm(gaussian_packet, free_point):
    spec = outgoing_state_point(gaussian_packet, free_point)
    state = spec.evolver()
    val = dollard_probability(state, ConeSurface(), 50.0)
    assert val == pytest.approx(1.0, abs=1e-4)


def test_fas_consistency_triangle(boosted_packet, free_point):
    # position-space probability at t = T2 and the time-integrated flux both
    # approach the cone probability, and shrink together as (R, T2) grow
    spec = outgoing_state_point(boosted_packet, free_point)
    state = spec.evolver()
    cone = ConeSurface(theta=math.pi / 2)
    rhs = cone_probability(spec, cone)
    gaps = []
    for (R, T2) in ((15.0, 60.0), (40.0, 240.0)):
        lhs, tail = time_integrated_flux(state, R, cone, 0.0, T2)
        dol = dollard_probability(state, cone, T2)
        gaps.append((abs(lhs + tail - rhs), abs(dol - rhs)))
    assert gaps[1][0] < gaps[0][0]
    assert gaps[1][1] < gaps[0][1]
    assert gaps[1][0] < 5e-3 and gaps[1][1] < 5e-3


def test_dollard_monotone_approach(boosted_packet, free_point):
    spec = outgoing_state_point(boosted_packet, free_point)
    state = spec.evolver()
    cone = ConeSurface(theta=math.pi / 2)
    vals = [dollard_probability(state, cone, t) for t in (5.0, 20.0, 80.0)]
    limit = cone_probability(spec, cone)
    assert vals[0] < vals[1] < vals[2] <= limit + 1e-6


# ---------------------------------------------------------------------------
# envelope fits
# ---------------------------------------------------------------------------

def test_homogeneity_trivial_power_law():
    xs = np.geomspace(10.0, 100.0, 8)
    ts = np.geomspace(2.0, 200.0, 8)
    F = np.array([[t ** -1.5 for t in ts] for _ in xs])
    out = homogeneity_check(F, xs, ts, nu=1.0, tau_list=(0.0,))
    assert out[0.0]["constant"] == pytest.approx(2.0 ** -1.5, rel=1e-12)
    assert out[0.0]["stable"]


def test_homogeneity_flags_violation():
    xs = np.geomspace(10.0, 100.0, 8)
    ts = np.geomspace(2.0, 200.0, 8)
    F = np.array([[x * math.exp(x / t) for t in ts] for x in xs])
    out = homogeneity_check(F, xs, ts, nu=1.0, tau_list=(0.0,))
    assert not out[0.0]["stable"]


def test_homogeneity_shape_validation():
    with pytest.raises(PreconditionError):
        homogeneity_check(np.zeros((3, 4)), np.arange(4), np.arange(4), 1.0, (0.0,))


# ---------------------------------------------------------------------------
# the comparison harness
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_free_report(boosted_packet, free_point):
    cone = ConeSurface(theta=math.pi / 2)
    return fas_verify(free_point, boosted_packet, cone, [10.0, 20.0], 0.0, 200.0)


def test_fas_report_structure(small_free_report):
    rep = small_free_report
    assert rep.model == "point"
    assert len(rep.entries) == 2
    assert rep.entries[0].R < rep.entries[1].R
    d = rep.to_json_dict()
    assert {"R", "lhs", "lhs_total", "lhs_abs_cross", "rhs", "rel_error",
            "tail_estimate"} <= set(d["entries"][0])


def test_fas_free_small_radii_agree(small_free_report):
    for e in small_free_report.entries:
        assert e.rel_error < 5e-3
    assert small_free_report.entries[1].rel_error < small_free_report.entries[0].rel_error


def test_fas_worker_invariance(boosted_packet, free_point, small_free_report):
    cone = ConeSurface(theta=math.pi / 2)
    rep2 = fas_verify(free_point, boosted_packet, cone, [10.0, 20.0], 0.0, 200.0,
                      workers=2)
    for a, b in zip(small_free_report.entries, rep2.entries):
        assert a.lhs == b.lhs
        assert a.lhs_abs_cross == b.lhs_abs_cross
