import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastlight.analytic import (
    AnalyticScenario,
    UnsupportedConfigurationError,
    analytic_amplitudes,
    analytic_field,
    analytic_snapshot,
    exit_peak_time,
    replay,
    residual_check,
)
from fastlight.model import CONSTANTS, DomainError, MediumSegment, PulseSpec, beer_alpha

C = CONSTANTS.c
TAU, G, T2 = 0.1, 266.0, 0.733
L = 250 / beer_alpha(G, T2)


def sharp(x0=0.0, x1=L, g=G):
    return AnalyticScenario(PulseSpec(TAU), MediumSegment(x0, x1, g))


def broad(x0=0.0, x1=L, g=G, n=41):
    return AnalyticScenario(PulseSpec(TAU), MediumSegment(x0, x1, g, T2, n_detuning=n))


def test_vacuum_region_is_sech_at_c():
    scn = sharp(x0=5.0, x1=10.0)
    assert analytic_field(scn, 0.0, 0.0) == pytest.approx(2 / TAU)
    assert analytic_field(scn, 3.0, 3.0 / C) == pytest.approx(2 / TAU)
    assert abs(analytic_field(scn, 3.0, 3.0 / C + TAU)) == pytest.approx(2 / TAU / math.cosh(1.0))


def test_requires_untruncated_normalised_pulse():
    seg = MediumSegment(0.0, 1.0, G)
    with pytest.raises(DomainError):
        AnalyticScenario(PulseSpec(TAU, trunc_halfwidth=25), seg)
    with pytest.raises(DomainError):
        AnalyticScenario(PulseSpec(TAU, amplitude=5.0), seg)


@pytest.mark.parametrize("make", [sharp, broad])
def test_continuous_at_both_faces(make):
    scn = make()
    t = np.linspace(-1.0, 2.0, 301)
    for face in (scn.medium.x0, scn.medium.x1):
        left = analytic_field(scn, np.nextafter(face, -np.inf), t)
        right = analytic_field(scn, np.nextafter(face, np.inf), t)
        assert np.max(np.abs(left - right)) < 1e-9 * 2 / TAU


def test_amplitudes_normalised_and_consistent():
    scn = sharp()
    x = np.linspace(0, L, 50)[:, None]
    t = np.linspace(-2.0, 2.0, 60)[None, :]
    c1, c2 = analytic_amplitudes(scn, x, t)
    assert np.max(np.abs(np.abs(c1) ** 2 + np.abs(c2) ** 2 - 1)) < 1e-14
    # field is (2/tau)|c1| inside the slab
    om = analytic_field(scn, x, t)
    assert np.allclose(om, (2 / TAU) * np.abs(c1), rtol=1e-14, atol=0)


def test_amplitude_limits():
    scn = sharp()
    c1, c2 = analytic_amplitudes(scn, 10.0, -50.0)  # long before the pulse
    assert abs(c1) < 1e-100 and c2 == pytest.approx(1.0)
    c1, c2 = analytic_amplitudes(scn, 10.0, 50.0)
    assert abs(c1) < 1e-100 and c2 == pytest.approx(-1.0)


def test_amplitudes_outside_slab_error():
    with pytest.raises(DomainError):
        analytic_amplitudes(sharp(), -1.0, 0.0)


def test_vacuum_slab_equals_free_propagation():
    scn = sharp(g=0.0)
    x = np.linspace(-5, 40, 20)
    t = x / C + 0.03
    assert np.allclose(analytic_field(scn, x, t), analytic_field(scn, 0.0, 0.03), rtol=1e-14)


def test_residuals_vanish_second_order():
    scn = sharp()
    pts = [(x, x * scn.inverse_vg - scn.phi0 + dt) for x in (2.0, 10.0, 20.0) for dt in np.linspace(-0.2, 0.2, 7)]
    r1 = residual_check(scn, pts, h=2e-3)
    r2 = residual_check(scn, pts, h=1e-3)
    for k in ("bloch_c1", "bloch_c2", "maxwell"):
        assert r1[k] / r2[k] == pytest.approx(4.0, rel=0.05)
    assert r2["max"] < 1e-3 * (2 / TAU) ** 2


def test_residual_maxwell_exact_in_vacuum_limit():
    scn = sharp(g=0.0)
    pts = [(x, x / C + dt) for x in (1.0, 5.0, 9.0) for dt in (-0.1, 0.0, 0.05)]
    r = residual_check(scn, pts)
    assert r["maxwell"] < 1e-9
    assert r["bloch_c1"] > 0  # the Bloch residuals are finite-difference truncation only


def test_residual_rejects_broadened():
    with pytest.raises(UnsupportedConfigurationError):
        residual_check(broad(), [(1.0, 0.0)])


def test_snapshot_matches_field():
    scn = sharp()
    x = np.linspace(-10, 45, 301)
    snap = analytic_snapshot(scn, -0.3, x)
    assert np.array_equal(snap.omega, analytic_field(scn, x, -0.3))
    assert snap.media == ((0.0, L),)
    with pytest.raises(DomainError):
        analytic_snapshot(scn, 0.0, x[::-1])


def test_exit_pulse_exists_before_input_enters():
    # at t = -0.3 ns the input peak is still 9 cm ahead of the slab,
    # yet the transmitted peak is already outside the far face
    scn = sharp()
    x = np.linspace(-20, 60, 8001)
    om = np.abs(analytic_snapshot(scn, -0.3, x).omega)
    left = x < 0
    right = x > L
    x_in = x[left][np.argmax(om[left])]
    x_out = x[right][np.argmax(om[right])]
    assert x_in < 0 < L < x_out
    assert om[right].max() == pytest.approx(2 / TAU, rel=1e-3)
    assert x_in == pytest.approx(-0.3 * C, abs=0.02)


@pytest.mark.parametrize("make", [sharp, broad])
def test_exit_peak_time(make):
    scn = make()
    t = exit_peak_time(scn, L)
    # golden section resolves a smooth maximum to ~sqrt(eps) relative
    assert t == pytest.approx(L / C - scn.phi1, abs=1e-8)
    assert t < 0  # leaves before entering


def test_replay_shape():
    scn = sharp()
    xi = np.linspace(-3, 1, 401)
    res = replay(scn, xi, [0.0, L])
    assert res.fields.shape == (2, 401)
    assert np.allclose(res.exit_field, analytic_field(scn, L, xi + L / C))


@settings(max_examples=40)
@given(l1=st.floats(0.5, 40.0), dl=st.floats(0.1, 20.0))
def test_advance_monotone_in_length(l1, dl):
    a = sharp(x1=l1)
    b = sharp(x1=l1 + dl)
    assert b.phi1 > a.phi1
    assert exit_peak_time(b, 100.0) < exit_peak_time(a, 100.0)
