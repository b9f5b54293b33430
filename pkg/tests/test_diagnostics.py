import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastlight import diagnostics as dg
from fastlight.analytic import AnalyticScenario, replay
from fastlight.model import CONSTANTS, DomainError, MediumSegment, PulseSpec, beer_alpha
from fastlight.solver import RecordRequest, Scenario, SimGrid, default_grid, input_envelope, run

C = CONSTANTS.c
TAU, G, T2 = 0.1, 266.0, 0.733
L = 250 / beer_alpha(G, T2)
XI = np.arange(-4.0, 3.0 + 1e-12, TAU / 40)


def _replay(scn, n=401):
    stations = np.linspace(-10, L + 10, n)
    return replay(scn, XI, stations)


def test_pulse_area_sech():
    om = input_envelope(PulseSpec(TAU), XI)
    assert dg.pulse_area(om, TAU / 40) == pytest.approx(2 * math.pi, rel=1e-9)
    assert dg.pulse_area(np.zeros(10), 0.1) == 0.0
    assert dg.complex_area(1j * om, TAU / 40) == pytest.approx(2 * math.pi, rel=1e-9)


@settings(max_examples=30)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_pulse_area_linear(a, b):
    f = input_envelope(PulseSpec(TAU), XI)
    g = np.exp(-XI**2)
    lhs = dg.pulse_area(a * f + b * g, 0.025)
    rhs = a * dg.pulse_area(f, 0.025) + b * dg.pulse_area(g, 0.025)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_leading_peak_flat_and_sub_sample():
    assert dg.leading_peak(np.zeros(50), XI[:50], TAU) is None
    om = 20 / np.cosh((XI - 0.0123) / TAU)
    assert dg.leading_peak(om, XI, TAU) == pytest.approx(0.0123, abs=2e-4)


def test_leading_peak_ignores_later_bigger_burst():
    om = 20 / np.cosh(XI / TAU) + 25 / np.cosh((XI - 1.0) / TAU)
    assert dg.leading_peak(om, XI, TAU) == pytest.approx(0.0, abs=1e-3)


@pytest.mark.parametrize("t2", [math.inf, T2])
def test_vg_fit_on_replay(t2):
    scn = AnalyticScenario(PulseSpec(TAU), MediumSegment(0.0, L, G, t2))
    traj = dg.peak_trajectory(_replay(scn))
    vg = dg.fit_group_velocity(traj, (0.05 * L, 0.95 * L))
    assert vg == pytest.approx(scn.vg_over_c, rel=1e-3)


def test_vg_fit_needs_points():
    with pytest.raises(DomainError):
        dg.fit_group_velocity([(0.0, 0.0), (1.0, 0.1)], (0, 1))


def test_peak_advance_replay_and_closed_form():
    scn = AnalyticScenario(PulseSpec(TAU), MediumSegment(0.0, L, G))
    assert dg.peak_advance(scn) == pytest.approx(scn.phi1 / TAU, rel=1e-6)
    assert dg.peak_advance(_replay(scn)) == pytest.approx(scn.phi1 / TAU, abs=0.01)


def test_peak_advance_vacuum_zero():
    scn = AnalyticScenario(PulseSpec(TAU), MediumSegment(0.0, L, 0.0))
    assert dg.peak_advance(scn) == pytest.approx(0.0, abs=1e-7)


def test_compare_to_analytic_self_is_zero():
    scn = AnalyticScenario(PulseSpec(TAU), MediumSegment(0.0, L, G))
    res = _replay(scn)
    err = dg.compare_to_analytic(res, scn)
    assert err["linf"] < 1e-14 and err["l2"] < 1e-14
    broad = AnalyticScenario(PulseSpec(TAU), MediumSegment(0.0, L, G, T2))
    with pytest.raises(DomainError):
        dg.compare_to_analytic(res, broad)


def test_detect_ringing():
    clean = 20 / np.cosh(XI / TAU)
    r = dg.detect_ringing(clean, XI, 0.0, TAU)
    assert r.zero_crossings == 0 and r.max_trailing_amp < 1e-2
    ringing = clean + 2 * np.sin(20 * XI) * (XI > 0.3)
    r = dg.detect_ringing(ringing, XI, 0.0, TAU)
    assert r.zero_crossings > 10
    assert r.max_trailing_amp == pytest.approx(0.1, rel=0.05)


def test_front_causality_vacuum_exact_zero():
    pulse = PulseSpec(TAU, trunc_halfwidth=25)
    res = run(Scenario(pulse, (), default_grid(pulse, [], x_min=0.0, x_max=10.0)))
    assert dg.front_causality_check(res) == 0.0
    res_u = replay(AnalyticScenario(PulseSpec(TAU), MediumSegment(0.0, 1.0, G)), XI, [0.0, 2.0])
    with pytest.raises(DomainError):
        dg.front_causality_check(res_u)


def test_compute_metrics_short_slab():
    pulse = PulseSpec(TAU, trunc_halfwidth=25)
    seg = MediumSegment(0.0, 5.0, G)
    grid = SimGrid(-3.0, 1.0, TAU / 20, 0.0, 5.0, 0.04)
    res = run(Scenario(pulse, (seg,), grid, record=RecordRequest(track_points=51)))
    an = dg.analytic_counterpart(res.scenario)
    m = dg.compute_metrics(res, an)
    assert m.area_in == pytest.approx(2 * math.pi, rel=1e-4)  # sech tail beyond 10 tau
    assert m.front_leakage == 0.0
    assert m.linf_vs_analytic < 0.01
    assert m.advance_tau == pytest.approx(an.phi1 / TAU, abs=0.05)
    assert m.vg_fit_over_c == pytest.approx(an.vg_over_c, rel=0.02)
    d = m.to_dict()
    assert d["ringing"]["zero_crossings"] >= 0 and len(d["peak_trajectory"]) == len(res.stations)
