"""Metrics extracted from solver runs and analytic replays.

Peaks are located on ``|omega|^2`` and refined with a three-point parabola.
"Exit peak" always means the leading peak: the first local maximum reaching
half of the global maximum, so trailing ringing bursts are never mistaken for
the advanced pulse.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .analytic import AnalyticScenario, analytic_field, exit_peak_time
from .model import CONSTANTS, DomainError, FastLightError, SimulationResult

LEADING_PEAK_FRACTION = 0.5
FLAT_FIELD = 1e-9
RINGING_OFFSET_TAU = 6.0


class NoPeakError(FastLightError):
    pass


@dataclass(frozen=True)
class Ringing:
    zero_crossings: int
    max_trailing_amp: float


@dataclass
class Metrics:
    area_in: float
    area_out: float
    area_out_complex: float
    peak_trajectory: list
    vg_fit_over_c: float | None
    advance_tau: float | None
    linf_vs_analytic: float | None
    front_leakage: float | None
    ringing: Ringing | None
    max_norm_deviation: float
    max_imag_rel: float
    dx_cm: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["peak_trajectory"] = [[float(x), None if xi is None else float(xi)] for x, xi in self.peak_trajectory]
        return d


def pulse_area(omega, d_xi: float) -> float:
    """Area ``integral Re(omega) d xi`` by the trapezoid rule."""
    return float(np.trapezoid(np.real(np.asarray(omega)), dx=d_xi))


def complex_area(omega, d_xi: float) -> float:
    """``|integral omega d xi|``, the area that ignores the field's phase."""
    return float(abs(np.trapezoid(np.asarray(omega, dtype=complex), dx=d_xi)))


def _tau(result) -> float:
    return result.scenario.pulse.tau


def leading_peak(omega, xi, tau: float):
    """Retarded time of the leading peak, or ``None`` for an essentially flat field."""
    p = np.abs(np.asarray(omega)) ** 2
    top = p.max(initial=0.0)
    if top <= (FLAT_FIELD * 2.0 / tau) ** 2:
        return None
    cand = np.flatnonzero(p >= LEADING_PEAK_FRACTION * top)
    k = int(cand[0])
    while k + 1 < len(p) and p[k + 1] >= p[k]:
        k += 1
    if 0 < k < len(p) - 1:
        y0, y1, y2 = p[k - 1], p[k], p[k + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        return float(xi[k] + shift * (xi[1] - xi[0]))
    return float(xi[k])


def peak_trajectory(result: SimulationResult) -> list:
    """``(x, xi_peak)`` per recorded station; ``xi_peak`` is ``None`` where the field is flat."""
    tau = _tau(result)
    return [(float(x), leading_peak(row, result.xi, tau)) for x, row in zip(result.stations, result.fields)]


def fit_group_velocity(trajectory, x_range) -> float:
    """``v_g/c`` from a least-squares line through ``xi_peak(x)`` within ``x_range``."""
    lo, hi = x_range
    pts = [(x, xi) for x, xi in trajectory if lo <= x <= hi and xi is not None]
    if len(pts) < 10:
        raise DomainError(f"need >= 10 trajectory points in {x_range}, got {len(pts)}")
    x, xi = np.asarray(pts).T
    slope = np.polyfit(x, xi, 1)[0]
    if abs(slope + 1.0 / CONSTANTS.c) < 1e-12:
        return math.inf
    return float(1.0 / (CONSTANTS.c * slope + 1.0))


def peak_advance(result) -> float:
    """Advance of the exit peak over vacuum transit, in units of tau.

    Accepts a run/replay (peak read from the last station against the input
    station) or an :class:`AnalyticScenario` (closed-form argmax at ``x1``).
    """
    if isinstance(result, AnalyticScenario):
        x1 = result.medium.x1
        xi_exit = exit_peak_time(result, x1) - x1 / CONSTANTS.c
        return (result.pulse.t_peak - xi_exit) / result.tau
    tau = _tau(result)
    ref = leading_peak(result.input_field, result.xi, tau)
    out = leading_peak(result.exit_field, result.xi, tau)
    if ref is None or out is None:
        raise NoPeakError("no identifiable peak at the input or exit station")
    return (ref - out) / tau


def analytic_counterpart(scenario) -> AnalyticScenario:
    """The untruncated single-slab analytic scenario matching a solver scenario."""
    active = [s for s in scenario.segments if s.g > 0]
    if len(active) != 1:
        raise DomainError("analytic comparison needs exactly one active slab")
    pulse = replace(scenario.pulse, trunc_halfwidth=math.inf, edge="hard", ramp_len=0.0)
    return AnalyticScenario(pulse, active[0])


def compare_to_analytic(result: SimulationResult, scenario: AnalyticScenario, strict: bool = True,
                        xi_range=None) -> dict:
    """L-inf and RMS deviation from the closed form at the exit station, relative to ``2/tau``."""
    if strict and len(scenario.grid) != 1:
        raise DomainError("strict analytic comparison needs a sharp-line slab")
    sp = result.scenario.pulse
    if not (math.isclose(sp.tau, scenario.tau) and math.isclose(sp.t_peak, scenario.pulse.t_peak)):
        raise DomainError("result and analytic scenario use different pulses")
    x = float(result.stations[-1])
    if x < scenario.medium.x1:
        raise DomainError("exit station lies inside the slab")
    xi = result.xi
    mask = np.ones_like(xi, dtype=bool)
    if xi_range is not None:
        mask = (xi >= xi_range[0]) & (xi <= xi_range[1])
    ref = np.asarray(analytic_field(scenario, x, xi[mask] + x / CONSTANTS.c))
    diff = result.exit_field[mask] - ref
    peak = 2.0 / scenario.tau
    return {
        "linf": float(np.max(np.abs(diff)) / peak),
        "l2": float(np.sqrt(np.mean(np.abs(diff) ** 2)) / peak),
    }


def detect_ringing(omega, xi, peak_xi: float, tau: float, offset_tau: float = RINGING_OFFSET_TAU) -> Ringing:
    """Sign changes of ``Re(omega)`` after the peak, and the largest ``|omega|`` beyond
    ``peak + offset_tau*tau`` relative to the peak value."""
    omega = np.asarray(omega)
    xi = np.asarray(xi)
    k0 = int(np.searchsorted(xi, peak_xi))
    peak_val = np.abs(omega[max(k0 - 1, 0):k0 + 1]).max()
    re = omega.real[k0:]
    sig = re[np.abs(re) > FLAT_FIELD * peak_val]
    crossings = int(np.count_nonzero(np.diff(np.sign(sig)) != 0))
    tail = np.abs(omega[xi >= peak_xi + offset_tau * tau])
    trailing = float(tail.max(initial=0.0) / peak_val)
    return Ringing(crossings, trailing)


def front_causality_check(result: SimulationResult, front_xi: float | None = None) -> float:
    """Largest ``|omega|`` ahead of the input front, over all stations, relative to ``2/tau``."""
    pulse = result.scenario.pulse
    if front_xi is None:
        if not pulse.truncated:
            raise DomainError("causality check needs a hard-windowed input")
        ahead = (result.xi - pulse.t_peak) < -pulse.trunc_halfwidth * pulse.tau
    else:
        ahead = result.xi < front_xi
    if not ahead.any():
        return 0.0
    return float(np.abs(result.fields[:, ahead]).max() / (2.0 / pulse.tau))


def _vg_fit(result, trajectory):
    # entry half of the first slab: deeper in, the edge-seeded instability
    # reshapes the pulse and the peak no longer moves at the sech group velocity
    segs = [s for s in getattr(result.scenario, "segments", ()) if s.g > 0]
    if not segs:
        return None
    s = segs[0]
    lo, hi = s.x0 + 0.05 * s.length, s.x0 + 0.5 * s.length
    try:
        return fit_group_velocity(trajectory, (lo, hi))
    except DomainError:
        return None


def compute_metrics(result: SimulationResult, analytic: AnalyticScenario | None = None) -> Metrics:
    """Fill every metric that applies to ``result``; inapplicable ones are ``None``."""
    tau = _tau(result)
    d_xi = result.d_xi
    traj = peak_trajectory(result)
    try:
        adv = peak_advance(result)
    except NoPeakError:
        adv = None
    out_peak = leading_peak(result.exit_field, result.xi, tau)
    ringing = detect_ringing(result.exit_field, result.xi, out_peak, tau) if out_peak is not None else None
    pulse = result.scenario.pulse
    leak = front_causality_check(result) if pulse.truncated else None
    linf = None
    if analytic is not None:
        linf = compare_to_analytic(result, analytic, strict=False)["linf"]
    return Metrics(
        area_in=pulse_area(result.input_field, d_xi),
        area_out=pulse_area(result.exit_field, d_xi),
        area_out_complex=complex_area(result.exit_field, d_xi),
        peak_trajectory=traj,
        vg_fit_over_c=_vg_fit(result, traj),
        advance_tau=adv,
        linf_vs_analytic=linf,
        front_leakage=leak,
        ringing=ringing,
        max_norm_deviation=float(result.max_norm_deviation),
        max_imag_rel=float(np.abs(result.fields.imag).max() / (2.0 / tau)),
        dx_cm=result.dx,
    )
