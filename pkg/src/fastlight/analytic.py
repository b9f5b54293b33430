"""Closed-form segmented sech solution for a single inverted slab.

Outside the slab the pulse moves at ``c``; inside it moves at the (negative)
group velocity. The entry and exit offsets keep the field continuous at both
faces, so the pulse leaves the slab earlier than vacuum transit would allow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    CONSTANTS,
    DetuningGrid,
    DomainError,
    FastLightError,
    FieldSnapshot,
    MediumSegment,
    PulseSpec,
    SimulationResult,
    group_velocity,
    phase_offsets,
)


class UnsupportedConfigurationError(FastLightError):
    pass


@dataclass(frozen=True)
class AnalyticScenario:
    """An untruncated ``(2/tau) sech`` pulse meeting one slab.

    ``vg_over_c``, ``phi0`` and ``phi1`` are derived on construction from the
    slab's detuning grid.
    """

    pulse: PulseSpec
    medium: MediumSegment
    one_minus_c_over_vg: float = field(init=False)
    vg_over_c: float = field(init=False)
    phi0: float = field(init=False)
    phi1: float = field(init=False)

    def __post_init__(self):
        if self.pulse.truncated:
            raise DomainError("the analytic solution needs an untruncated pulse")
        if not math.isclose(self.pulse.amplitude, 2.0 / self.pulse.tau, rel_tol=1e-12):
            raise DomainError("the analytic solution needs peak amplitude 2/tau")
        gv = group_velocity(self.medium.g, self.pulse.tau, self.grid)
        phi0, phi1 = phase_offsets(
            self.medium.g, self.pulse.tau, self.medium.x0, self.medium.x1, gv.one_minus_c_over_vg
        )
        object.__setattr__(self, "one_minus_c_over_vg", gv.one_minus_c_over_vg)
        object.__setattr__(self, "vg_over_c", gv.vg_over_c)
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "phi1", phi1)

    @property
    def grid(self) -> DetuningGrid:
        return self.medium.detuning_grid()

    @property
    def tau(self) -> float:
        return self.pulse.tau

    @property
    def inverse_vg(self) -> float:
        """``1/v_g`` in ns/cm (finite even when v_g is not)."""
        return (1.0 - self.one_minus_c_over_vg) / CONSTANTS.c


def _inside_phase(scn: AnalyticScenario, x, t):
    return (t - scn.pulse.t_peak - x * scn.inverse_vg + scn.phi0) / scn.tau


def analytic_field(scn: AnalyticScenario, x, t):
    """Rabi frequency of the segmented solution at ``(x, t)``; broadcasts over arrays."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    c = CONSTANTS.c
    ts = t - scn.pulse.t_peak
    arg = np.where(
        x < scn.medium.x0,
        (ts - x / c) / scn.tau,
        np.where(
            x <= scn.medium.x1,
            _inside_phase(scn, x, t),
            (ts - x / c + scn.phi1) / scn.tau,
        ),
    )
    out = (2.0 / scn.tau) / np.cosh(arg)
    out = out.astype(complex)
    return out[()] if out.ndim == 0 else out


def analytic_amplitudes(scn: AnalyticScenario, x, t):
    """Atomic amplitudes ``(c1, c2) = (i sech phi, -tanh phi)`` inside the slab."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any((x < scn.medium.x0) | (x > scn.medium.x1)):
        raise DomainError("atomic amplitudes are only defined inside the slab")
    phi = _inside_phase(scn, x, t)
    c1 = np.asarray(1j / np.cosh(phi))
    c2 = np.asarray(-np.tanh(phi) + 0j)
    if c1.ndim == 0:
        return c1[()], c2[()]
    return c1, c2


def analytic_snapshot(scn: AnalyticScenario, t: float, x_grid) -> FieldSnapshot:
    x = np.asarray(x_grid, dtype=float)
    if np.any(np.diff(x) < 0):
        raise DomainError("x_grid must be sorted ascending")
    return FieldSnapshot(
        t=float(t),
        x=x,
        omega=np.asarray(analytic_field(scn, x, t), dtype=complex),
        tau=scn.tau,
        media=((scn.medium.x0, scn.medium.x1),),
    )


def exit_peak_time(scn: AnalyticScenario, x: float, search_halfwidth: float = 5.0) -> float:
    """Time of the field maximum at a fixed ``x``, by golden-section search."""
    from scipy.optimize import minimize_scalar

    c = CONSTANTS.c
    if x < scn.medium.x0:
        guess = x / c
    elif x <= scn.medium.x1:
        guess = x * scn.inverse_vg - scn.phi0
    else:
        guess = x / c - scn.phi1
    guess += scn.pulse.t_peak
    w = search_halfwidth * scn.tau
    res = minimize_scalar(
        lambda t: -float(np.real(analytic_field(scn, x, t))),
        bracket=(guess - w, guess + 0.1 * w, guess + w),
        method="golden",
        tol=1e-12,
    )
    return float(res.x)


def replay(scn: AnalyticScenario, xi, stations) -> SimulationResult:
    """Evaluate the closed form on a retarded-time grid at the given stations.

    The result has the same shape as a solver run, so the diagnostics apply
    to it unchanged.
    """
    xi = np.asarray(xi, dtype=float)
    stations = np.asarray(stations, dtype=float)
    t = xi[None, :] + stations[:, None] / CONSTANTS.c
    fields = np.asarray(analytic_field(scn, stations[:, None], t), dtype=complex)
    return SimulationResult(
        scenario=scn,
        xi=xi,
        stations=stations,
        fields=fields,
        retarded={float(x): fields[k] for k, x in enumerate(stations)},
        backend="analytic",
    )


def residual_check(scn: AnalyticScenario, sample_points, h: float = 1e-3) -> dict:
    """Finite-difference residuals of the Bloch and Maxwell equations.

    ``sample_points`` is an iterable of ``(x, t)`` inside the slab and ``h`` is
    the time step in ns (the space step is ``c*h``). Returns the max absolute
    residual of each equation and their overall max; each vanishes as ``h**2``.
    """
    if len(scn.grid) != 1 or scn.grid.nodes[0] != 0.0:
        raise UnsupportedConfigurationError(
            "residual check needs a sharp line: the closed-form amplitudes carry no detuning"
        )
    c = CONSTANTS.c
    g = scn.medium.g
    pts = np.asarray(list(sample_points), dtype=float).reshape(-1, 2)
    x, t = pts[:, 0], pts[:, 1]
    hx = c * h

    c1, c2 = analytic_amplitudes(scn, x, t)
    c1p, c2p = analytic_amplitudes(scn, x, t + h)
    c1m, c2m = analytic_amplitudes(scn, x, t - h)
    om = analytic_field(scn, x, t)

    r_c1 = (c1p - c1m) / (2 * h) - 0.5j * om * c2
    r_c2 = (c2p - c2m) / (2 * h) - 0.5j * np.conj(om) * c1

    dom_dx = (analytic_field(scn, x + hx, t) - analytic_field(scn, x - hx, t)) / (2 * hx)
    dom_dt = (analytic_field(scn, x, t + h) - analytic_field(scn, x, t - h)) / (2 * h)
    r_max = c * dom_dx + dom_dt + 1j * g * c1 * np.conj(c2)

    out = {
        "bloch_c1": float(np.max(np.abs(r_c1))),
        "bloch_c2": float(np.max(np.abs(r_c2))),
        "maxwell": float(np.max(np.abs(r_max))),
    }
    out["max"] = max(out.values())
    return out
