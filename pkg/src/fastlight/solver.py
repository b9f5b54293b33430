"""Maxwell-Bloch propagation in the retarded frame ``xi = t - x/c``.

The field is marched in ``x`` with a Heun predictor-corrector step. At every
``x`` the atomic amplitudes of each detuning class are re-integrated over the
whole ``xi`` window (RK4, compiled kernel when available) to form the
polarization ``<c1 c2*>``. In vacuum the retarded-frame field is constant,
so gaps between slabs cost nothing.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from ._kernels_py import rk4_step
from .model import (
    CONSTANTS,
    DetuningGrid,
    DomainError,
    FastLightError,
    FieldSnapshot,
    MediumSegment,
    PulseSpec,
    SimulationResult,
    SingularGroupVelocityError,
    group_velocity,
)

log = logging.getLogger(__name__)

# Auto step controller target for g*dx/c*max|P| (|P| <= 1/2 always).
DX_AUTO_TARGET = 0.05
DEFAULT_TRACK_POINTS = 400
OVERFLOW_MARGIN_TAU = 3.0


class NumericalFailure(FastLightError, RuntimeError):
    def __init__(self, msg, x_last_good=None):
        super().__init__(msg)
        self.x_last_good = x_last_good


class WindowOverflowError(FastLightError, RuntimeError):
    pass


@dataclass(frozen=True)
class SimGrid:
    """Retarded-time window/step (ns) and spatial window/step (cm).

    ``dx=None`` selects the automatic step controller.
    """

    xi_min: float
    xi_max: float
    d_xi: float
    x_min: float
    x_max: float
    dx: float | None = None

    def __post_init__(self):
        if not self.d_xi > 0:
            raise DomainError(f"grid.d_xi must be > 0, got {self.d_xi}")
        if not self.xi_max > self.xi_min:
            raise DomainError("grid.xi_max must exceed grid.xi_min")
        if not self.x_max > self.x_min:
            raise DomainError("grid.x_max must exceed grid.x_min")
        _check_integral("grid.d_xi", self.xi_max - self.xi_min, self.d_xi)
        if self.dx is not None:
            if not self.dx > 0:
                raise DomainError(f"grid.dx must be > 0, got {self.dx}")
            _check_integral("grid.dx", self.x_max - self.x_min, self.dx)

    @property
    def n_xi(self) -> int:
        return int(round((self.xi_max - self.xi_min) / self.d_xi)) + 1

    @property
    def xi(self) -> np.ndarray:
        return self.xi_min + self.d_xi * np.arange(self.n_xi)


def _check_integral(name, span, step):
    k = span / step
    if abs(k - round(k)) > 1e-6 * max(1.0, k):
        raise DomainError(f"{name} = {step} does not divide the window {span} into whole steps")


@dataclass(frozen=True)
class RecordRequest:
    """Which snapshots to keep: lab-frame times (ns) and retarded-frame stations (cm).

    ``track_points`` dense stations are always recorded for peak tracking and
    lab-frame interpolation.
    """

    times: tuple[float, ...] = ()
    stations: tuple[float, ...] = ()
    track_points: int = DEFAULT_TRACK_POINTS


@dataclass(frozen=True)
class Scenario:
    pulse: PulseSpec
    segments: tuple[MediumSegment, ...]
    grid: SimGrid
    fluct_seed: int = 0
    record: RecordRequest = field(default_factory=RecordRequest)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        segs = self.segments
        for i, s in enumerate(segs):
            if s.x0 < self.grid.x_min or s.x1 > self.grid.x_max:
                raise DomainError(f"medium[{i}] [{s.x0}, {s.x1}] lies outside the x window")
        for i in range(len(segs)):
            for j in range(i + 1, len(segs)):
                a, b = segs[i], segs[j]
                if a.x0 < b.x1 and b.x0 < a.x1:
                    raise DomainError(f"medium[{i}] and medium[{j}] overlap")
        if any(segs[i].x0 > segs[i + 1].x0 for i in range(len(segs) - 1)):
            raise DomainError("medium segments must be sorted by position")
        if not 0 <= self.fluct_seed < 2**64:
            raise DomainError("run.seed must fit in 64 bits")
        p, g = self.pulse, self.grid
        front = p.front if p.truncated else math.inf
        need_lo = min(front, p.t_peak - advance_estimate(p.tau, segs) - 10 * p.tau)
        if g.xi_min > need_lo + 1e-9 * p.tau:
            raise DomainError(
                f"grid.xi_min = {g.xi_min} must be <= {need_lo:.6g} "
                "(pulse front and expected advance plus 10 tau)"
            )
        if g.xi_max < p.t_peak + 10 * p.tau:
            raise DomainError(f"grid.xi_max must be >= t_peak + 10 tau = {p.t_peak + 10 * p.tau}")
        for t in self.record.stations:
            if not g.x_min <= t <= g.x_max:
                raise DomainError(f"snapshot station {t} lies outside the x window")


def advance_estimate(tau: float, segments) -> float:
    """Expected total peak advance (ns) from the closed-form group velocity."""
    total = 0.0
    for s in segments:
        try:
            k = group_velocity(s.g, tau, s.detuning_grid()).one_minus_c_over_vg
        except SingularGroupVelocityError:
            k = 1.0
        total += max(k, 0.0) * s.length / CONSTANTS.c
    return total


def default_grid(pulse: PulseSpec, segments, d_xi: float | None = None, dx: float | None = None,
                 x_min: float | None = None, x_max: float | None = None) -> SimGrid:
    """Window ``[t_peak-(W+5)tau, t_peak+(W+20)tau+advance]``, step ``tau/40``.

    An untruncated pulse uses ``W = 25`` for sizing.
    """
    tau = pulse.tau
    d_xi = tau / 40 if d_xi is None else d_xi
    w = pulse.trunc_halfwidth if pulse.truncated else 25.0
    lo = pulse.t_peak - (w + 5) * tau
    hi = pulse.t_peak + (w + 20) * tau + advance_estimate(tau, segments)
    n = math.ceil((hi - lo) / d_xi - 1e-9)
    if segments:
        length = segments[-1].x1 - segments[0].x0
        x_min = segments[0].x0 - 0.5 * length if x_min is None else x_min
        x_max = segments[-1].x1 + 0.5 * length if x_max is None else x_max
    elif x_min is None or x_max is None:
        raise DomainError("x window must be given when there are no segments")
    return SimGrid(lo, lo + n * d_xi, d_xi, x_min, x_max, dx)


def auto_dx(segments) -> float:
    g_max = max((s.g for s in segments), default=0.0)
    if g_max == 0:
        return math.inf
    return DX_AUTO_TARGET * CONSTANTS.c / (0.5 * g_max)


def _sech(a):
    e = np.exp(-np.abs(a))
    return 2.0 * e / (1.0 + e * e)


def input_envelope(pulse: PulseSpec, xi):
    """Input field at the injection plane, including the truncation window."""
    xi = np.asarray(xi, dtype=float)
    s = xi - pulse.t_peak
    out = pulse.amplitude * _sech(s / pulse.tau)
    if pulse.truncated:
        half = pulse.trunc_halfwidth * pulse.tau
        out = np.where(np.abs(s) <= half, out, 0.0)
        if pulse.edge == "cosine_ramp":
            ramp = pulse.ramp_len * pulse.tau
            u = np.clip((half - np.abs(s)) / ramp, 0.0, 1.0)
            out = out * 0.5 * (1.0 - np.cos(np.pi * u))
    out = out.astype(complex)
    return out[()] if out.ndim == 0 else out


def bloch_step(c, omega_samples, delta: float, d_xi: float):
    """Advance ``(c1, c2)`` by one RK4 step over ``d_xi``.

    ``omega_samples = (omega_start, omega_end)``; the field is linear in between.
    """
    c1, c2 = (complex(v) for v in c)
    norm = abs(c1) ** 2 + abs(c2) ** 2
    if abs(norm - 1.0) > 1e-6:
        raise DomainError(f"amplitudes are not normalised (|c1|^2+|c2|^2 = {norm})")
    om0, om1 = omega_samples
    n1, n2 = rk4_step(c1, c2, complex(om0), complex(om1), float(delta), float(d_xi))
    n1, n2 = complex(n1), complex(n2)
    if not (math.isfinite(abs(n1)) and math.isfinite(abs(n2))):
        raise NumericalFailure(f"Bloch step produced non-finite amplitudes at delta={delta}")
    return n1, n2


def polarization(c1, c2, grid: DetuningGrid) -> complex:
    """Detuning average ``sum_i w_i c1_i conj(c2_i)``, accumulated in node order."""
    c1 = np.atleast_1d(np.asarray(c1, dtype=complex))
    c2 = np.atleast_1d(np.asarray(c2, dtype=complex))
    if len(c1) != len(grid) or len(c2) != len(grid):
        raise DomainError(f"expected {len(grid)} amplitude pairs, got {len(c1)}")
    acc = 0j
    for w, a, b in zip(grid.weights, c1, c2):
        acc += w * a * b.conjugate()
    return acc


def fluctuation_amplitudes(eps0: float, shape, rng: np.random.Generator):
    """Random weak tipping from the upper level: tip ~ N(0, eps0), phase ~ U[0, 2pi)."""
    if not eps0 >= 0:
        raise DomainError(f"fluct_eps0 must be >= 0, got {eps0}")
    if eps0 == 0:
        return np.zeros(shape, complex), np.ones(shape, complex)
    theta = rng.normal(0.0, eps0, size=shape)
    chi = rng.uniform(0.0, 2 * np.pi, size=shape)
    c1 = 1j * np.sin(0.5 * theta) * np.exp(1j * chi)
    c2 = np.cos(0.5 * theta) + 0j
    return c1, c2


@dataclass(frozen=True)
class _Step:
    x0: float
    x1: float
    segment: int | None  # index into scenario.segments, None for vacuum
    cell: int = 0  # step index within its segment
    record_after: bool = False


def march_plan(scenario: Scenario):
    """Ordered list of x steps and the dx used inside media.

    Breakpoints are the window ends, segment faces, requested stations and the
    dense tracking stations; media intervals are split into equal steps no
    longer than the target dx.
    """
    g = scenario.grid
    dx = g.dx if g.dx is not None else auto_dx(scenario.segments)
    pts = {g.x_min, g.x_max}
    for s in scenario.segments:
        pts.update((s.x0, s.x1))
    pts.update(scenario.record.stations)
    n_track = max(scenario.record.track_points, 2)
    pts.update(np.linspace(g.x_min, g.x_max, n_track).tolist())
    bps = sorted(pts)
    # merge breakpoints closer than a rounding error
    merged = [bps[0]]
    for p in bps[1:]:
        if p - merged[-1] > 1e-12 * max(1.0, abs(p)):
            merged.append(p)
    steps = []
    cells = [0] * len(scenario.segments)
    for a, b in zip(merged[:-1], merged[1:]):
        mid = 0.5 * (a + b)
        seg = next(
            (i for i, s in enumerate(scenario.segments) if s.x0 <= mid <= s.x1 and s.g > 0),
            None,
        )
        if seg is None:
            steps.append(_Step(a, b, None, record_after=True))
            continue
        n = max(1, math.ceil((b - a) / dx - 1e-9))
        h = (b - a) / n
        for k in range(n):
            x1 = b if k == n - 1 else a + (k + 1) * h
            steps.append(_Step(a + k * h, x1, seg, cells[seg], record_after=(k == n - 1)))
            cells[seg] += 1
    return steps, dx, cells


def apply_fluctuations(scenario: Scenario, seed: int | None = None):
    """Initial amplitudes per (x cell, detuning node) for every segment.

    Returns one ``(c1, c2)`` pair of ``(n_cells, n_nodes)`` arrays per segment.
    Deterministic in ``seed`` (defaults to ``scenario.fluct_seed``).
    """
    seed = scenario.fluct_seed if seed is None else seed
    _, _, cells = march_plan(scenario)
    out = []
    for i, seg in enumerate(scenario.segments):
        n_nodes = len(seg.detuning_grid())
        shape = (cells[i], n_nodes)
        if seg.fluct_eps0 > 0:
            rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
            out.append(fluctuation_amplitudes(seg.fluct_eps0, shape, rng))
        else:
            out.append((np.full(shape, seg.init_c1), np.full(shape, seg.init_c2)))
    return out


@dataclass
class SolverState:
    x: float
    omega: np.ndarray
    max_norm_deviation: float = 0.0


class _Medium:
    """Per-segment step context: coupling, detuning grid, initial amplitudes."""

    def __init__(self, segment: MediumSegment, c1_cells, c2_cells, n_xi, pool=None, threads=1):
        self.segment = segment
        self.g = segment.g
        self.grid = segment.detuning_grid()
        self.c1_cells = np.ascontiguousarray(c1_cells, dtype=complex)
        self.c2_cells = np.ascontiguousarray(c2_cells, dtype=complex)
        self.rows = np.empty((len(self.grid), n_xi), dtype=complex)
        self.pool = pool
        n = len(self.grid)
        k = max(1, min(threads, n))
        bounds = np.linspace(0, n, k + 1).astype(int)
        self.chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def polarization(self, omega, d_xi, cell):
        c1 = self.c1_cells[cell]
        c2 = self.c2_cells[cell]
        nodes = self.grid.nodes
        if self.pool is None or len(self.chunks) == 1:
            dev = kernels.coherence_rows(omega, d_xi, nodes, c1, c2, self.rows)
        else:
            futs = [
                self.pool.submit(kernels.coherence_rows, omega, d_xi, nodes, c1, c2, self.rows, a, b)
                for a, b in self.chunks
            ]
            devs = [f.result() for f in futs]
            dev = max(devs) if all(math.isfinite(d) for d in devs) else math.nan
        # reduction order is fixed (ascending node) whatever the chunking
        return kernels.weighted_sum(self.rows, self.grid.weights), dev


def advance_x(state: SolverState, medium: _Medium, dx: float, d_xi: float, cell: int = 0) -> SolverState:
    """One Heun step of ``d omega/dx = -(i g / c) P``; identity when ``g = 0``."""
    if medium is None or medium.g == 0:
        return SolverState(state.x + dx, state.omega, state.max_norm_deviation)
    k = 1j * medium.g * dx / CONSTANTS.c
    p0, dev0 = medium.polarization(state.omega, d_xi, cell)
    predicted = state.omega - k * p0
    p1, dev1 = medium.polarization(predicted, d_xi, cell)
    omega = state.omega - 0.5 * k * (p0 + p1)
    dev = max(dev0, dev1)
    if not (math.isfinite(dev) and np.all(np.isfinite(omega))):
        raise NumericalFailure(f"non-finite field or amplitudes after x = {state.x}", state.x)
    return SolverState(state.x + dx, omega, max(state.max_norm_deviation, dev))


def run(scenario: Scenario, threads: int = 1, progress=None) -> SimulationResult:
    """March the field across the x window and record snapshots."""
    grid = scenario.grid
    xi = grid.xi
    tau = scenario.pulse.tau
    steps, dx, _ = march_plan(scenario)
    inits = apply_fluctuations(scenario)
    omega = np.ascontiguousarray(input_envelope(scenario.pulse, xi), dtype=complex)
    state = SolverState(grid.x_min, omega)
    # the first xi sample never changes, so a window that is too short acts as
    # a hard front and the field piles up ~2 tau behind it
    overflow_idx = max(1, int(round(OVERFLOW_MARGIN_TAU * tau / grid.d_xi)))

    stations = [grid.x_min]
    rows = [state.omega.copy()]
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        media = [
            _Medium(seg, c1, c2, len(xi), pool, threads)
            for seg, (c1, c2) in zip(scenario.segments, inits)
        ]
        for n, st in enumerate(steps):
            med = media[st.segment] if st.segment is not None else None
            state = advance_x(state, med, st.x1 - st.x0, grid.d_xi, st.cell)
            state.x = st.x1
            if med is not None:
                peak = int(np.argmax(np.abs(state.omega)))
                if peak < overflow_idx and np.abs(state.omega[peak]) > 0:
                    raise WindowOverflowError(
                        f"field maximum reached the start of the xi window at x = {st.x1}; "
                        "widen grid.xi_min"
                    )
            if st.record_after:
                stations.append(st.x1)
                rows.append(state.omega.copy())
            if progress is not None:
                progress(n + 1, len(steps))
    finally:
        if pool is not None:
            pool.shutdown()

    stations = np.asarray(stations)
    fields = np.asarray(rows)
    result = SimulationResult(
        scenario=scenario,
        xi=xi,
        stations=stations,
        fields=fields,
        seed=scenario.fluct_seed,
        dx=dx if math.isfinite(dx) else None,
        max_norm_deviation=state.max_norm_deviation,
        backend=kernels.BACKEND,
    )
    for x in scenario.record.stations:
        k = int(np.argmin(np.abs(stations - x)))
        result.retarded[float(x)] = fields[k]
    for t in scenario.record.times:
        result.lab[float(t)] = lab_frame_snapshot(result, t)
    return result


def lab_frame_snapshot(result: SimulationResult, t: float, x=None) -> FieldSnapshot:
    """Sample ``omega(x, t)`` at every recorded station by interpolating in xi."""
    xi = result.xi
    stations = result.stations
    idx = range(len(stations))
    if x is not None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = [int(np.argmin(np.abs(stations - v))) for v in x]
    xs = stations[list(idx)]
    want = t - xs / CONSTANTS.c
    if np.any(want < xi[0] - 1e-12) or np.any(want > xi[-1] + 1e-12):
        raise DomainError(f"t = {t} ns is not covered by the recorded xi window at every station")
    out = np.empty(len(xs), dtype=complex)
    for j, k in enumerate(idx):
        row = result.fields[k]
        out[j] = np.interp(want[j], xi, row.real) + 1j * np.interp(want[j], xi, row.imag)
    scn = result.scenario
    media = tuple((s.x0, s.x1) for s in getattr(scn, "segments", ()))
    if not media and hasattr(scn, "medium"):
        media = ((scn.medium.x0, scn.medium.x1),)
    return FieldSnapshot(t=float(t), x=xs, omega=out, tau=scn.pulse.tau, media=media)


def with_pulse(scenario: Scenario, **changes) -> Scenario:
    return replace(scenario, pulse=replace(scenario.pulse, **changes))
