"""Parameter types, unit conventions and closed-form derived quantities.

Units throughout: time in ns, length in cm, Rabi frequencies in ns^-1 and the
atom-field coupling ``g`` in ns^-2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class FastLightError(Exception):
    """Base class for all package errors."""


class DomainError(FastLightError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SingularGroupVelocityError(FastLightError, ArithmeticError):
    """``1 - c/v_g`` is numerically 1, so the group velocity diverges."""


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 29.9792458  # cm/ns
    hbar: float = 1.054571817e-34  # J s
    epsilon0: float = 8.8541878128e-12  # F/m


CONSTANTS = PhysicalConstants()
C_CM_PER_NS = CONSTANTS.c

EDGE_KINDS = ("hard", "cosine_ramp")


@dataclass(frozen=True)
class PulseSpec:
    """Input probe: a ``amplitude * sech((xi - t_peak)/tau)`` envelope, optionally truncated.

    ``trunc_halfwidth`` and ``ramp_len`` are in units of ``tau``. ``amplitude``
    defaults to ``2/tau``, the exact 2-pi sech pulse.
    """

    tau: float
    amplitude: float | None = None
    t_peak: float = 0.0
    trunc_halfwidth: float = math.inf
    edge: str = "hard"
    ramp_len: float = 0.0

    def __post_init__(self):
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", 2.0 / self.tau if self.tau > 0 else math.nan)
        if not self.tau > 0:
            raise DomainError(f"pulse.tau must be > 0, got {self.tau}")
        if not self.amplitude > 0:
            raise DomainError(f"pulse.amplitude must be > 0, got {self.amplitude}")
        if not self.trunc_halfwidth > 0:
            raise DomainError(f"pulse.trunc_halfwidth must be > 0, got {self.trunc_halfwidth}")
        if self.edge not in EDGE_KINDS:
            raise DomainError(f"pulse.edge must be one of {EDGE_KINDS}, got {self.edge!r}")
        if self.edge == "cosine_ramp":
            if not 0 < self.ramp_len <= self.trunc_halfwidth:
                raise DomainError("pulse.ramp_len must satisfy 0 < ramp_len <= trunc_halfwidth")

    @property
    def truncated(self) -> bool:
        return math.isfinite(self.trunc_halfwidth)

    @property
    def front(self) -> float:
        """Retarded time of the leading edge (``-inf`` when untruncated)."""
        return self.t_peak - self.trunc_halfwidth * self.tau


@dataclass(frozen=True)
class MediumSegment:
    """One slab of inverted two-level atoms between ``x0`` and ``x1`` (cm).

    ``t2star = inf`` is a sharp line and always uses a single detuning node.
    """

    x0: float
    x1: float
    g: float
    t2star: float = math.inf
    n_detuning: int = 41
    init_c1: complex = 0j
    init_c2: complex = 1 + 0j
    fluct_eps0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "init_c1", complex(self.init_c1))
        object.__setattr__(self, "init_c2", complex(self.init_c2))
        if not self.x1 > self.x0:
            raise DomainError(f"segment needs x1 > x0, got [{self.x0}, {self.x1}]")
        if not self.g >= 0:
            raise DomainError(f"segment coupling g must be >= 0, got {self.g}")
        if not self.t2star > 0:
            raise DomainError(f"t2star must be > 0 or infinite, got {self.t2star}")
        if self.n_detuning < 1 or self.n_detuning % 2 == 0:
            raise DomainError(f"n_detuning must be odd and >= 1, got {self.n_detuning}")
        norm = abs(self.init_c1) ** 2 + abs(self.init_c2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"initial amplitudes must be normalised, |c1|^2+|c2|^2 = {norm}")
        if not self.fluct_eps0 >= 0:
            raise DomainError(f"fluct_eps0 must be >= 0, got {self.fluct_eps0}")

    @property
    def sharp(self) -> bool:
        return math.isinf(self.t2star)

    @property
    def length(self) -> float:
        return self.x1 - self.x0

    def detuning_grid(self) -> "DetuningGrid":
        return gauss_hermite_grid(self.t2star, 1 if self.sharp else self.n_detuning)


@dataclass(frozen=True)
class DetuningGrid:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        weights = np.ascontiguousarray(self.weights, dtype=float)
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.nodes)

    @classmethod
    def sharp_line(cls) -> "DetuningGrid":
        return cls(np.zeros(1), np.ones(1))


class GroupVelocity(NamedTuple):
    one_minus_c_over_vg: float
    vg_over_c: float


def coupling_constant(N: float, mu: float, omega: float) -> float:
    """Atom-field coupling ``g = N mu^2 omega / (epsilon0 hbar)`` in ns^-2.

    Inputs are SI: density in m^-3, dipole moment in C m, angular frequency in rad/s.
    """
    for name, value in (("N", N), ("mu", mu), ("omega", omega)):
        if not value >= 0:
            raise DomainError(f"{name} must be >= 0, got {value}")
    g_per_s2 = N * mu**2 * omega / (CONSTANTS.epsilon0 * CONSTANTS.hbar)
    return g_per_s2 * 1e-18


def beer_alpha(g: float, t2star: float) -> float:
    """Inverse Beer length ``sqrt(pi/2) g T2* / c`` (cm^-1) of the broadened medium."""
    if not g >= 0:
        raise DomainError(f"g must be >= 0, got {g}")
    if math.isinf(t2star):
        raise DomainError("Beer coefficient is undefined for a sharp line (t2star = inf)")
    if not t2star > 0:
        raise DomainError(f"t2star must be > 0, got {t2star}")
    return math.sqrt(math.pi / 2.0) * g * t2star / CONSTANTS.c


def group_velocity(g: float, tau: float, grid: DetuningGrid) -> GroupVelocity:
    """Group velocity of a ``tau``-wide sech pulse from the detuning-averaged dispersion."""
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    nodes = np.asarray(grid.nodes)
    weights = np.asarray(grid.weights)
    k = 0.5 * g * float(np.sum(weights / (nodes**2 + 1.0 / tau**2)))
    if abs(1.0 - k) < 1e-9:
        raise SingularGroupVelocityError(f"1 - c/v_g = {k} is singular (v_g -> infinity)")
    return GroupVelocity(k, 1.0 / (1.0 - k))


def phase_offsets(
    g: float,
    tau: float,
    x0: float,
    x1: float,
    one_minus_c_over_vg: float | None = None,
) -> tuple[float, float]:
    """Entry and exit time offsets ``(phi0, phi1)`` in ns.

    By default the long-T2* dispersion ``g tau^2 / 2`` is used. Pass the
    broadened ``1 - c/v_g`` to get the offsets that keep the segmented solution
    continuous for that group velocity.
    """
    if x1 < x0:
        raise DomainError(f"phase offsets need x1 >= x0, got [{x0}, {x1}]")
    k = 0.5 * g * tau**2 if one_minus_c_over_vg is None else one_minus_c_over_vg
    phi0 = -k * x0 / CONSTANTS.c
    phi1 = k * (x1 - x0) / CONSTANTS.c
    return phi0, phi1


def gauss_hermite_grid(t2star: float, n: int) -> DetuningGrid:
    """Discretise the Gaussian detuning distribution with ``n`` Gauss-Hermite nodes.

    The node set is symmetrised exactly so that the centre node is 0 and
    ``nodes[i] == -nodes[-1-i]``.
    """
    if n < 1 or n % 2 == 0:
        raise DomainError(f"detuning node count must be odd and >= 1, got {n}")
    if math.isinf(t2star) or n == 1:
        return DetuningGrid.sharp_line()
    if not t2star > 0:
        raise DomainError(f"t2star must be > 0, got {t2star}")
    u, w = np.polynomial.hermite.hermgauss(n)
    u = 0.5 * (u - u[::-1])
    w = 0.5 * (w + w[::-1])
    u[n // 2] = 0.0
    return DetuningGrid(math.sqrt(2.0) * u / t2star, w / math.sqrt(math.pi))


@dataclass(frozen=True)
class FieldSnapshot:
    """Lab-frame field ``omega(x)`` at time ``t``; ``media`` holds slab bounds for shading."""

    t: float
    x: np.ndarray
    omega: np.ndarray
    tau: float
    media: tuple[tuple[float, float], ...] = ()

    @property
    def x_over_ctau(self) -> np.ndarray:
        return np.asarray(self.x) / (CONSTANTS.c * self.tau)


@dataclass
class SimulationResult:
    """Recorded fields of one run.

    ``stations`` and ``fields`` are the dense retarded-frame record: row ``k``
    of ``fields`` is ``omega(xi)`` at ``x = stations[k]``. ``retarded`` maps the
    explicitly requested stations to their rows, ``lab`` maps requested times
    to lab-frame snapshots.
    """

    scenario: object
    xi: np.ndarray
    stations: np.ndarray
    fields: np.ndarray
    retarded: dict = field(default_factory=dict)
    lab: dict = field(default_factory=dict)
    seed: int | None = None
    dx: float | None = None
    max_norm_deviation: float = 0.0
    backend: str = ""
    metrics: object = None

    @property
    def d_xi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    @property
    def exit_field(self) -> np.ndarray:
        return self.fields[-1]

    @property
    def input_field(self) -> np.ndarray:
        return self.fields[0]
