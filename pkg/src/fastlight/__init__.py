"""Fast-light pulse propagation through finite inverted two-level gain media."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    CONSTANTS,
    DetuningGrid,
    FieldSnapshot,
    MediumSegment,
    PulseSpec,
    SimulationResult,
    beer_alpha,
    coupling_constant,
    gauss_hermite_grid,
    group_velocity,
    phase_offsets,
)
from .analytic import AnalyticScenario, analytic_amplitudes, analytic_field, analytic_snapshot  # noqa: E402
from .solver import RecordRequest, Scenario, SimGrid, default_grid, run  # noqa: E402

__all__ = [
    "CONSTANTS", "DetuningGrid", "FieldSnapshot", "MediumSegment", "PulseSpec", "SimulationResult",
    "beer_alpha", "coupling_constant", "gauss_hermite_grid", "group_velocity", "phase_offsets",
    "AnalyticScenario", "analytic_amplitudes", "analytic_field", "analytic_snapshot",
    "RecordRequest", "Scenario", "SimGrid", "default_grid", "run",
]
