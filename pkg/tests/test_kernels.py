import numpy as np
import pytest

from fastlight import _kernels_py, kernels
from fastlight.model import gauss_hermite_grid
from fastlight.solver import PulseSpec, input_envelope

compiled = pytest.importorskip("fastlight._kernels")


def _inputs(n_nodes=9, n_xi=801, seed=0):
    rng = np.random.default_rng(seed)
    grid = gauss_hermite_grid(0.733, n_nodes)
    xi = np.linspace(-1.0, 1.0, n_xi)
    omega = input_envelope(PulseSpec(0.1), xi) * np.exp(0.3j * xi)
    theta = rng.normal(0, 0.01, n_nodes)
    c1 = 1j * np.sin(theta / 2)
    c2 = np.cos(theta / 2) + 0j
    return grid, xi, omega, c1, c2


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


def test_compiled_matches_fallback():
    grid, xi, omega, c1, c2 = _inputs()
    a = np.empty((len(grid), len(xi)), complex)
    b = np.empty_like(a)
    da = compiled.coherence_rows(omega, xi[1] - xi[0], grid.nodes, c1, c2, a)
    db = _kernels_py.coherence_rows(omega, xi[1] - xi[0], grid.nodes, c1, c2, b)
    assert np.max(np.abs(a - b)) < 1e-12
    assert da == pytest.approx(db, abs=1e-12)
    sa = compiled.weighted_sum(a, grid.weights)
    sb = _kernels_py.weighted_sum(b, grid.weights)
    assert np.max(np.abs(sa - sb)) < 1e-12


def test_compiled_node_range():
    grid, xi, omega, c1, c2 = _inputs()
    full = np.empty((len(grid), len(xi)), complex)
    part = np.zeros_like(full)
    compiled.coherence_rows(omega, xi[1] - xi[0], grid.nodes, c1, c2, full)
    compiled.coherence_rows(omega, xi[1] - xi[0], grid.nodes, c1, c2, part, 2, 5)
    assert np.array_equal(part[2:5], full[2:5])
    assert np.all(part[:2] == 0) and np.all(part[5:] == 0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_reports_nan():
    grid, xi, omega, c1, c2 = _inputs(n_nodes=1, n_xi=11)
    omega = omega.copy()
    omega[3] = np.inf
    rows = np.empty((1, len(xi)), complex)
    assert np.isnan(compiled.coherence_rows(omega, xi[1] - xi[0], grid.nodes, c1, c2, rows))
    assert np.isnan(_kernels_py.coherence_rows(omega, xi[1] - xi[0], grid.nodes, c1, c2, rows))


def test_full_run_backend_equivalence(monkeypatch):
    from fastlight import solver
    from fastlight.model import MediumSegment
    from fastlight.solver import RecordRequest, Scenario, SimGrid, run

    seg = MediumSegment(0.0, 1.0, 266.0, 0.733, n_detuning=5)
    scn = Scenario(PulseSpec(0.1, trunc_halfwidth=25), (seg,), SimGrid(-3.0, 1.0, 0.005, 0.0, 1.0, 0.05),
                   record=RecordRequest(track_points=3))
    fast = run(scn)
    monkeypatch.setattr(solver.kernels, "coherence_rows", _kernels_py.coherence_rows)
    monkeypatch.setattr(solver.kernels, "weighted_sum", _kernels_py.weighted_sum)
    slow = run(scn)
    assert np.max(np.abs(fast.fields - slow.fields)) < 1e-10
