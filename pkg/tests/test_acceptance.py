"""Acceptance battery at full resolution.

Each test prints one PASS/FAIL line per check so the outcome is visible in the
log even when the assertion passes. The expensive runs are shared through
module-scoped fixtures; the whole file takes several minutes.
"""

import pytest

from fastlight import acceptance as acc
from fastlight.cli import sweep_rows
from fastlight.solver import run

pytestmark = pytest.mark.slow


def _report(checks, capsys):
    with capsys.disabled():
        print()
        for c in checks:
            print("    " + c.line())
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, "\n".join(failed)


@pytest.fixture(scope="module")
def sharp_runs():
    return acc.sharp_oracle_runs(quick=False)


@pytest.fixture(scope="module")
def broad_scenario():
    return acc.reference_scenario()


@pytest.fixture(scope="module")
def broad(broad_scenario):
    return run(broad_scenario)


def test_criterion_1_beer_alpha(capsys):
    _report([acc.check_beer()], capsys)


def test_criterion_2_group_velocity(capsys):
    _report(acc.check_group_velocity(), capsys)


def test_criterion_3_analytic_advance(capsys):
    _report(acc.check_analytic_advance(), capsys)


def test_criterion_4_sharp_line_oracle(sharp_runs, capsys):
    _report(acc.check_sharp_oracle(*sharp_runs), capsys)


def test_criterion_5_broadened_advance_area_ringing(broad, capsys):
    _report(acc.check_broadened_run(broad), capsys)


def test_criterion_6_conservation_causality_reality(sharp_runs, broad, capsys):
    _report(acc.check_properties(sharp_runs[0], "sharp line") + acc.check_properties(broad, "broadened slab"),
            capsys)


def test_criterion_7_fluctuation_robustness(broad_scenario, capsys):
    rows = sweep_rows(broad_scenario, "medium.0.fluct_eps0", [0.0, 1e-4, 1e-3], threads=3)
    _report(acc.check_fluctuations(rows), capsys)


def test_criterion_8_determinism(broad_scenario, broad, capsys):
    again = run(broad_scenario)
    _report([acc.check_determinism(acc.csv_bytes(broad), acc.csv_bytes(again))], capsys)
