"""Shared fixtures: reference configurations, cached simulator runs and the
coarse calibration used by both the module tests and the acceptance suite."""

from __future__ import annotations

import numpy as np
import pytest

from crowbarsim.calibration import SweepGrid, run_calibration
from crowbarsim.core import Topology, reference_supply
from crowbarsim.fusewire import FuseWireMaterial
from crowbarsim.rectifier_sim import SimConfig, simulate

_ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE_LINES.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE_LINES:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}: {detail}")


@pytest.fixture(scope="session")
def copper():
    return FuseWireMaterial.copper()


@pytest.fixture(scope="session")
def ref_parallel():
    return reference_supply(Topology.PARALLEL)


@pytest.fixture(scope="session")
def ref_series():
    return reference_supply(Topology.SERIES)


@pytest.fixture(scope="session")
def bolted_traces(ref_parallel):
    """Bolted-fault oracle runs at two step sizes (convergence checks)."""
    cfg = SimConfig(
        system=ref_parallel,
        include_dc_cap=False,
        r_load_override=0.0,
        fault_angle=0.0,
        duration=0.1,
    )
    fine = SimConfig(
        system=ref_parallel,
        include_dc_cap=False,
        r_load_override=0.0,
        fault_angle=0.0,
        duration=0.1,
        dt=5e-6,
    )
    return simulate(cfg), simulate(fine)


@pytest.fixture(scope="session")
def full_sim_parallel(ref_parallel):
    return simulate(SimConfig(system=ref_parallel, fault_angle=0.0, duration=0.105))


@pytest.fixture(scope="session")
def full_sim_series(ref_series):
    return simulate(SimConfig(system=ref_series, fault_angle=0.0, duration=0.103))


@pytest.fixture(scope="session")
def coarse_grid():
    return SweepGrid(
        x_r_trx=(2.5, 5.0, 10.0, 15.0),
        r_load=tuple(float(x) for x in np.geomspace(5.0, 300.0, 6)),
    )


@pytest.fixture(scope="session")
def coarse_calibration(coarse_grid):
    """Full calibration on the coarse grid; the expensive session fixture."""
    return run_calibration(coarse_grid, tol=0.1, include_tp_sweep=False)
