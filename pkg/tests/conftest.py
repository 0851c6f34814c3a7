from __future__ import annotations

import dataclasses

import pytest

from eitmem.control import ControlSchedule
from eitmem.grids import GridSpec
from eitmem.model import MediumParams, PulseSpec
from eitmem.scenario import Scenario, default_scenario
from eitmem.solver import simulate

# Scaled-down medium for reference-integrator comparisons: unit light speed
# keeps every stiffness scale within reach of a brute-force time step.
SCALED_OMEGA = 725.5  # rad/s, cos^2(theta) ~= 0.05


def scaled_medium(**overrides) -> MediumParams:
    base = dict(
        g=1.0,
        n_atoms=1.0e7,
        length=1.0,
        cell_diameter=0.1,
        nu_p=1.0,
        gamma_ba=10.0,
        gamma_bc=0.01,
        c=1.0,
    )
    base.update(overrides)
    return MediumParams(**base)


def scaled_pass_scenario() -> Scenario:
    """Every regime check passes with two orders of margin."""
    return Scenario(
        medium=scaled_medium(),
        grid=GridSpec(-2.0, 2.0, 1024),
        pulse=PulseSpec(amplitude=0.2, center_z=-0.5, width=0.1),
        schedule=ControlSchedule(kind="constant", omega=SCALED_OMEGA),
        horizon=4.0,
        snapshot_dt=0.5,
        output_time=4.0,
        label="scaled_pass",
    )


def scaled_violating_scenario() -> Scenario:
    """Pulse ten times shorter than the adiabatic length scale."""
    return Scenario(
        medium=scaled_medium(gamma_ba=1.0e4),
        grid=GridSpec(-0.25, 0.25, 4096),
        pulse=PulseSpec(amplitude=0.2, center_z=-0.1, width=1.58e-3),
        schedule=ControlSchedule(kind="constant", omega=SCALED_OMEGA),
        horizon=2.0,
        snapshot_dt=0.25,
        output_time=2.0,
        label="scaled_violating",
    )


@pytest.fixture(scope="session")
def default_sc() -> Scenario:
    return default_scenario()


@pytest.fixture(scope="session")
def default_result(default_sc):
    return simulate(
        default_sc.medium,
        default_sc.grid,
        default_sc.pulse,
        default_sc.schedule,
        default_sc.horizon,
        default_sc.snapshot_dt,
    )


def medium_with(default: MediumParams, **overrides) -> MediumParams:
    return dataclasses.replace(default, **overrides)
