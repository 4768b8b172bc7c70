"""Test fixtures for Vibelab."""

from __future__ import annotations

import math
from collections.abc import Callable
from typing import TYPE_CHECKING, Any

import numpy as np
import pytest

from vibelab.config import loads_scenario, with_overrides
from vibelab.control import DetectorThresholds, Quality
from vibelab.data import LabRun, Scenario
from vibelab.dsp import HarmonicSpectrum
from vibelab.exciter import ExciterConfig
from vibelab.plant import PlantConfig, PlantDesign, build_plant_config
from vibelab.protocols import SteadyRecord
from vibelab.rig import ControlConfig, Rig, SamplingConfig

if TYPE_CHECKING:
    from pathlib import Path

F1 = 101.0
D1 = 0.004
DESIGN = PlantDesign(dip_depth=0.06, dip_amplitude=1.0e-3)

RigFactory = Callable[..., Rig]


@pytest.fixture
def linear_plant() -> PlantConfig:
    return build_plant_config(F1, F1 * 1.89, D1, D1 / 10)


@pytest.fixture
def nonlinear_plant() -> PlantConfig:
    return build_plant_config(F1, F1 * 1.84, D1, D1 / 10, DESIGN)


@pytest.fixture
def sampling() -> SamplingConfig:
    return SamplingConfig(rate=5000.0, time_scale=1.0, analysis_fraction=0.5)


@pytest.fixture
def control() -> ControlConfig:
    return ControlConfig(detector=DetectorThresholds(window_periods=30))


@pytest.fixture
def make_rig(sampling: SamplingConfig, control: ControlConfig) -> RigFactory:
    def _make(plant: PlantConfig, **kwargs: object) -> Rig:
        exciter = kwargs.pop("exciter", ExciterConfig())
        return Rig(plant, exciter, control, sampling, **kwargs)  # type: ignore[arg-type]

    return _make


TINY_SCENARIO = """
[scenario]
name = "tiny"
configuration = "linear"
protocols = ["prt", "rct"]

[sampling]
rate = 5000.0

[plant]
f1 = 101.0
frequency_ratio = 1.89

[control.detector]
window_periods = 30

[protocol.prt]
level_min = 0.3
level_max = 0.6
levels = 2
hold = 4.0

[protocol.rct]
level_min = 3.0e-4
level_max = 5.0e-4
levels = 2
phase_min = 80.0
phase_max = 100.0
points = 4
settle = 1.5
timeout = 2.0
"""


@pytest.fixture
def tiny_scenario(tmp_path: Path) -> Scenario:
    return with_overrides(loads_scenario(TINY_SCENARIO), output_dir=tmp_path)


def _steady(protocol: str, omega: float, q1: complex, ab1: complex, **kwargs: Any) -> SteadyRecord:
    response = HarmonicSpectrum(omega, np.array([0, q1, 0], dtype=complex))
    return SteadyRecord(
        protocol=protocol,
        set_phase=math.pi / 2,
        omega=omega,
        phase_lag=math.pi / 2,
        voltage=0.5,
        response=response,
        response_velocity=HarmonicSpectrum(omega, 1j * omega * response.coeffs),
        base=HarmonicSpectrum(omega, np.array([0, ab1, 0], dtype=complex)),
        quality=Quality(0.1, 0.01, 0.1, accepted=True),
        **kwargs,
    )


@pytest.fixture
def synthetic_run(tiny_scenario: Scenario) -> LabRun:
    """PRT records of the linear first mode and RCT points on its Nyquist circle."""
    omega = tiny_scenario.plant.omega1
    run = LabRun(1)
    prt = []
    schedule = [("up", 0), ("up", 1), ("down", 1), ("down", 0)]
    for direction, index in schedule:
        eta = (3e-4, 6e-4)[index]
        accel = 2 * D1 * omega**2 * eta
        q1 = -1j * eta
        prt.append(
            _steady(
                "prt",
                omega,
                q1,
                -accel + 0j,
                direction=direction,
                level_index=index,
                point_index=0,
                level=0.3 * (index + 1),
                modal=(np.array([0, q1, 0]), np.zeros(3, dtype=complex)),
            )
        )
    rct = []
    for k, ratio in enumerate(np.linspace(0.99, 1.01, 6)):
        w = omega * ratio
        base_disp = 3e-6
        frf = w**2 / (omega**2 - w**2 + 2j * D1 * omega * w)
        rct.append(
            _steady(
                "rct",
                w,
                base_disp * frf,
                -(w**2) * base_disp + 0j,
                direction="up",
                level_index=0,
                point_index=k,
                level=4e-4,
            )
        )
    run.records = {"prt": prt, "rct": rct}
    return run
