"""Tests for the closed-loop rig."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from vibelab.dsp import TWO_PI
from vibelab.exceptions import ValidationError
from vibelab.exciter import ExciterConfig
from vibelab.plant import PlantConfig
from vibelab.rig import ControlConfig, LoopMode, Rig, SamplingConfig, Setpoint

from .conftest import D1, RigFactory


def test_rejects_coarse_sampling(linear_plant: PlantConfig, control: ControlConfig) -> None:
    with pytest.raises(ValidationError):
        Rig(linear_plant, ExciterConfig(), control, SamplingConfig(rate=100.0))


def test_command_rejects_negative_level(make_rig: RigFactory, linear_plant: PlantConfig) -> None:
    rig = make_rig(linear_plant)
    with pytest.raises(ValidationError, match="invalid_protocol"):
        rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, -1.0))


def test_seconds_follow_time_scale(linear_plant: PlantConfig, control: ControlConfig) -> None:
    sampling = SamplingConfig(rate=5000.0, time_scale=0.2)
    rig = Rig(linear_plant, ExciterConfig(), control, sampling)
    assert rig.seconds(16.0) == pytest.approx(3.2)


def test_window_duration_at_center(make_rig: RigFactory, linear_plant: PlantConfig) -> None:
    rig = make_rig(linear_plant)
    assert rig.center == linear_plant.omega1
    assert rig.window_duration() == pytest.approx(1.05 * 30 * TWO_PI / linear_plant.omega1)


def test_switching_to_closed_loop_is_bumpless(
    make_rig: RigFactory, linear_plant: PlantConfig
) -> None:
    rig = make_rig(linear_plant)
    rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.5))
    rig.command(Setpoint(LoopMode.RESPONSE, math.pi / 2, 1e-3))
    assert rig.amp_state.output == 0.5
    assert rig.control.amplitude.ki * rig.amp_state.integral == pytest.approx(0.5)


def test_reset_keeps_clock_with_drift(make_rig: RigFactory, linear_plant: PlantConfig) -> None:
    rig = make_rig(linear_plant)
    rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.5))
    rig.run(0.05)
    t = rig.t
    assert t == pytest.approx(0.05)
    rig.reset(keep_drift=True)
    assert rig.t == t
    assert rig.voltage == 0.0
    rig.reset()
    assert rig.t == 0.0


def test_capture_shapes(make_rig: RigFactory, linear_plant: PlantConfig) -> None:
    rig = make_rig(linear_plant)
    rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.5))
    assert rig.run(0.01) is None
    capture = rig.run(0.02, record=True)
    assert len(capture) == 100
    assert capture.eta.shape == (2, 100)
    assert capture.eta_dot.shape == (2, 100)
    assert not capture.diverged
    assert np.all(capture.voltage == 0.5)


def test_telemetry_is_decimated(make_rig: RigFactory, linear_plant: PlantConfig) -> None:
    samples: list[tuple[float, ...]] = []
    rig = make_rig(linear_plant, telemetry=samples.append, telemetry_decimation=10)
    rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.5))
    rig.run(0.1)
    assert len(samples) == 50
    assert all(len(s) == 5 for s in samples)
    assert samples[-1][0] == pytest.approx(0.1)


def test_noise_is_seeded(make_rig: RigFactory, linear_plant: PlantConfig) -> None:
    captures = []
    for _ in range(2):
        rig = make_rig(linear_plant, noise_level=0.01, seed=7)
        rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.5))
        captures.append(rig.run(0.05, record=True))
    np.testing.assert_array_equal(captures[0].displacement, captures[1].displacement)


@pytest.mark.slow
def test_divergence_resets_plant(
    make_rig: RigFactory, linear_plant: PlantConfig, caplog: pytest.LogCaptureFixture
) -> None:
    rig = make_rig(linear_plant)
    # Saturated drive settles near 0.06 m, past the divergence limit.
    rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, 100.0))
    with caplog.at_level(logging.WARNING):
        capture = rig.run(3.0, record=True)
    assert capture.diverged
    assert len(capture) < 3.0 * 5000
    assert rig.voltage == 100.0
    assert "diverged" in caplog.text


@pytest.mark.slow
def test_phase_resonance_on_linear_plant(make_rig: RigFactory, linear_plant: PlantConfig) -> None:
    rig = make_rig(linear_plant)
    rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.5))
    rig.run(3.0)
    capture = rig.run(1.0, record=True)
    omega = linear_plant.omega1
    assert capture.mean_freq == pytest.approx(omega, rel=1e-4)
    expected = linear_plant.b_factors[0] * 4.0 * 0.5 / (2 * D1 * omega**2)
    assert float(np.mean(capture.amp)) == pytest.approx(expected, rel=5e-2)
    assert rig.assess(capture).accepted
