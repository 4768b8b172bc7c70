"""Tests for the shaker model."""

from __future__ import annotations

import math

import numpy as np
import pytest

from vibelab.exceptions import ValidationError
from vibelab.exciter import Exciter, ExciterConfig

DT = 1e-4


def _settle(exciter: Exciter, voltage: float, steps: int = 2000) -> float:
    out = 0.0
    for k in range(steps):
        out = exciter.drive(voltage, k * DT)
    return out


@pytest.mark.parametrize(
    "kwargs",
    [{"gain": 0.0}, {"pole_freq": -1.0}, {"sat_level": 0.0}, {"drift_rate": math.nan}],
)
def test_invalid_config(kwargs: dict) -> None:
    with pytest.raises(ValidationError):
        ExciterConfig(**kwargs)


def test_dc_gain() -> None:
    exciter = Exciter(ExciterConfig(gain=4.0, sat_level=math.inf), DT)
    assert _settle(exciter, 0.5) == pytest.approx(2.0, rel=1e-9)


def test_pole_is_minus_three_db() -> None:
    pole = 200.0
    exciter = Exciter(ExciterConfig(gain=1.0, pole_freq=pole, sat_level=math.inf), DT)
    n = 20000
    t = np.arange(n) * DT
    out = np.array([exciter.drive(math.sin(2 * math.pi * pole * tk), tk) for tk in t])
    tail = out[n // 2 :]
    assert np.max(np.abs(tail)) == pytest.approx(1 / math.sqrt(2), rel=2e-3)


def test_saturation_is_soft_and_bounded() -> None:
    exciter = Exciter(ExciterConfig(gain=10.0, sat_level=50.0), DT)
    out = _settle(exciter, 10.0)
    assert out < 50.0
    assert out == pytest.approx(50.0 * math.tanh(100.0 / 50.0))


def test_drift_changes_gain_over_time() -> None:
    cfg = ExciterConfig(gain=2.0, drift_rate=-0.01, drift_enabled=True)
    exciter = Exciter(cfg, DT)
    assert exciter.effective_gain(5.0) == 2.0
    exciter.drive(0.0, 1.0)
    assert exciter.effective_gain(11.0) == pytest.approx(2.0 * 0.9)


def test_drift_disabled_ignores_rate() -> None:
    exciter = Exciter(ExciterConfig(gain=2.0, drift_rate=-0.01), DT)
    exciter.drive(0.0, 0.0)
    assert exciter.effective_gain(100.0) == 2.0


def test_reset_lag_keeps_drift_clock() -> None:
    cfg = ExciterConfig(drift_rate=0.01, drift_enabled=True, sat_level=math.inf)
    exciter = Exciter(cfg, DT)
    _settle(exciter, 1.0)
    exciter.reset_lag()
    assert exciter.drive(0.0, 10.0) == 0.0
    assert exciter.effective_gain(10.0) == pytest.approx(cfg.gain * 1.1)
    exciter.reset()
    assert exciter.effective_gain(10.0) == cfg.gain


def test_non_finite_voltage_rejected() -> None:
    exciter = Exciter(ExciterConfig(), DT)
    with pytest.raises(ValidationError):
        exciter.drive(math.inf, 0.0)


def test_as_dict_maps_infinite_saturation() -> None:
    assert ExciterConfig(sat_level=math.inf).as_dict()["sat_level"] is None
    assert ExciterConfig(sat_level=5.0).as_dict()["sat_level"] == 5.0
