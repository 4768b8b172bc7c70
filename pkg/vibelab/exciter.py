"""Shaker and amplifier model: voltage command to base acceleration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .const import DEFAULT_DRIFT_RATE, DEFAULT_GAIN, DEFAULT_POLE_FREQ, DEFAULT_SAT_LEVEL
from .exceptions import INVALID_EXCITER, NON_FINITE_INPUT, ValidationError


@dataclass(frozen=True, slots=True)
class ExciterConfig:
    """Static gain in (m/s²)/V, amplifier pole in Hz, soft saturation in m/s²."""

    gain: float = DEFAULT_GAIN
    pole_freq: float = DEFAULT_POLE_FREQ
    sat_level: float = DEFAULT_SAT_LEVEL
    drift_rate: float = DEFAULT_DRIFT_RATE
    drift_enabled: bool = False

    def __post_init__(self) -> None:
        """Validate on construction."""
        if not (self.gain > 0 and self.pole_freq > 0 and self.sat_level > 0):
            message = f"{INVALID_EXCITER}: gain, pole_freq and sat_level must be positive"
            raise ValidationError(message)
        if math.isnan(self.drift_rate) or math.isinf(self.drift_rate):
            message = NON_FINITE_INPUT
            raise ValidationError(message)

    def as_dict(self) -> dict[str, object]:
        """Serialize for reports; an infinite saturation level becomes None."""
        data = asdict(self)
        if math.isinf(self.sat_level):
            data["sat_level"] = None
        return data


class Exciter:
    """Discrete first-order lag with gain drift and tanh saturation.

    The lag is the bilinear transform of 1/(1 + s/ω_p) prewarped at the pole,
    so the discrete response is exactly -3 dB at ``pole_freq``.
    """

    def __init__(self, config: ExciterConfig, dt: float) -> None:
        """Bind the exciter to a fixed sample time."""
        if not dt > 0:
            message = f"{INVALID_EXCITER}: dt must be positive"
            raise ValidationError(message)
        self.config = config
        self.dt = dt
        c = math.tan(math.pi * config.pole_freq * dt)
        self._b0 = c / (1 + c)
        self._a1 = (1 - c) / (1 + c)
        self._x_prev = 0.0
        self._y_prev = 0.0
        self._t_origin: float | None = None

    def effective_gain(self, t: float) -> float:
        """Gain at time ``t`` including drift."""
        cfg = self.config
        if not cfg.drift_enabled or self._t_origin is None:
            return cfg.gain
        return cfg.gain * (1 + cfg.drift_rate * (t - self._t_origin))

    def drive(self, voltage: float, t: float) -> float:
        """Return the base acceleration for this sample's voltage."""
        if not math.isfinite(voltage):
            message = NON_FINITE_INPUT
            raise ValidationError(message)
        if self._t_origin is None:
            self._t_origin = t
        x = self.effective_gain(t) * voltage
        y = self._b0 * (x + self._x_prev) + self._a1 * self._y_prev
        self._x_prev = x
        self._y_prev = y
        sat = self.config.sat_level
        if math.isinf(sat):
            return y
        return sat * math.tanh(y / sat)

    def reset_lag(self) -> None:
        """Clear the filter memory but keep the drift clock running."""
        self._x_prev = 0.0
        self._y_prev = 0.0

    def reset(self) -> None:
        """Return to the initial state."""
        self.reset_lag()
        self._t_origin = None
