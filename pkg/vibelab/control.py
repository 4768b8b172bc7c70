"""Discrete PI, phase-locked loop and steady-state detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .const import (
    DEFAULT_AMP_DEV,
    DEFAULT_FREQ_STD,
    DEFAULT_PHASE_STD,
    DEFAULT_WINDOW_PERIODS,
)
from .dsp import TWO_PI, wrap_phase
from .exceptions import INVALID_GAINS, INVALID_TARGET, WINDOW_TOO_SHORT, ValidationError


@dataclass(frozen=True, slots=True)
class PiGains:
    """Proportional and integral gains with output saturation."""

    kp: float
    ki: float
    out_min: float = -math.inf
    out_max: float = math.inf
    anti_windup: bool = True

    def __post_init__(self) -> None:
        """Validate on construction."""
        if not self.out_min < self.out_max:
            message = f"{INVALID_GAINS}: out_min must be below out_max"
            raise ValidationError(message)
        if not (math.isfinite(self.kp) and math.isfinite(self.ki)):
            message = INVALID_GAINS
            raise ValidationError(message)


@dataclass(slots=True)
class PiState:
    """Integrator memory and last output."""

    integral: float = 0.0
    output: float = 0.0

    def preload(self, output: float, gains: PiGains) -> None:
        """Set the integrator so that a zero error reproduces ``output``."""
        self.integral = output / gains.ki if gains.ki else 0.0
        self.output = output


def pi_step(err: float, state: PiState, gains: PiGains, dt: float) -> float:
    """Advance the controller by one sample and return the saturated output."""
    if not dt > 0:
        message = f"{INVALID_GAINS}: dt must be positive"
        raise ValidationError(message)
    candidate = state.integral + err * dt
    raw = gains.kp * err + gains.ki * candidate
    out = min(max(raw, gains.out_min), gains.out_max)
    saturated = out != raw
    # Conditional integration: hold the integrator while the error pushes
    # further into the active limit.
    if not (gains.anti_windup and saturated and err * (raw - out) > 0):
        state.integral = candidate
    state.output = out
    return out


def pll_gains(kp: float, ki: float, center: float, freq_limit: float) -> PiGains:
    """PI gains for the phase loop, output bounded to ±freq_limit·center."""
    if not (center > 0 and freq_limit > 0):
        message = f"{INVALID_GAINS}: center frequency and limit must be positive"
        raise ValidationError(message)
    return PiGains(kp=kp, ki=ki, out_min=-freq_limit * center, out_max=freq_limit * center)


@dataclass(slots=True)
class PllState:
    """Phase-locked loop state; the carrier is the integral of inst_freq."""

    center: float
    inst_freq: float = 0.0
    carrier_phase: float = 0.0
    phase_error: float = 0.0
    integrator: PiState = field(default_factory=PiState)

    def __post_init__(self) -> None:
        """Start at the center frequency."""
        if not self.inst_freq:
            self.inst_freq = self.center


def pll_step(
    response_phase_lag: float,
    target_lag: float,
    state: PllState,
    gains: PiGains,
    dt: float,
) -> tuple[float, float]:
    """Correct the instantaneous frequency from the phase error and advance the carrier."""
    state.phase_error = wrap_phase(target_lag - response_phase_lag)
    state.inst_freq = state.center + pi_step(state.phase_error, state.integrator, gains, dt)
    state.carrier_phase += state.inst_freq * dt
    return state.carrier_phase, state.inst_freq


def amplitude_controller_step(
    measured_amp: float,
    target_amp: float,
    state: PiState,
    gains: PiGains,
    dt: float,
) -> float:
    """Voltage amplitude command from the amplitude error, clamped to [0, out_max]."""
    if not target_amp > 0:
        message = INVALID_TARGET
        raise ValidationError(message)
    bounded = gains if gains.out_min >= 0 else PiGains(
        gains.kp, gains.ki, 0.0, gains.out_max, gains.anti_windup
    )
    return pi_step(target_amp - measured_amp, state, bounded, dt)


# --- Steady-state detection ---


@dataclass(frozen=True, slots=True)
class DetectorThresholds:
    """Acceptance limits: percent, Hz and degrees."""

    amp_dev: float = DEFAULT_AMP_DEV
    freq_std: float = DEFAULT_FREQ_STD
    phase_std: float = DEFAULT_PHASE_STD
    window_periods: int = DEFAULT_WINDOW_PERIODS


@dataclass(frozen=True, slots=True)
class Quality:
    """Window statistics and the verdict against the thresholds."""

    amp_dev: float
    freq_std: float
    phase_std: float
    accepted: bool

    def passes(self, thresholds: DetectorThresholds) -> bool:
        """Strict-inequality check of all three statistics."""
        return (
            self.amp_dev < thresholds.amp_dev
            and self.freq_std < thresholds.freq_std
            and self.phase_std < thresholds.phase_std
        )

    def with_verdict(self, thresholds: DetectorThresholds) -> Quality:
        """Copy with ``accepted`` recomputed for other thresholds."""
        return Quality(self.amp_dev, self.freq_std, self.phase_std, self.passes(thresholds))


def steady_state_detector(  # noqa: PLR0913
    amp: np.ndarray,
    inst_freq: np.ndarray,
    phase_error: np.ndarray,
    thresholds: DetectorThresholds,
    *,
    dt: float,
    reference: float | None = None,
) -> Quality:
    """Statistics of a running window and whether it counts as steady.

    amp_dev is the largest deviation of the amplitude from ``reference``
    (the set value; the window mean when None) in percent. freq_std is in Hz
    and phase_std in degrees.
    """
    amp = np.asarray(amp, dtype=float)
    inst_freq = np.asarray(inst_freq, dtype=float)
    phase_error = np.asarray(phase_error, dtype=float)
    periods = float(np.mean(inst_freq)) * dt * len(inst_freq) / TWO_PI
    if periods < thresholds.window_periods * (1 - 1e-9):
        message = f"{WINDOW_TOO_SHORT}: {periods:.1f} periods, need {thresholds.window_periods}"
        raise ValidationError(message)
    ref = float(np.mean(amp)) if reference is None else reference
    amp_dev = 100.0 * float(np.max(np.abs(amp - ref))) / ref if ref > 0 else math.inf
    quality = Quality(
        amp_dev=amp_dev,
        freq_std=float(np.std(inst_freq)) / TWO_PI,
        phase_std=math.degrees(float(np.std(phase_error))),
        accepted=False,
    )
    return quality.with_verdict(thresholds)
