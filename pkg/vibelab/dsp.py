"""Synchronous demodulation and steady-state harmonic analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .const import DEFAULT_CUTOFF_RATIO, DEFAULT_HARMONICS, LOGGER
from .exceptions import INVALID_FREQUENCY, WINDOW_TOO_SHORT, ValidationError

MIN_PERIODS = 10
TWO_PI = 2 * math.pi


def wrap_phase(x: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - x) % TWO_PI


@dataclass(frozen=True, slots=True)
class DemodResult:
    """Running fundamental amplitude and phase relative to the carrier."""

    amp: float
    phase: float
    carrier_phase: float


@dataclass(slots=True)
class LowpassState:
    """Two cascaded first-order sections per channel.

    The cutoff follows the instantaneous fundamental: ``cutoff_ratio * omega``.
    """

    dt: float
    omega: float
    cutoff_ratio: float = DEFAULT_CUTOFF_RATIO
    i1: float = 0.0
    i2: float = 0.0
    q1: float = 0.0
    q2: float = 0.0

    def reset(self) -> None:
        """Clear the filter memory."""
        self.i1 = self.i2 = self.q1 = self.q2 = 0.0

    def preload(self, amp: float, phase: float) -> None:
        """Start the filters at a known amplitude and phase."""
        self.i1 = self.i2 = amp * math.cos(phase)
        self.q1 = self.q2 = -amp * math.sin(phase)


def demodulate(
    sample: float,
    carrier_phase: float,
    state: LowpassState,
    inst_freq: float | None = None,
) -> DemodResult:
    """Update the running fundamental estimate with one sample."""
    if inst_freq is not None:
        state.omega = inst_freq
    alpha = 1.0 - math.exp(-state.cutoff_ratio * abs(state.omega) * state.dt)
    i_raw = 2.0 * sample * math.cos(carrier_phase)
    q_raw = 2.0 * sample * math.sin(carrier_phase)
    state.i1 += alpha * (i_raw - state.i1)
    state.i2 += alpha * (state.i1 - state.i2)
    state.q1 += alpha * (q_raw - state.q1)
    state.q2 += alpha * (state.q1 - state.q2)
    return DemodResult(
        amp=math.hypot(state.i2, state.q2),
        phase=wrap_phase(math.atan2(-state.q2, state.i2)),
        carrier_phase=carrier_phase,
    )


@dataclass(slots=True)
class HarmonicSpectrum:
    """Complex coefficients q̂_h, h = 0..H, of Re{Σ q̂_h exp(ihΩt)}."""

    omega: float
    coeffs: np.ndarray
    discarded_dc: float = field(default=0.0)

    @property
    def harmonics(self) -> int:
        """Highest harmonic order H."""
        return len(self.coeffs) - 1

    def reconstruct(self, phase: np.ndarray) -> np.ndarray:
        """Evaluate the truncated series at fundamental phase values."""
        h = np.arange(self.harmonics + 1)
        return np.real(np.exp(1j * np.outer(phase, h)) @ self.coeffs)

    def to_dict(self) -> dict[str, object]:
        """JSON form: frequency in Hz and re/im per harmonic."""
        return {
            "freq": self.omega / TWO_PI,
            "re": [float(c.real) for c in self.coeffs],
            "im": [float(c.imag) for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> HarmonicSpectrum:
        """Inverse of :meth:`to_dict`."""
        coeffs = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        return cls(omega=TWO_PI * float(data["freq"]), coeffs=coeffs)


def _trim_to_periods(phase: np.ndarray) -> int:
    """Number of leading samples spanning a whole number of periods."""
    span = phase[-1] - phase[0]
    periods = math.floor(span / TWO_PI + 1e-9)
    if periods < MIN_PERIODS:
        message = f"{WINDOW_TOO_SHORT}: {span / TWO_PI:.2f} periods, need {MIN_PERIODS}"
        raise ValidationError(message)
    end = phase[0] + periods * TWO_PI
    return int(np.searchsorted(phase, end - 1e-12, side="left"))


def fourier_coeffs(
    window: np.ndarray,
    omega: float,
    harmonics: int = DEFAULT_HARMONICS,
    *,
    dt: float | None = None,
    phase: np.ndarray | None = None,
) -> HarmonicSpectrum:
    """Least-squares harmonic coefficients of a steady-state window.

    The fundamental phase is either given per sample (``phase``, e.g. the
    PLL carrier) or built as ``omega * dt * n`` from the first sample. The
    window is cut at its end to a whole number of periods.
    """
    if not (omega > 0 and math.isfinite(omega)):
        message = INVALID_FREQUENCY
        raise ValidationError(message)
    x = np.asarray(window, dtype=float)
    if phase is None:
        if dt is None:
            message = f"{INVALID_FREQUENCY}: dt or phase required"
            raise ValidationError(message)
        theta = omega * dt * np.arange(len(x))
    else:
        theta = np.asarray(phase, dtype=float)
    if len(x) < 2 * harmonics + 2:  # noqa: PLR2004
        message = WINDOW_TOO_SHORT
        raise ValidationError(message)
    n = _trim_to_periods(theta)
    x = x[:n]
    theta = theta[:n]
    columns = [np.ones(n)]
    for h in range(1, harmonics + 1):
        columns.append(np.cos(h * theta))
        columns.append(np.sin(h * theta))
    solution, *_ = np.linalg.lstsq(np.column_stack(columns), x, rcond=None)
    coeffs = np.empty(harmonics + 1, dtype=complex)
    coeffs[0] = solution[0]
    coeffs[1:] = solution[1::2] - 1j * solution[2::2]
    return HarmonicSpectrum(omega=omega, coeffs=coeffs)


def amplitude_metric(spec: HarmonicSpectrum) -> float:
    """Multi-harmonic amplitude, √2 times the RMS of the zero-mean signal."""
    return float(np.sqrt(np.sum(np.abs(spec.coeffs[1:]) ** 2)))


def integrate_velocity(spec: HarmonicSpectrum) -> HarmonicSpectrum:
    """Displacement spectrum from a velocity spectrum, mean removed."""
    if not spec.omega > 0:
        message = INVALID_FREQUENCY
        raise ValidationError(message)
    h = np.arange(1, spec.harmonics + 1)
    coeffs = np.zeros_like(spec.coeffs, dtype=complex)
    coeffs[1:] = spec.coeffs[1:] / (1j * h * spec.omega)
    dc = float(abs(spec.coeffs[0]))
    if dc > 1e-2 * max(amplitude_metric(spec), 1e-300):
        LOGGER.warning("Discarding DC velocity content %.3g", dc)
    return HarmonicSpectrum(omega=spec.omega, coeffs=coeffs, discarded_dc=dc)


def differentiate(spec: HarmonicSpectrum) -> HarmonicSpectrum:
    """Velocity spectrum of a displacement spectrum."""
    h = np.arange(spec.harmonics + 1)
    return HarmonicSpectrum(omega=spec.omega, coeffs=spec.coeffs * (1j * h * spec.omega))


def residual_rms(window: np.ndarray, spec: HarmonicSpectrum, phase: np.ndarray) -> float:
    """RMS of the window minus its reconstruction, relative to the window's AC RMS."""
    x = np.asarray(window, dtype=float)
    error = x - spec.reconstruct(np.asarray(phase, dtype=float))
    ac = x - np.mean(x)
    scale = float(np.sqrt(np.mean(ac**2)))
    return float(np.sqrt(np.mean(error**2))) / scale if scale > 0 else 0.0
