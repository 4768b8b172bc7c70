"""Closed-loop virtual test rig: exciter, plant, sensors and controllers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np

from .const import (
    DEFAULT_AMP_KI,
    DEFAULT_AMP_KP,
    DEFAULT_ANALYSIS_FRACTION,
    DEFAULT_CUTOFF_RATIO,
    DEFAULT_EXC_KI,
    DEFAULT_EXC_KP,
    DEFAULT_HARMONICS,
    DEFAULT_PLL_FREQ_LIMIT,
    DEFAULT_PLL_KI,
    DEFAULT_PLL_KP,
    DEFAULT_RATE,
    DEFAULT_TIME_SCALE,
    DEFAULT_V_MAX,
    LOGGER,
)
from .control import (
    DetectorThresholds,
    PiGains,
    PiState,
    PllState,
    Quality,
    amplitude_controller_step,
    pll_gains,
    pll_step,
    steady_state_detector,
)
from .dsp import (
    HarmonicSpectrum,
    LowpassState,
    demodulate,
    fourier_coeffs,
    integrate_velocity,
    wrap_phase,
)
from .exceptions import INVALID_PROTOCOL, ValidationError
from .exciter import Exciter, ExciterConfig
from .plant import PlantConfig, _rk4, check_time_step

if TYPE_CHECKING:
    from collections.abc import Callable

DIVERGENCE_LIMIT = 0.05


class LoopMode(StrEnum):
    """Which amplitude quantity the outer loop holds."""

    VOLTAGE = "voltage"
    RESPONSE = "response"
    EXCITATION = "excitation"


@dataclass(frozen=True, slots=True)
class SamplingConfig:
    """Sample rate in Hz and analysis settings."""

    rate: float = DEFAULT_RATE
    harmonics: int = DEFAULT_HARMONICS
    cutoff_ratio: float = DEFAULT_CUTOFF_RATIO
    time_scale: float = DEFAULT_TIME_SCALE
    analysis_fraction: float = DEFAULT_ANALYSIS_FRACTION

    @property
    def dt(self) -> float:
        """Sample time in s."""
        return 1.0 / self.rate


@dataclass(frozen=True, slots=True)
class PllConfig:
    """Phase loop gains; ``center`` in rad/s, None uses the plant's first mode."""

    kp: float = DEFAULT_PLL_KP
    ki: float = DEFAULT_PLL_KI
    freq_limit: float = DEFAULT_PLL_FREQ_LIMIT
    center: float | None = None


@dataclass(frozen=True, slots=True)
class ControlConfig:
    """All loop gains plus the steady-state thresholds."""

    pll: PllConfig = field(default_factory=PllConfig)
    amplitude: PiGains = field(
        default_factory=lambda: PiGains(DEFAULT_AMP_KP, DEFAULT_AMP_KI, 0.0, DEFAULT_V_MAX)
    )
    excitation: PiGains = field(
        default_factory=lambda: PiGains(DEFAULT_EXC_KP, DEFAULT_EXC_KI, 0.0, DEFAULT_V_MAX)
    )
    detector: DetectorThresholds = field(default_factory=DetectorThresholds)


@dataclass(frozen=True, slots=True)
class Setpoint:
    """Commanded phase lag (rad) and level (V, m or m/s² by mode)."""

    mode: LoopMode
    phase: float
    level: float


@dataclass(slots=True)
class Capture:
    """Recorded samples of one analysis window."""

    carrier: np.ndarray
    displacement: np.ndarray
    velocity: np.ndarray
    base_accel: np.ndarray
    eta: np.ndarray
    eta_dot: np.ndarray
    inst_freq: np.ndarray
    phase_error: np.ndarray
    lag: np.ndarray
    amp: np.ndarray
    voltage: np.ndarray
    diverged: bool = False

    def __len__(self) -> int:
        """Number of samples."""
        return len(self.carrier)

    @property
    def mean_freq(self) -> float:
        """Mean instantaneous frequency in rad/s."""
        return float(np.mean(self.inst_freq))

    def spectrum(self, signal: np.ndarray, harmonics: int) -> HarmonicSpectrum:
        """Harmonic coefficients of a recorded signal against the carrier."""
        return fourier_coeffs(signal, self.mean_freq, harmonics, phase=self.carrier)

    def response_spectra(self, harmonics: int) -> tuple[HarmonicSpectrum, HarmonicSpectrum]:
        """(velocity spectrum, displacement spectrum integrated from it)."""
        velocity = self.spectrum(self.velocity, harmonics)
        return velocity, integrate_velocity(velocity)

    def modal_spectra(self, harmonics: int) -> tuple[np.ndarray, np.ndarray]:
        """Complex modal coefficients η̂_m(h)."""
        return (
            self.spectrum(self.eta[0], harmonics).coeffs,
            self.spectrum(self.eta[1], harmonics).coeffs,
        )


class Rig:
    """Sample-by-sample closed loop with a persistent plant and controller state.

    The carrier phase drives the voltage, V(t) = V̂ cos(φ_c). The measured
    phase lag is that of the relative displacement behind the base velocity,
    wrap(φ_a - φ_q - π), and equals π/2 at phase resonance.
    """

    def __init__(  # noqa: PLR0913
        self,
        plant: PlantConfig,
        exciter: ExciterConfig,
        control: ControlConfig,
        sampling: SamplingConfig,
        *,
        noise_level: float = 0.0,
        seed: int = 0,
        telemetry: Callable[[tuple[float, float, float, float, float]], None] | None = None,
        telemetry_decimation: int = 1,
    ) -> None:
        """Build the loop at rest."""
        dt = sampling.dt
        check_time_step(dt, plant)
        self.plant = plant
        self.control = control
        self.sampling = sampling
        self.dt = dt
        self.exciter = Exciter(exciter, dt)
        self.center = control.pll.center or plant.omega1
        self.pll_gains = pll_gains(
            control.pll.kp, control.pll.ki, self.center, control.pll.freq_limit
        )
        self.noise_level = noise_level
        self._rng = np.random.default_rng(seed)
        self._coeffs = plant.coefficients()
        self.telemetry = telemetry
        self.telemetry_decimation = max(1, telemetry_decimation)
        self.setpoint = Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.0)
        self.t = 0.0
        self.reset()

    def reset(self, *, keep_drift: bool = False) -> None:
        """Plant at rest and controllers cleared.

        With ``keep_drift`` the clock and the exciter drift carry on, as
        between repeated runs on a warming shaker.
        """
        self._y = (0.0, 0.0, 0.0, 0.0)
        self._qb = 0.0
        self._step = 0
        self.voltage = 0.0
        self.setpoint = Setpoint(LoopMode.VOLTAGE, math.pi / 2, 0.0)
        if keep_drift:
            self.exciter.reset_lag()
        else:
            self.t = 0.0
            self.exciter.reset()
        self._reset_loops()

    def _reset_loops(self) -> None:
        self.pll = PllState(center=self.center)
        self.amp_state = PiState()
        self.resp_lp = LowpassState(self.dt, self.center, self.sampling.cutoff_ratio)
        self.base_lp = LowpassState(self.dt, self.center, self.sampling.cutoff_ratio)

    def command(self, setpoint: Setpoint) -> None:
        """Change the set values; controller states carry over."""
        if not (setpoint.level >= 0 and math.isfinite(setpoint.level)):
            message = f"{INVALID_PROTOCOL}: level must be finite and non-negative"
            raise ValidationError(message)
        if setpoint.mode is LoopMode.VOLTAGE:
            self.voltage = setpoint.level
        elif setpoint.mode != self.setpoint.mode:
            self.amp_state.preload(self.voltage, self._outer_gains(setpoint.mode))
        self.setpoint = setpoint

    def _outer_gains(self, mode: LoopMode) -> PiGains:
        if mode is LoopMode.RESPONSE:
            return self.control.amplitude
        return self.control.excitation

    def seconds(self, nominal: float) -> float:
        """Hold duration after time compression."""
        return nominal * self.sampling.time_scale

    def run(  # noqa: C901, PLR0915
        self, duration: float, *, record: bool = False
    ) -> Capture | None:
        """Advance the closed loop; return the samples when ``record`` is set.

        A state leaving the plausible range ends the run early: the plant and
        controllers are reset and the capture is flagged as diverged.
        """
        steps = max(1, round(duration / self.dt))
        dt = self.dt
        c = self._coeffs
        e1f, e2f = self.plant.e_factors
        exciter = self.exciter
        pll = self.pll
        gains = self.pll_gains
        resp_lp, base_lp = self.resp_lp, self.base_lp
        mode = self.setpoint.mode
        target_phase = self.setpoint.phase
        level = self.setpoint.level
        outer = self._outer_gains(mode)
        noise = (
            self._rng.standard_normal((2, steps)) * self.noise_level
            if self.noise_level > 0
            else None
        )
        telemetry = self.telemetry
        decimation = self.telemetry_decimation
        y, qb, t = self._y, self._qb, self.t
        buffers: list[list[float]] = [[] for _ in range(13)]
        diverged = False
        for k in range(steps):
            q = e1f * y[0] + e2f * y[1]
            a_meas = qb
            if noise is not None:
                q += noise[0, k] * math.hypot(resp_lp.i2, resp_lp.q2)
                a_meas += noise[1, k] * math.hypot(base_lp.i2, base_lp.q2)
            carrier = pll.carrier_phase
            dr = demodulate(q, carrier, resp_lp, pll.inst_freq)
            da = demodulate(a_meas, carrier, base_lp, pll.inst_freq)
            lag = wrap_phase(da.phase - dr.phase - math.pi)
            phase, freq = pll_step(lag, target_phase, pll, gains, dt)
            if mode is LoopMode.RESPONSE:
                amp = dr.amp
                self.voltage = amplitude_controller_step(amp, level, self.amp_state, outer, dt)
            elif mode is LoopMode.EXCITATION:
                amp = da.amp
                self.voltage = amplitude_controller_step(amp, level, self.amp_state, outer, dt)
            else:
                amp = dr.amp
            t1 = t + dt
            qb1 = exciter.drive(self.voltage * math.cos(phase), t1)
            if record:
                for buf, value in zip(
                    buffers,
                    (
                        carrier,
                        q,
                        e1f * y[2] + e2f * y[3],
                        a_meas,
                        y[0],
                        y[1],
                        y[2],
                        y[3],
                        freq,
                        pll.phase_error,
                        lag,
                        amp,
                        self.voltage,
                    ),
                    strict=True,
                ):
                    buf.append(value)
            y = _rk4(y, qb, 0.5 * (qb + qb1), qb1, dt, c)
            qb, t = qb1, t1
            self._step += 1
            if telemetry is not None and self._step % decimation == 0:
                amp_err = level - amp if mode is not LoopMode.VOLTAGE else 0.0
                telemetry((t, freq, pll.phase_error, amp_err, self.voltage))
            if not abs(y[0]) < DIVERGENCE_LIMIT or not abs(freq) < 10 * self.center:
                diverged = True
                break
        if diverged:
            LOGGER.warning("Loop diverged at t=%.3f s, resetting plant and controllers", t)
            self.t = t
            self._y = (0.0, 0.0, 0.0, 0.0)
            self._qb = 0.0
            self.voltage = 0.0 if mode is not LoopMode.VOLTAGE else level
            self.exciter.reset_lag()
            self._reset_loops()
        else:
            self._y, self._qb, self.t = y, qb, t
        if not record:
            return None
        arrays = [np.asarray(buf, dtype=float) for buf in buffers]
        return Capture(
            carrier=arrays[0],
            displacement=arrays[1],
            velocity=arrays[2],
            base_accel=arrays[3],
            eta=np.vstack((arrays[4], arrays[5])),
            eta_dot=np.vstack((arrays[6], arrays[7])),
            inst_freq=arrays[8],
            phase_error=arrays[9],
            lag=arrays[10],
            amp=arrays[11],
            voltage=arrays[12],
            diverged=diverged,
        )

    def window_duration(self) -> float:
        """Seconds spanning the detector window at the current frequency."""
        freq = max(self.pll.inst_freq, 1e-6)
        # 5 % margin keeps the window above the detector minimum while the
        # frequency still moves.
        return 1.05 * self.control.detector.window_periods * 2 * math.pi / freq

    def assess(self, capture: Capture, reference: float | None = None) -> Quality:
        """Steady-state statistics of a capture."""
        return steady_state_detector(
            capture.amp,
            capture.inst_freq,
            capture.phase_error,
            self.control.detector,
            dt=self.dt,
            reference=reference,
        )
