"""Test procedures: phase resonance, response- and excitation-controlled sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .const import (
    DEFAULT_ECT_LEVEL_MAX,
    DEFAULT_ECT_LEVEL_MIN,
    DEFAULT_ECT_LEVELS,
    DEFAULT_ECT_PHASE_MAX,
    DEFAULT_ECT_PHASE_MIN,
    DEFAULT_ECT_POINTS,
    DEFAULT_PRT_HOLD,
    DEFAULT_PRT_LEVEL_MAX,
    DEFAULT_PRT_LEVEL_MIN,
    DEFAULT_PRT_LEVELS,
    DEFAULT_RCT_LEVEL_MAX,
    DEFAULT_RCT_LEVEL_MIN,
    DEFAULT_RCT_LEVELS,
    DEFAULT_RCT_PHASE_MAX,
    DEFAULT_RCT_PHASE_MIN,
    DEFAULT_RCT_POINTS,
    DEFAULT_SETTLE,
    DEFAULT_TIMEOUT,
    LOGGER,
    PHASE_RESONANCE_DEG,
)
from .control import DetectorThresholds, Quality
from .dsp import TWO_PI, HarmonicSpectrum, amplitude_metric
from .exceptions import INVALID_PROTOCOL, ValidationError
from .rig import Capture, LoopMode, Rig, Setpoint

if TYPE_CHECKING:
    from collections.abc import Iterable

    from .ident import Direction


@dataclass(frozen=True, slots=True)
class PrtPlan:
    """Voltage levels in V, stepped up then down, each held ``hold`` s."""

    level_min: float = DEFAULT_PRT_LEVEL_MIN
    level_max: float = DEFAULT_PRT_LEVEL_MAX
    levels: int = DEFAULT_PRT_LEVELS
    hold: float = DEFAULT_PRT_HOLD

    def __post_init__(self) -> None:
        """Validate on construction."""
        _check_range(self.level_min, self.level_max, self.levels, "prt")
        if not self.hold > 0:
            message = f"{INVALID_PROTOCOL}: prt hold must be positive"
            raise ValidationError(message)

    def voltages(self) -> np.ndarray:
        """Ascending voltage levels."""
        return np.linspace(self.level_min, self.level_max, self.levels)


@dataclass(frozen=True, slots=True)
class SweepPlan:
    """Amplitude levels, each swept over a phase range given in degrees."""

    level_min: float
    level_max: float
    levels: int
    phase_min: float
    phase_max: float
    points: int
    settle: float = DEFAULT_SETTLE
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self) -> None:
        """Validate on construction."""
        _check_range(self.level_min, self.level_max, self.levels, "sweep")
        _check_range(self.phase_min, self.phase_max, self.points, "phase")
        if not (0 < self.phase_min and self.phase_max < 180):  # noqa: PLR2004
            message = f"{INVALID_PROTOCOL}: phase range must lie inside (0, 180) degrees"
            raise ValidationError(message)
        if not (self.settle >= 0 and self.timeout > 0):
            message = f"{INVALID_PROTOCOL}: settle and timeout must be positive"
            raise ValidationError(message)

    def amplitudes(self) -> np.ndarray:
        """Ascending amplitude levels."""
        return np.linspace(self.level_min, self.level_max, self.levels)

    def phases(self) -> np.ndarray:
        """Phase set values in rad, monotonically increasing."""
        return np.radians(np.linspace(self.phase_min, self.phase_max, self.points))


def _check_range(low: float, high: float, count: int, name: str) -> None:
    if not (math.isfinite(low) and math.isfinite(high) and 0 < low < high):
        message = f"{INVALID_PROTOCOL}: {name} range must satisfy 0 < min < max"
        raise ValidationError(message)
    if count < 2:  # noqa: PLR2004
        message = f"{INVALID_PROTOCOL}: {name} needs at least 2 levels"
        raise ValidationError(message)


def default_rct_plan() -> SweepPlan:
    """Response-controlled sweep defaults: amplitudes in m."""
    return SweepPlan(
        DEFAULT_RCT_LEVEL_MIN,
        DEFAULT_RCT_LEVEL_MAX,
        DEFAULT_RCT_LEVELS,
        DEFAULT_RCT_PHASE_MIN,
        DEFAULT_RCT_PHASE_MAX,
        DEFAULT_RCT_POINTS,
    )


def default_ect_plan() -> SweepPlan:
    """Excitation-controlled sweep defaults: base accelerations in m/s²."""
    return SweepPlan(
        DEFAULT_ECT_LEVEL_MIN,
        DEFAULT_ECT_LEVEL_MAX,
        DEFAULT_ECT_LEVELS,
        DEFAULT_ECT_PHASE_MIN,
        DEFAULT_ECT_PHASE_MAX,
        DEFAULT_ECT_POINTS,
    )


@dataclass(frozen=True, slots=True)
class ProtocolConfig:
    """Plans for the three procedures."""

    prt: PrtPlan = field(default_factory=PrtPlan)
    rct: SweepPlan = field(default_factory=default_rct_plan)
    ect: SweepPlan = field(default_factory=default_ect_plan)


@dataclass(slots=True)
class SteadyRecord:
    """One analysed steady state.

    ``response`` is the relative displacement spectrum obtained by integrating
    ``response_velocity``; ``base`` is the base-acceleration spectrum; both
    share the carrier as phase reference. ``modal`` holds η̂_1 and η̂_2.
    """

    protocol: str
    direction: Direction
    level_index: int
    point_index: int
    level: float
    set_phase: float
    omega: float
    phase_lag: float
    voltage: float
    response: HarmonicSpectrum
    response_velocity: HarmonicSpectrum
    base: HarmonicSpectrum
    quality: Quality
    modal: tuple[np.ndarray, ...] | None = None
    diverged: bool = False
    t_end: float = 0.0

    @property
    def accepted(self) -> bool:
        """Verdict of the steady-state detector."""
        return self.quality.accepted and not self.diverged

    @property
    def amplitude(self) -> float:
        """Multi-harmonic response amplitude in m."""
        return amplitude_metric(self.response)

    @property
    def frf(self) -> complex:
        """Fundamental ratio of response to base displacement."""
        base_disp = complex(self.base.coeffs[1]) / (-(self.omega**2))
        return complex(self.response.coeffs[1]) / base_disp


def _empty_spectrum(omega: float, harmonics: int) -> HarmonicSpectrum:
    return HarmonicSpectrum(omega=omega, coeffs=np.zeros(harmonics + 1, dtype=complex))


def _make_record(  # noqa: PLR0913
    rig: Rig,
    capture: Capture,
    quality: Quality,
    *,
    protocol: str,
    direction: Direction,
    level_index: int,
    point_index: int,
    level: float,
    set_phase: float,
) -> SteadyRecord:
    harmonics = rig.sampling.harmonics
    if capture.diverged or len(capture) == 0:
        empty = _empty_spectrum(rig.center, harmonics)
        return SteadyRecord(
            protocol=protocol,
            direction=direction,
            level_index=level_index,
            point_index=point_index,
            level=level,
            set_phase=set_phase,
            omega=float("nan"),
            phase_lag=float("nan"),
            voltage=float("nan"),
            response=empty,
            response_velocity=empty,
            base=empty,
            quality=Quality(math.inf, math.inf, math.inf, accepted=False),
            diverged=True,
            t_end=rig.t,
        )
    velocity, displacement = capture.response_spectra(harmonics)
    return SteadyRecord(
        protocol=protocol,
        direction=direction,
        level_index=level_index,
        point_index=point_index,
        level=level,
        set_phase=set_phase,
        omega=capture.mean_freq,
        phase_lag=float(np.angle(np.mean(np.exp(1j * capture.lag)))),
        voltage=float(np.mean(capture.voltage)),
        response=displacement,
        response_velocity=velocity,
        base=capture.spectrum(capture.base_accel, harmonics),
        quality=quality,
        modal=capture.modal_spectra(harmonics),
        t_end=rig.t,
    )


def _check_window(rig: Rig, duration: float, name: str) -> None:
    lowest = rig.center * (1 - rig.control.pll.freq_limit)
    needed = rig.control.detector.window_periods * TWO_PI / lowest
    if duration < needed:
        message = (
            f"{INVALID_PROTOCOL}: {name} window {duration:.2f} s is shorter than "
            f"{rig.control.detector.window_periods} periods"
        )
        raise ValidationError(message)


def run_prt(rig: Rig, plan: PrtPlan) -> list[SteadyRecord]:
    """Phase resonance test: voltage stepped up then down, PLL held at 90 degrees.

    Every level is held for the full hold time; the last fraction of the
    hold is analysed.
    """
    hold = rig.seconds(plan.hold)
    analysed = hold * rig.sampling.analysis_fraction
    _check_window(rig, analysed, "prt")
    target = math.radians(PHASE_RESONANCE_DEG)
    voltages = plan.voltages()
    schedule: list[tuple[Direction, int, float]] = [
        ("up", i, float(v)) for i, v in enumerate(voltages)
    ]
    schedule += [("down", i, float(voltages[i])) for i in reversed(range(len(voltages)))]
    LOGGER.info("PRT: %d levels %.3g-%.3g V", len(voltages), plan.level_min, plan.level_max)
    records: list[SteadyRecord] = []
    for direction, index, voltage in schedule:
        rig.command(Setpoint(LoopMode.VOLTAGE, target, voltage))
        rig.run(hold - analysed)
        capture = rig.run(analysed, record=True)
        quality = rig.assess(capture) if not capture.diverged else None
        record = _make_record(
            rig,
            capture,
            quality or Quality(math.inf, math.inf, math.inf, accepted=False),
            protocol="prt",
            direction=direction,
            level_index=index,
            point_index=0,
            level=voltage,
            set_phase=target,
        )
        LOGGER.debug(
            "PRT %s %.3f V: f=%.4f Hz a=%.4g m accepted=%s",
            direction,
            voltage,
            record.omega / TWO_PI,
            record.amplitude,
            record.accepted,
        )
        records.append(record)
    return records


def _run_sweep(rig: Rig, plan: SweepPlan, mode: LoopMode, protocol: str) -> list[SteadyRecord]:
    settle = rig.seconds(plan.settle)
    timeout = rig.seconds(plan.timeout)
    _check_window(rig, timeout, protocol)
    records: list[SteadyRecord] = []
    LOGGER.info(
        "%s: %d levels x %d phase points", protocol.upper(), plan.levels, plan.points
    )
    for level_index, level in enumerate(plan.amplitudes()):
        for point_index, phase in enumerate(plan.phases()):
            rig.command(Setpoint(mode, float(phase), float(level)))
            rig.run(settle)
            waited = 0.0
            while True:
                capture = rig.run(rig.window_duration(), record=True)
                waited += capture.carrier.size * rig.dt
                if capture.diverged:
                    quality = Quality(math.inf, math.inf, math.inf, accepted=False)
                    break
                quality = rig.assess(capture, reference=float(level))
                if quality.accepted or waited >= timeout:
                    break
            if not quality.accepted:
                LOGGER.warning(
                    "%s level %d point %d not steady after %.1f s",
                    protocol.upper(),
                    level_index,
                    point_index,
                    waited,
                )
            record = _make_record(
                rig,
                capture,
                quality,
                protocol=protocol,
                direction="up",
                level_index=level_index,
                point_index=point_index,
                level=float(level),
                set_phase=float(phase),
            )
            records.append(record)
    return records


def run_rct(rig: Rig, plan: SweepPlan) -> list[SteadyRecord]:
    """Response-controlled test: amplitude held per level while the phase set value steps."""
    return _run_sweep(rig, plan, LoopMode.RESPONSE, "rct")


def run_ect(rig: Rig, plan: SweepPlan) -> list[SteadyRecord]:
    """Excitation-controlled test: base acceleration held while the phase set value steps."""
    return _run_sweep(rig, plan, LoopMode.EXCITATION, "ect")


def quality_filter(
    records: Iterable[SteadyRecord], thresholds: DetectorThresholds
) -> list[SteadyRecord]:
    """Records passing all three thresholds with strict inequality."""
    return [r for r in records if not r.diverged and r.quality.passes(thresholds)]
