"""Exceptions for Vibelab."""

from __future__ import annotations


class VibeLabError(Exception):
    """Base error for the virtual test lab."""


class ValidationError(VibeLabError):
    """Invalid argument, configuration value or simulation state."""


class ConfigError(VibeLabError):
    """Scenario file could not be parsed or validated."""

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None) -> None:
        """Initialize with an optional field path and source line."""
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        detail = f"{message} ({', '.join(location)})" if location else message
        super().__init__(detail)
        self.field = field
        self.line = line


class ConvergenceError(VibeLabError):
    """Nonlinear solver did not reach the requested residual."""


class IdentificationError(VibeLabError):
    """Identification input is insufficient or degenerate."""


class MissingArtifactsError(VibeLabError):
    """Report inputs are missing."""

    def __init__(self, missing: list[str]) -> None:
        """Initialize with every missing file name."""
        super().__init__("missing_artifacts: " + ", ".join(missing))
        self.missing = missing


NON_FINITE_INPUT = "non_finite_input"
INVALID_PLANT = "invalid_plant"
INVALID_EXCITER = "invalid_exciter"
UNSTABLE_TIME_STEP = "unstable_time_step"
WINDOW_TOO_SHORT = "window_too_short"
INVALID_FREQUENCY = "invalid_frequency"
INVALID_GAINS = "invalid_gains"
INVALID_TARGET = "invalid_target"
INVALID_PROTOCOL = "invalid_protocol"
EMPTY_RECORDS = "empty_records"
AMPLITUDE_BELOW_NOISE = "amplitude_below_noise"
TOO_FEW_POINTS = "too_few_points"
ONE_SIDED_POINTS = "one_sided_points"
DEGENERATE_CIRCLE = "degenerate_circle"
ZERO_REFERENCE_ENERGY = "zero_reference_energy"
MISSING_BACKBONE = "missing_backbone"
NOT_CONVERGED = "not_converged"
DESIGN_UNREACHABLE = "design_unreachable"
