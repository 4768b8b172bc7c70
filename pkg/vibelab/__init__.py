"""Virtual nonlinear vibration testing lab."""

from __future__ import annotations

from .const import VERSION
from .exceptions import (
    ConfigError,
    ConvergenceError,
    IdentificationError,
    MissingArtifactsError,
    ValidationError,
    VibeLabError,
)

__version__ = VERSION

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "IdentificationError",
    "MissingArtifactsError",
    "ValidationError",
    "VibeLabError",
    "__version__",
]
