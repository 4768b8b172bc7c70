"""Custom types for Vibelab."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .exciter import ExciterConfig
    from .ident import (
        Backbone,
        CircleFit,
        ConsistencyCheck,
        EnergyTable,
        FrcBounds,
        ResonanceCheck,
    )
    from .plant import PlantConfig
    from .protocols import ProtocolConfig, SteadyRecord
    from .rig import ControlConfig, SamplingConfig


@dataclass(frozen=True, slots=True)
class Scenario:
    """A validated scenario file."""

    name: str
    configuration: str
    seed: int
    repeat: int
    protocols: tuple[str, ...]
    output_dir: Path
    noise_level: float
    telemetry: bool
    telemetry_decimation: int
    plant: PlantConfig
    exciter: ExciterConfig
    control: ControlConfig
    sampling: SamplingConfig
    protocol: ProtocolConfig
    config_hash: str
    settings: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def run_dir(self) -> Path:
        """Directory receiving every file of this scenario."""
        return self.output_dir / self.name

    def stem(self, protocol: str, run_index: int) -> str:
        """File stem encoding configuration, protocol and run index."""
        return f"{self.configuration}_{protocol}_run{run_index}"


@dataclass(frozen=True, slots=True)
class LevelFit:
    """Circle fit of one RCT amplitude level."""

    level_index: int
    level: float
    fit: CircleFit


@dataclass(slots=True)
class LabRun:
    """Records and identification products of one repetition."""

    run_index: int
    records: dict[str, list[SteadyRecord]] = field(default_factory=dict)
    backbone: Backbone | None = None
    circle_fits: list[LevelFit] = field(default_factory=list)
    frc_bounds: dict[float, FrcBounds] = field(default_factory=dict)
    ect_coverage: dict[float, float] = field(default_factory=dict)
    resonance: list[ResonanceCheck] = field(default_factory=list)
    consistency: list[ConsistencyCheck] = field(default_factory=list)
    energy: list[tuple[float, float, EnergyTable]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        """True when any record diverged."""
        return any(r.diverged for records in self.records.values() for r in records)
