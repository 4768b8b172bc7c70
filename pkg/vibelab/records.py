"""CSV and JSON persistence with provenance headers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .const import LOGGER, REPORT_SCHEMA, VERSION
from .control import Quality
from .dsp import TWO_PI, HarmonicSpectrum
from .exceptions import ConfigError
from .protocols import SteadyRecord

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

HEADER_PREFIX = "# "

RECORD_COLUMNS: tuple[str, ...] = (
    "protocol",
    "direction",
    "level_index",
    "point_index",
    "level",
    "set_phase_deg",
    "freq_hz",
    "phase_lag_deg",
    "voltage",
    "amplitude",
    "q1_re",
    "q1_im",
    "ab1_re",
    "ab1_im",
    "amp_dev",
    "freq_std",
    "phase_std",
    "accepted",
    "diverged",
    "t_end",
)
BACKBONE_COLUMNS: tuple[str, ...] = (
    "direction",
    "level_index",
    "a",
    "modal_amplitude",
    "freq_hz",
    "damping",
    "e_proj",
    "b_proj",
    "base_accel",
    "residual",
)
NYQUIST_COLUMNS: tuple[str, ...] = (
    "level_index",
    "level",
    "freq_n_hz",
    "d_mean",
    "d_min",
    "d_max",
    "center_re",
    "center_im",
    "radius",
    "residual",
    "resonant_index",
    "pairs",
)
FRC_COLUMNS: tuple[str, ...] = ("level", "curve", "flank", "freq_hz", "amplitude")
ENERGY_COLUMNS: tuple[str, ...] = ("a", "freq_hz", "mode", "harmonic", "energy", "fraction")
TELEMETRY_COLUMNS: tuple[str, ...] = ("t", "inst_freq_hz", "phase_err_deg", "amp_err", "voltage")


def _fmt(value: Any) -> str:
    """Deterministic text for a CSV cell."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float | np.floating):
        return repr(float(value))
    return str(value)


def provenance(config_hash: str, kind: str) -> dict[str, str]:
    """Header fields stamped on every output file."""
    return {
        "generator": f"vibelab {VERSION}",
        "kind": kind,
        "schema": str(REPORT_SCHEMA),
        "config_sha256": config_hash,
    }


def write_csv(
    path: Path,
    rows: Iterable[dict[str, Any]],
    columns: Sequence[str],
    *,
    config_hash: str,
    kind: str,
) -> Path:
    """Write rows under a commented provenance header."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for key, value in provenance(config_hash, kind).items():
            fh.write(f"{HEADER_PREFIX}{key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col, "")) for col in columns])
    LOGGER.debug("Wrote %s", path)
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Return (header, rows) of a file written by :func:`write_csv`."""
    header: dict[str, str] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body: list[str] = []
    for line in lines:
        if line.startswith(HEADER_PREFIX):
            key, _, value = line[len(HEADER_PREFIX) :].partition(": ")
            header[key] = value
        else:
            body.append(line)
    reader = csv.DictReader(body)
    return header, list(reader)


def write_json(path: Path, payload: dict[str, Any], *, config_hash: str, kind: str) -> Path:
    """Write a JSON document with a provenance block, keys sorted."""
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"provenance": provenance(config_hash, kind), **payload}
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    LOGGER.debug("Wrote %s", path)
    return path


def read_json(path: Path) -> dict[str, Any]:
    """Load a JSON document; malformed files raise ConfigError with the line."""
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON in {path.name}: {err.msg}", line=err.lineno) from err


# --- Steady records ---


def record_to_row(record: SteadyRecord) -> dict[str, Any]:
    """Flat CSV row of a steady record."""
    q1 = complex(record.response.coeffs[1])
    ab1 = complex(record.base.coeffs[1])
    return {
        "protocol": record.protocol,
        "direction": record.direction,
        "level_index": record.level_index,
        "point_index": record.point_index,
        "level": record.level,
        "set_phase_deg": math.degrees(record.set_phase),
        "freq_hz": record.omega / TWO_PI,
        "phase_lag_deg": math.degrees(record.phase_lag),
        "voltage": record.voltage,
        "amplitude": record.amplitude,
        "q1_re": q1.real,
        "q1_im": q1.imag,
        "ab1_re": ab1.real,
        "ab1_im": ab1.imag,
        "amp_dev": record.quality.amp_dev,
        "freq_std": record.quality.freq_std,
        "phase_std": record.quality.phase_std,
        "accepted": record.accepted,
        "diverged": record.diverged,
        "t_end": record.t_end,
    }


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _float(value: float | None) -> float:
    return math.inf if value is None else float(value)


def record_to_dict(record: SteadyRecord) -> dict[str, Any]:
    """JSON form of a steady record, spectra included."""
    modal = None
    if record.modal is not None:
        modal = [
            {"re": [float(c.real) for c in s], "im": [float(c.imag) for c in s]}
            for s in record.modal
        ]
    return {
        "protocol": record.protocol,
        "direction": record.direction,
        "level_index": record.level_index,
        "point_index": record.point_index,
        "level": record.level,
        "set_phase": record.set_phase,
        "omega": _finite_or_none(record.omega),
        "phase_lag": _finite_or_none(record.phase_lag),
        "voltage": _finite_or_none(record.voltage),
        "response": record.response.to_dict(),
        "response_velocity": record.response_velocity.to_dict(),
        "base": record.base.to_dict(),
        "modal": modal,
        "quality": {
            "amp_dev": _finite_or_none(record.quality.amp_dev),
            "freq_std": _finite_or_none(record.quality.freq_std),
            "phase_std": _finite_or_none(record.quality.phase_std),
            "accepted": record.quality.accepted,
        },
        "diverged": record.diverged,
        "t_end": record.t_end,
    }


def record_from_dict(data: dict[str, Any]) -> SteadyRecord:
    """Inverse of :func:`record_to_dict`."""
    quality = data["quality"]
    modal = None
    if data.get("modal"):
        modal = tuple(
            np.asarray(s["re"], dtype=float) + 1j * np.asarray(s["im"], dtype=float)
            for s in data["modal"]
        )
    nan = float("nan")
    return SteadyRecord(
        protocol=data["protocol"],
        direction=data["direction"],
        level_index=int(data["level_index"]),
        point_index=int(data["point_index"]),
        level=float(data["level"]),
        set_phase=float(data["set_phase"]),
        omega=nan if data["omega"] is None else float(data["omega"]),
        phase_lag=nan if data["phase_lag"] is None else float(data["phase_lag"]),
        voltage=nan if data["voltage"] is None else float(data["voltage"]),
        response=HarmonicSpectrum.from_dict(data["response"]),
        response_velocity=HarmonicSpectrum.from_dict(data["response_velocity"]),
        base=HarmonicSpectrum.from_dict(data["base"]),
        quality=Quality(
            _float(quality["amp_dev"]),
            _float(quality["freq_std"]),
            _float(quality["phase_std"]),
            bool(quality["accepted"]),
        ),
        modal=modal,
        diverged=bool(data["diverged"]),
        t_end=float(data["t_end"]),
    )


def write_records(
    directory: Path, stem: str, records: Sequence[SteadyRecord], *, config_hash: str
) -> tuple[Path, Path]:
    """Write ``<stem>_records.csv`` and ``<stem>_records.json``."""
    csv_path = write_csv(
        directory / f"{stem}_records.csv",
        (record_to_row(r) for r in records),
        RECORD_COLUMNS,
        config_hash=config_hash,
        kind="records",
    )
    json_path = write_json(
        directory / f"{stem}_records.json",
        {"records": [record_to_dict(r) for r in records]},
        config_hash=config_hash,
        kind="records",
    )
    return csv_path, json_path


def load_records(path: Path) -> list[SteadyRecord]:
    """Read the JSON twin written by :func:`write_records`."""
    return [record_from_dict(item) for item in read_json(path)["records"]]
