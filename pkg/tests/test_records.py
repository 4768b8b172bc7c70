"""Tests for CSV and JSON persistence."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
import pytest

from vibelab.const import VERSION
from vibelab.control import Quality
from vibelab.dsp import TWO_PI, HarmonicSpectrum
from vibelab.exceptions import ConfigError
from vibelab.protocols import SteadyRecord
from vibelab.records import (
    RECORD_COLUMNS,
    load_records,
    read_csv,
    read_json,
    record_to_row,
    write_csv,
    write_json,
    write_records,
)

if TYPE_CHECKING:
    from pathlib import Path

OMEGA = TWO_PI * 101.0
HASH = "ab" * 32


def _record(*, diverged: bool = False) -> SteadyRecord:
    nan = float("nan")
    response = HarmonicSpectrum(OMEGA, np.array([0, 1e-3 - 2e-4j, 3e-5j], dtype=complex))
    return SteadyRecord(
        protocol="prt",
        direction="down",
        level_index=3,
        point_index=0,
        level=1.25,
        set_phase=math.pi / 2,
        omega=nan if diverged else OMEGA,
        phase_lag=nan if diverged else math.pi / 2,
        voltage=nan if diverged else 1.25,
        response=response,
        response_velocity=HarmonicSpectrum(OMEGA, 1j * OMEGA * response.coeffs),
        base=HarmonicSpectrum(OMEGA, np.array([0, -2j, 0], dtype=complex)),
        quality=Quality(math.inf, math.inf, math.inf, accepted=False)
        if diverged
        else Quality(0.5, 0.02, 0.3, accepted=True),
        modal=None if diverged else (response.coeffs, np.zeros(3, dtype=complex)),
        diverged=diverged,
        t_end=12.5,
    )


def test_csv_header_and_cells(tmp_path: Path) -> None:
    path = write_csv(
        tmp_path / "sub" / "x.csv",
        [{"a": 0.1, "b": True, "c": "text"}, {"a": 2}],
        ("a", "b", "c"),
        config_hash=HASH,
        kind="test",
    )
    header, rows = read_csv(path)
    assert header == {
        "generator": f"vibelab {VERSION}",
        "kind": "test",
        "schema": "1",
        "config_sha256": HASH,
    }
    assert rows == [{"a": "0.1", "b": "1", "c": "text"}, {"a": "2", "b": "", "c": ""}]


def test_csv_is_deterministic(tmp_path: Path) -> None:
    rows = [record_to_row(_record())]
    first = write_csv(tmp_path / "a.csv", rows, RECORD_COLUMNS, config_hash=HASH, kind="records")
    second = write_csv(tmp_path / "b.csv", rows, RECORD_COLUMNS, config_hash=HASH, kind="records")
    assert first.read_bytes() == second.read_bytes()


def test_record_row_units() -> None:
    row = record_to_row(_record())
    assert row["freq_hz"] == pytest.approx(101.0)
    assert row["set_phase_deg"] == pytest.approx(90.0)
    assert row["q1_im"] == pytest.approx(-2e-4)
    assert row["ab1_im"] == -2.0
    assert row["accepted"] is True
    assert set(row) == set(RECORD_COLUMNS)


def test_records_json_round_trip(tmp_path: Path) -> None:
    records = [_record(), _record(diverged=True)]
    csv_path, json_path = write_records(tmp_path, "aligned_prt_run0", records, config_hash=HASH)
    assert csv_path.name == "aligned_prt_run0_records.csv"
    loaded = load_records(json_path)
    steady, diverged = loaded
    assert steady.omega == OMEGA
    assert steady.direction == "down"
    assert steady.quality == records[0].quality
    np.testing.assert_array_equal(steady.response.coeffs, records[0].response.coeffs)
    np.testing.assert_array_equal(steady.modal[0], records[0].modal[0])
    assert diverged.diverged
    assert math.isnan(diverged.omega)
    assert diverged.quality.amp_dev == math.inf
    assert diverged.modal is None


def test_json_provenance(tmp_path: Path) -> None:
    path = write_json(tmp_path / "r.json", {"value": 1}, config_hash=HASH, kind="report")
    data = read_json(path)
    assert data["value"] == 1
    assert data["provenance"]["kind"] == "report"
    assert data["provenance"]["config_sha256"] == HASH


def test_malformed_json_reports_line(tmp_path: Path) -> None:
    path = tmp_path / "bad.json"
    path.write_text('{\n  "a": 1,\n  oops\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError, match="bad.json") as err:
        read_json(path)
    assert err.value.line == 3
