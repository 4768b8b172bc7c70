"""Tests for the cross-protocol report."""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

import pytest

from vibelab.exceptions import MissingArtifactsError
from vibelab.report import build_report, discover, load_run, write_report
from vibelab.runner import identify, write_run

from .conftest import D1

if TYPE_CHECKING:
    from pathlib import Path

    from vibelab.data import LabRun, Scenario


@pytest.fixture
def run_dir(synthetic_run: LabRun, tiny_scenario: Scenario) -> Path:
    identify(synthetic_run, tiny_scenario)
    write_run(synthetic_run, tiny_scenario)
    return tiny_scenario.run_dir


def test_discover_requires_manifests(tmp_path: Path) -> None:
    with pytest.raises(MissingArtifactsError, match="missing_artifacts"):
        discover(tmp_path)
    with pytest.raises(MissingArtifactsError) as err:
        discover(tmp_path / "absent")
    assert err.value.missing == [str(tmp_path / "absent")]


def test_load_run_rebuilds_identification(run_dir: Path, tiny_scenario: Scenario) -> None:
    scenario, run = load_run(run_dir / "linear_run1.json")
    assert scenario.config_hash == tiny_scenario.config_hash
    assert run.run_index == 1
    assert len(run.backbone.points) == 4
    assert run.circle_fits[0].fit.d_mean == pytest.approx(D1, rel=1e-6)


def test_load_run_lists_missing_records(run_dir: Path) -> None:
    (run_dir / "linear_prt_run1_records.json").unlink()
    (run_dir / "linear_rct_run1_records.json").unlink()
    with pytest.raises(MissingArtifactsError) as err:
        load_run(run_dir / "linear_run1.json")
    assert err.value.missing == ["linear_prt_run1_records.json", "linear_rct_run1_records.json"]


def test_report_sections(run_dir: Path) -> None:
    report = build_report(run_dir)
    assert report["report_schema"] == 1
    assert len(report["config_hashes"]) == 1
    (entry,) = report["runs"]
    assert entry["configuration"] == "linear"
    sections = entry["sections"]
    assert len(sections["backbone"]) == 4
    (row,) = sections["damping"]
    assert row["d_prt"] == pytest.approx(D1, rel=1e-9)
    assert row["d_rct_mean"] == pytest.approx(D1, rel=1e-6)
    assert sections["energy"][0]["e22_fraction"] == 0.0
    assert "ect_bounds" not in sections


def test_write_report(run_dir: Path, tmp_path: Path) -> None:
    out = tmp_path / "report"
    json_path, md_path = write_report(run_dir, out)
    assert json_path == out / "report.json"
    document = json.loads(json_path.read_text(encoding="utf-8"))
    assert document["provenance"]["kind"] == "report"
    text = md_path.read_text(encoding="utf-8")
    assert text.startswith(f"<!-- config_sha256: {document['config_hashes'][0]} -->")
    assert "PRT: 4/4 accepted" in text
    assert "| a [mm] |" in text


def test_report_is_reproducible(run_dir: Path) -> None:
    first = [p.read_bytes() for p in write_report(run_dir)]
    second = [p.read_bytes() for p in write_report(run_dir)]
    assert first == second
