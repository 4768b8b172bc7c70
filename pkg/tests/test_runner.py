"""Tests for scenario execution and identification wiring."""

from __future__ import annotations

import pytest

from vibelab.data import LabRun, Scenario
from vibelab.records import read_csv, read_json
from vibelab.runner import execute, identify, summarize, write_run

from .conftest import D1


def test_identify_builds_backbone_energy_and_circle_fit(
    synthetic_run: LabRun, tiny_scenario: Scenario
) -> None:
    identify(synthetic_run, tiny_scenario)
    backbone = synthetic_run.backbone
    assert backbone is not None
    assert len(backbone.by_direction("up")) == 2
    assert len(backbone.by_direction("down")) == 2
    for point in backbone.points:
        assert point.damping == pytest.approx(D1, rel=1e-9)
    assert len(synthetic_run.energy) == 4
    (fit,) = synthetic_run.circle_fits
    assert fit.level_index == 0
    assert fit.fit.d_mean == pytest.approx(D1, rel=1e-6)
    (check,) = synthetic_run.consistency
    assert check.level == fit.level
    assert check.freq_error_hz == pytest.approx(0.0, abs=1e-6)
    assert check.prt_damping == pytest.approx(D1, rel=1e-9)
    assert not synthetic_run.resonance
    assert not synthetic_run.notes


def test_identify_skips_rejected_records(synthetic_run: LabRun, tiny_scenario: Scenario) -> None:
    for record in synthetic_run.records["prt"]:
        record.diverged = True
    identify(synthetic_run, tiny_scenario)
    assert synthetic_run.backbone is None
    assert synthetic_run.notes == ["prt: no accepted levels"]
    assert synthetic_run.flagged


def test_ect_without_backbone_is_noted(synthetic_run: LabRun, tiny_scenario: Scenario) -> None:
    run = LabRun(1, records={"ect": synthetic_run.records["rct"]})
    identify(run, tiny_scenario)
    assert run.notes == ["ect: no PRT backbone for bounds"]
    assert not run.frc_bounds


def test_summary(synthetic_run: LabRun, tiny_scenario: Scenario) -> None:
    identify(synthetic_run, tiny_scenario)
    summary = summarize(synthetic_run)
    assert summary["run"] == 1
    assert not summary["flagged"]
    assert summary["records"]["prt"] == {"total": 4, "accepted": 4}
    assert summary["backbone"]["points"] == 4
    assert summary["backbone"]["damping_mean"] == pytest.approx(D1)
    assert summary["circle_fit"][0]["pairs"] > 0
    assert summary["energy_peak_e22"] == 0.0
    assert summary["prt_rct"]["levels"] == 1
    assert summary["prt_rct"]["max_freq_gap_hz"] == pytest.approx(0.0, abs=1e-6)
    assert "ect_resonance" not in summary


def test_write_run_files(synthetic_run: LabRun, tiny_scenario: Scenario) -> None:
    identify(synthetic_run, tiny_scenario)
    files = write_run(synthetic_run, tiny_scenario)
    names = sorted(p.name for p in files)
    assert names == [
        "linear_prt_run1_backbone.csv",
        "linear_prt_run1_energy.csv",
        "linear_prt_run1_records.csv",
        "linear_prt_run1_records.json",
        "linear_rct_run1_nyquist.csv",
        "linear_rct_run1_records.csv",
        "linear_rct_run1_records.json",
        "linear_run1.json",
    ]
    assert all(p.parent == tiny_scenario.run_dir for p in files)
    header, rows = read_csv(tiny_scenario.run_dir / "linear_prt_run1_backbone.csv")
    assert header["config_sha256"] == tiny_scenario.config_hash
    assert header["kind"] == "backbone"
    assert [r["direction"] for r in rows] == ["up", "up", "down", "down"]
    manifest = read_json(tiny_scenario.run_dir / "linear_run1.json")
    assert manifest["protocols"] == ["prt", "rct"]
    assert manifest["summary"]["backbone"]["points"] == 4


def test_write_run_is_byte_identical(synthetic_run: LabRun, tiny_scenario: Scenario) -> None:
    identify(synthetic_run, tiny_scenario)
    first = {p: p.read_bytes() for p in write_run(synthetic_run, tiny_scenario)}
    second = {p: p.read_bytes() for p in write_run(synthetic_run, tiny_scenario)}
    assert first == second


@pytest.mark.slow
def test_execute_linear_scenario(tiny_scenario: Scenario) -> None:
    (run,) = execute(tiny_scenario)
    assert not run.flagged
    assert run.backbone is not None
    for point in run.backbone.points:
        assert point.damping == pytest.approx(D1, rel=2e-2)
        assert point.omega == pytest.approx(tiny_scenario.plant.omega1, rel=1e-4)
    assert (tiny_scenario.run_dir / "linear_run1.json").is_file()
