"""Scenario execution: protocols, identification and output files."""

from __future__ import annotations

import math
from collections import defaultdict
from typing import TYPE_CHECKING, Any

from .const import LOGGER, VERSION
from .data import LabRun, LevelFit, Scenario
from .dsp import TWO_PI
from .exceptions import IdentificationError
from .ident import (
    ModalContext,
    NyquistSet,
    backbone_from_prt,
    circle_fit,
    consistency_passes,
    ect_resonance,
    energy_decomposition,
    frc_bounds,
    prt_rct_consistency,
)
from .protocols import quality_filter, run_ect, run_prt, run_rct
from .records import (
    BACKBONE_COLUMNS,
    ENERGY_COLUMNS,
    FRC_COLUMNS,
    NYQUIST_COLUMNS,
    TELEMETRY_COLUMNS,
    write_csv,
    write_json,
    write_records,
)
from .rig import Rig

if TYPE_CHECKING:
    from pathlib import Path

    from .protocols import SteadyRecord

ECT_FREQ_TOL_HZ = 0.1


def make_rig(scenario: Scenario) -> Rig:
    """Closed loop for a scenario."""
    return Rig(
        scenario.plant,
        scenario.exciter,
        scenario.control,
        scenario.sampling,
        noise_level=scenario.noise_level,
        seed=scenario.seed,
        telemetry_decimation=scenario.telemetry_decimation,
    )


def run_protocol(rig: Rig, scenario: Scenario, protocol: str) -> list[SteadyRecord]:
    """Dispatch one procedure."""
    plans = scenario.protocol
    if protocol == "prt":
        return run_prt(rig, plans.prt)
    if protocol == "rct":
        return run_rct(rig, plans.rct)
    return run_ect(rig, plans.ect)


def identify(run: LabRun, scenario: Scenario) -> None:
    """Fill the identification products of a run from its records."""
    plant = scenario.plant
    context = ModalContext.from_factors(plant.b_factors, plant.e_factors)
    thresholds = scenario.control.detector

    prt = run.records.get("prt")
    if prt:
        accepted = quality_filter(prt, thresholds)
        if accepted:
            run.backbone = backbone_from_prt(accepted, context)
            for point in run.backbone.points:
                if point.modal_spectra is None:
                    continue
                table = energy_decomposition(
                    point.modal_spectra, point.omega, (plant.omega1, plant.omega2)
                )
                run.energy.append((point.a, point.omega, table))
        else:
            run.notes.append("prt: no accepted levels")
            LOGGER.warning("Run %d: no accepted PRT levels", run.run_index)

    rct = run.records.get("rct")
    if rct:
        by_level: dict[int, list[SteadyRecord]] = defaultdict(list)
        for record in quality_filter(rct, thresholds):
            by_level[record.level_index].append(record)
        for level_index in sorted(by_level):
            records = by_level[level_index]
            nyq = NyquistSet(
                level=records[0].level,
                omegas=[r.omega for r in records],
                frf=[r.frf for r in records],
                level_index=level_index,
            )
            try:
                fit = circle_fit(nyq)
            except IdentificationError as err:
                run.notes.append(f"rct level {level_index}: {err}")
                LOGGER.warning("Circle fit at RCT level %d failed: %s", level_index, err)
                continue
            run.circle_fits.append(LevelFit(level_index, nyq.level, fit))
        if run.backbone is not None and run.backbone.by_direction("up").points:
            run.consistency = prt_rct_consistency(
                run.backbone.by_direction("up"), run.circle_fits
            )

    ect = run.records.get("ect")
    if ect:
        if run.backbone is None:
            run.notes.append("ect: no PRT backbone for bounds")
            return
        up = run.backbone.by_direction("up")
        down = run.backbone.by_direction("down")
        accepted = quality_filter(ect, thresholds)
        for level in sorted({r.level for r in ect}):
            try:
                bounds = frc_bounds(up, down, level)
            except IdentificationError as err:
                run.notes.append(f"ect level {level:g}: {err}")
                continue
            run.frc_bounds[level] = bounds
            points = [r for r in accepted if r.level == level]
            if points:
                tol = TWO_PI * ECT_FREQ_TOL_HZ
                inside = sum(bounds.contains(r.omega, r.amplitude, tol) for r in points)
                run.ect_coverage[level] = inside / len(points)
        try:
            run.resonance = ect_resonance(accepted, up)
        except IdentificationError as err:
            run.notes.append(f"ect resonance: {err}")


def summarize(run: LabRun) -> dict[str, Any]:
    """Identification summary of a run for manifests and reports."""
    summary: dict[str, Any] = {
        "run": run.run_index,
        "flagged": run.flagged,
        "notes": list(run.notes),
        "records": {
            name: {"total": len(recs), "accepted": sum(r.accepted for r in recs)}
            for name, recs in run.records.items()
        },
    }
    if run.backbone is not None and run.backbone.points:
        points = run.backbone.points
        summary["backbone"] = {
            "points": len(points),
            "freq_min_hz": min(p.omega for p in points) / TWO_PI,
            "freq_max_hz": max(p.omega for p in points) / TWO_PI,
            "freq_mean_hz": sum(p.omega for p in points) / len(points) / TWO_PI,
            "damping_min": min(p.damping for p in points),
            "damping_max": max(p.damping for p in points),
            "damping_mean": sum(p.damping for p in points) / len(points),
            "a_max": max(p.a for p in points),
        }
    if run.circle_fits:
        summary["circle_fit"] = [
            {"level_index": lf.level_index, "level": lf.level, **lf.fit.to_row()}
            for lf in run.circle_fits
        ]
    if run.consistency:
        summary["prt_rct"] = {
            "levels": len(run.consistency),
            "within": sum(c.within for c in run.consistency),
            "max_freq_gap_hz": max(c.freq_error_hz for c in run.consistency),
            "passed": consistency_passes(run.consistency),
        }
    if run.ect_coverage:
        summary["ect_coverage"] = {f"{k:g}": v for k, v in sorted(run.ect_coverage.items())}
    if run.resonance:
        summary["ect_resonance"] = [c.to_row() for c in run.resonance]
    if run.energy:
        summary["energy_peak_e22"] = max(t.fraction(2, 2) for _, _, t in run.energy)
    return summary


def _frc_rows(run: LabRun) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    for level, bounds in sorted(run.frc_bounds.items()):
        for flank, (amp, lo, hi) in bounds.flanks.items():
            for curve, freqs in (("lower", lo), ("upper", hi)):
                rows.extend(
                    {
                        "level": level,
                        "curve": curve,
                        "flank": flank,
                        "freq_hz": float(f) / TWO_PI,
                        "amplitude": float(a),
                    }
                    for a, f in zip(amp, freqs, strict=True)
                )
    return rows


def _energy_rows(run: LabRun) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    for a, omega, table in run.energy:
        for row in table.to_rows():
            rows.append({"a": a, "freq_hz": omega / TWO_PI, **row})
    return rows


def write_run(
    run: LabRun,
    scenario: Scenario,
    telemetry: dict[str, list[tuple[float, ...]]] | None = None,
) -> list[Path]:
    """Write records, identification tables and the run manifest."""
    directory = scenario.run_dir
    digest = scenario.config_hash
    files: list[Path] = []
    for protocol, records in run.records.items():
        files.extend(
            write_records(
                directory, scenario.stem(protocol, run.run_index), records, config_hash=digest
            )
        )
    if run.backbone is not None:
        files.append(
            write_csv(
                directory / f"{scenario.stem('prt', run.run_index)}_backbone.csv",
                (p.to_row() for p in run.backbone.points),
                BACKBONE_COLUMNS,
                config_hash=digest,
                kind="backbone",
            )
        )
    if run.energy:
        files.append(
            write_csv(
                directory / f"{scenario.stem('prt', run.run_index)}_energy.csv",
                _energy_rows(run),
                ENERGY_COLUMNS,
                config_hash=digest,
                kind="energy",
            )
        )
    if run.circle_fits:
        files.append(
            write_csv(
                directory / f"{scenario.stem('rct', run.run_index)}_nyquist.csv",
                (
                    {"level_index": lf.level_index, "level": lf.level, **lf.fit.to_row()}
                    for lf in run.circle_fits
                ),
                NYQUIST_COLUMNS,
                config_hash=digest,
                kind="nyquist",
            )
        )
    if run.frc_bounds:
        files.append(
            write_csv(
                directory / f"{scenario.stem('ect', run.run_index)}_frc.csv",
                _frc_rows(run),
                FRC_COLUMNS,
                config_hash=digest,
                kind="frc",
            )
        )
    for protocol, rows in (telemetry or {}).items():
        files.append(
            write_csv(
                directory / f"{scenario.stem(protocol, run.run_index)}_telemetry.csv",
                (
                    {
                        "t": t,
                        "inst_freq_hz": f / TWO_PI,
                        "phase_err_deg": math.degrees(e),
                        "amp_err": a,
                        "voltage": v,
                    }
                    for t, f, e, a, v in rows
                ),
                TELEMETRY_COLUMNS,
                config_hash=digest,
                kind="telemetry",
            )
        )
    files.append(
        write_json(
            directory / f"{scenario.configuration}_run{run.run_index}.json",
            {
                "run_index": run.run_index,
                "version": VERSION,
                "protocols": list(run.records),
                "settings": scenario.settings,
                "plant": scenario.plant.as_dict(),
                "exciter": scenario.exciter.as_dict(),
                "summary": summarize(run),
            },
            config_hash=digest,
            kind="run",
        )
    )
    run.files = files
    for path in files:
        LOGGER.info("Wrote %s", path)
    return files


def execute(scenario: Scenario) -> list[LabRun]:
    """Run every repetition of a scenario and write its outputs.

    One rig serves all repetitions so an enabled exciter drift keeps
    accumulating from run to run.
    """
    rig = make_rig(scenario)
    keep_drift = scenario.exciter.drift_enabled
    runs: list[LabRun] = []
    for run_index in range(1, scenario.repeat + 1):
        run = LabRun(run_index)
        telemetry: dict[str, list[tuple[float, ...]]] = {}
        for protocol in scenario.protocols:
            rig.reset(keep_drift=keep_drift)
            if scenario.telemetry:
                telemetry[protocol] = []
                rig.telemetry = telemetry[protocol].append
            LOGGER.info("Run %d: %s on %s", run_index, protocol.upper(), scenario.name)
            run.records[protocol] = run_protocol(rig, scenario, protocol)
            rig.telemetry = None
        identify(run, scenario)
        write_run(run, scenario, telemetry)
        if run.flagged:
            LOGGER.warning("Run %d finished with diverged points", run_index)
        runs.append(run)
    return runs
