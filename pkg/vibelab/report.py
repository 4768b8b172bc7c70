"""Cross-protocol report assembled from a run directory."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Any

from .config import build_scenario, validate_settings
from .const import LOGGER, REPORT_SCHEMA, VERSION
from .data import LabRun, Scenario
from .dsp import TWO_PI
from .exceptions import MissingArtifactsError
from .records import load_records, read_json, write_json
from .runner import identify, summarize

MANIFEST_RE = re.compile(r"^(?P<configuration>[a-z]+)_run(?P<index>\d+)\.json$")
REPORT_JSON = "report.json"
REPORT_MARKDOWN = "summary.md"


def discover(directory: Path) -> list[Path]:
    """Run manifests in a directory, ordered by name."""
    if not directory.is_dir():
        raise MissingArtifactsError([str(directory)])
    manifests = sorted(p for p in directory.iterdir() if MANIFEST_RE.match(p.name))
    if not manifests:
        raise MissingArtifactsError(["<configuration>_run<k>.json"])
    return manifests


def load_run(manifest_path: Path) -> tuple[Scenario, LabRun]:
    """Rebuild the scenario and records of one run manifest."""
    manifest = read_json(manifest_path)
    settings = validate_settings(manifest["settings"])
    scenario = build_scenario(settings)
    run = LabRun(int(manifest["run_index"]))
    directory = manifest_path.parent
    missing = [
        name
        for name in (
            f"{scenario.stem(p, run.run_index)}_records.json" for p in manifest["protocols"]
        )
        if not (directory / name).is_file()
    ]
    if missing:
        raise MissingArtifactsError(missing)
    for protocol in manifest["protocols"]:
        run.records[protocol] = load_records(
            directory / f"{scenario.stem(protocol, run.run_index)}_records.json"
        )
    identify(run, scenario)
    return scenario, run


def _energy_section(run: LabRun) -> list[dict[str, Any]]:
    rows = []
    for a, omega, table in sorted(run.energy, key=lambda item: item[0]):
        fractions = table.fractions
        others = [
            float(fractions[m, h])
            for m in range(fractions.shape[0])
            for h in range(fractions.shape[1])
            if (m, h) not in ((0, 0), (1, 1))
        ]
        rows.append(
            {
                "a": a,
                "freq_hz": omega / TWO_PI,
                "e22_fraction": table.fraction(2, 2),
                "max_other_fraction": max(others, default=0.0),
            }
        )
    return rows


def build_report(directory: Path) -> dict[str, Any]:
    """Collect every run of a directory into one report document."""
    runs: list[dict[str, Any]] = []
    config_hashes: set[str] = set()
    for manifest in discover(directory):
        scenario, run = load_run(manifest)
        config_hashes.add(scenario.config_hash)
        sections: dict[str, Any] = {}
        if run.backbone is not None:
            sections["backbone"] = [p.to_row() for p in run.backbone.points]
        if run.consistency:
            sections["damping"] = [c.to_row() for c in run.consistency]
        if run.ect_coverage:
            sections["ect_bounds"] = [
                {
                    "level": level,
                    "inside_fraction": frac,
                    "band_hz": run.frc_bounds[level].width() / TWO_PI,
                }
                for level, frac in sorted(run.ect_coverage.items())
            ]
        if run.resonance:
            sections["ect_resonance"] = [c.to_row() for c in run.resonance]
        energy = _energy_section(run)
        if energy:
            sections["energy"] = energy
        runs.append(
            {
                "configuration": scenario.configuration,
                "name": scenario.name,
                "summary": summarize(run),
                "sections": sections,
            }
        )
    return {
        "report_schema": REPORT_SCHEMA,
        "generator": f"vibelab {VERSION}",
        "config_hashes": sorted(config_hashes),
        "runs": runs,
    }


def _markdown(report: dict[str, Any]) -> str:
    lines = [f"# Vibelab report ({report['generator']})", ""]
    for entry in report["runs"]:
        summary = entry["summary"]
        lines.append(f"## {entry['name']} / {entry['configuration']} run {summary['run']}")
        lines.append("")
        if summary["flagged"]:
            lines.append("**Flagged:** some points diverged.")
            lines.append("")
        for name, counts in summary["records"].items():
            lines.append(f"- {name.upper()}: {counts['accepted']}/{counts['total']} accepted")
        backbone = summary.get("backbone")
        if backbone:
            lines.append(
                f"- Backbone: {backbone['freq_min_hz']:.3f}-{backbone['freq_max_hz']:.3f} Hz, "
                f"D {100 * backbone['damping_min']:.3f}-{100 * backbone['damping_max']:.3f} %"
            )
        sections = entry["sections"]
        if "damping" in sections:
            lines += [
                "",
                "| a [mm] | D PRT [%] | D RCT min/mean/max [%] | within |",
                "|---|---|---|---|",
            ]
            lines += [
                f"| {1e3 * row['a']:.3f} | {100 * row['d_prt']:.3f} | "
                f"{100 * row['d_rct_min']:.3f}/{100 * row['d_rct_mean']:.3f}/"
                f"{100 * row['d_rct_max']:.3f} | "
                f"{'yes' if row['within'] else 'no'} |"
                for row in sections["damping"]
            ]
        if "ect_bounds" in sections:
            lines += ["", "| level [m/s²] | inside bounds |", "|---|---|"]
            lines += [
                f"| {row['level']:g} | {100 * row['inside_fraction']:.0f} % |"
                for row in sections["ect_bounds"]
            ]
        if "ect_resonance" in sections:
            lines += [
                "",
                "| level [m/s²] | f ECT [Hz] | f backbone [Hz] | a [mm] | a FRC peak [mm] | ok |",
                "|---|---|---|---|---|---|",
            ]
            lines += [
                f"| {row['level']:g} | {row['freq_hz']:.3f} | {row['backbone_freq_hz']:.3f} | "
                f"{1e3 * row['amplitude']:.3f} | {1e3 * row['predicted_amplitude']:.3f} | "
                f"{'yes' if row['passed'] else 'no'} |"
                for row in sections["ect_resonance"]
            ]
        if "energy" in sections:
            peak = max(sections["energy"], key=lambda r: r["e22_fraction"])
            lines += [
                "",
                f"Peak E(2,2)/E(1,1) = {peak['e22_fraction']:.3f} at a = {1e3 * peak['a']:.3f} mm",
            ]
        for note in summary["notes"]:
            lines.append(f"- note: {note}")
        lines.append("")
    return "\n".join(lines)


def write_report(directory: Path, out: Path | None = None) -> tuple[Path, Path]:
    """Write report.json and summary.md next to the runs (or into ``out``)."""
    report = build_report(directory)
    target = out or directory
    digest = ",".join(report["config_hashes"])
    json_path = write_json(target / REPORT_JSON, report, config_hash=digest, kind="report")
    md_path = target / REPORT_MARKDOWN
    md_path.write_text(
        f"<!-- config_sha256: {digest} -->\n" + _markdown(report) + "\n", encoding="utf-8"
    )
    LOGGER.info("Report written to %s", target)
    return json_path, md_path
