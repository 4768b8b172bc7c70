"""Built-in acceptance checks."""

from __future__ import annotations

import itertools
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .config import build_scenario, validate_settings, with_overrides
from .const import LOGGER
from .control import DetectorThresholds, Quality
from .data import LabRun
from .dsp import TWO_PI, HarmonicSpectrum, amplitude_metric, wrap_phase
from .exceptions import ConvergenceError
from .exciter import ExciterConfig
from .ident import (
    NyquistSet,
    circle_fit,
    consistency_passes,
    energy_decomposition,
    predict_frc,
)
from .plant import (
    PlantDesign,
    PlantState,
    build_plant_config,
    calibrate_backbone,
    mechanical_energy,
)
from .protocols import quality_filter
from .rig import ControlConfig, LoopMode, PllConfig, Rig, SamplingConfig, Setpoint
from .runner import execute, identify, make_rig, run_protocol

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from .ident import Backbone, BackbonePoint
    from .plant import PlantConfig
    from .rig import Capture

F1 = 101.0
D1 = 0.004
DESIGN = PlantDesign(dip_depth=0.06, dip_amplitude=1.0e-3, interaction=0.02)

LINEAR_FREQ_TOL = 1e-4
LINEAR_DAMPING_TOL = 0.02
LINEAR_SPREAD_TOL = 1e-3
ORACLE_FREQ_TOL = 0.002
ORACLE_DAMPING_TOL = 0.05
PLL_PHASE_ERROR_DEG = 2.0
PLL_FREQ_STD_HZ = 0.35
ENERGY_CLOSURE_TOL = 0.01
ECT_COVERAGE = 0.9


@dataclass(frozen=True, slots=True)
class Check:
    """Outcome of one acceptance check."""

    suite: str
    name: str
    passed: bool
    detail: str = ""


def quality_boundary_suite() -> list[Check]:
    """Statistics on, just below and just above each threshold."""
    limits = DetectorThresholds()
    below = {
        "amp_dev": math.nextafter(limits.amp_dev, 0),
        "freq_std": math.nextafter(limits.freq_std, 0),
        "phase_std": math.nextafter(limits.phase_std, 0),
    }
    checks = []
    for values in itertools.product(*(
        (below[key], getattr(limits, key), math.nextafter(getattr(limits, key), math.inf))
        for key in ("amp_dev", "freq_std", "phase_std")
    )):
        expected = all(v == below[k] for k, v in zip(below, values, strict=True))
        got = Quality(*values, accepted=False).passes(limits)
        checks.append(
            Check(
                "quality",
                "amp_dev={:.17g} freq_std={:.17g} phase_std={:.17g}".format(*values),
                got == expected,
                f"expected {'accept' if expected else 'reject'}",
            )
        )
    return checks


def amplitude_metric_suite(count: int = 1000, harmonics: int = 8, seed: int = 7) -> list[Check]:
    """Metric against sqrt(2) times the RMS of the reconstructed zero-mean signal."""
    rng = np.random.default_rng(seed)
    samples = 4 * harmonics + 4
    phase = TWO_PI * np.arange(samples) / samples
    worst = 0.0
    for _ in range(count):
        coeffs = np.zeros(harmonics + 1, dtype=complex)
        coeffs[1:] = rng.standard_normal(harmonics) + 1j * rng.standard_normal(harmonics)
        spec = HarmonicSpectrum(omega=1.0, coeffs=coeffs)
        signal = spec.reconstruct(phase)
        rms = float(np.sqrt(np.mean(signal**2)))
        metric = amplitude_metric(spec)
        worst = max(worst, abs(metric - math.sqrt(2) * rms) / metric)
    return [Check("metric", f"{count} random vectors", worst < 1e-12, f"max rel error {worst:.2e}")]


def circle_fit_suite() -> list[Check]:
    """All-pair damping on analytic viscously damped FRF points."""
    checks = []
    omega = TWO_PI * F1
    for damping in (0.004, 0.02):
        omegas = omega * np.linspace(0.99, 1.01, 12)
        frf = omegas**2 / (omega**2 - omegas**2 + 2j * damping * omega * omegas)
        fit = circle_fit(NyquistSet(level=1e-3, omegas=omegas, frf=frf))
        spread = (fit.d_max - fit.d_min) / damping
        error = abs(fit.d_mean - damping) / damping
        checks.append(
            Check(
                "circle",
                f"D={damping:g}",
                error < 1e-6 and spread < 1e-6,
                f"mean error {error:.2e}, spread {spread:.2e}",
            )
        )
    return checks


def frc_identity_suite(plant: PlantConfig) -> list[Check]:
    """Predicted FRC passes through the backbone point at its own forcing level."""
    backbone = calibrate_backbone(plant, np.linspace(0.2e-3, 1.2e-3, 4))
    checks = []
    for point in backbone.points:
        level = point.base_accel
        prediction = predict_frc(backbone, level)
        hits = [
            p for p in prediction.points
            if abs(p.modal_amplitude - point.eta) <= 1e-12 * point.eta and p.flank == "above"
        ]
        ok = bool(hits) and abs(hits[0].omega - point.omega) <= 1e-9 * point.omega
        checks.append(Check("frc", f"a={point.a:.3g}", ok, "peak passes through the backbone"))
    return checks


def oracle_consistency_suite() -> list[Check]:
    """Small-amplitude oracle collapses to the linear mode."""
    plant = build_plant_config(F1, F1 * 1.89, D1, D1 / 10, DESIGN)
    backbone = calibrate_backbone(plant, [1e-7])
    if not backbone.points:
        return [Check("oracle", "a->0", False, "did not converge")]
    point = backbone.points[0]
    f_err = abs(point.omega - plant.omega1) / plant.omega1
    d_err = abs(point.damping - plant.d1) / plant.d1
    return [
        Check(
            "oracle",
            "a->0",
            f_err < 1e-4 and d_err < 1e-4,
            f"freq error {f_err:.2e}, damping error {d_err:.2e}",
        )
    ]


def modal_interaction_suite(points: int = 24) -> list[Check]:
    """E(2,2) fraction peaks only when twice the dipped frequency meets mode 2."""
    grid = np.linspace(0.1e-3, 3.0e-3, points)
    checks = []
    for ratio, low, high in ((1.89, 0.10, math.inf), (1.84, 0.0, 0.03)):
        plant = build_plant_config(F1, F1 * ratio, D1, D1 / 10, DESIGN)
        backbone = calibrate_backbone(plant, grid)
        e22 = 0.0
        other = 0.0
        for point in backbone.points:
            omegas = (plant.omega1, plant.omega2)
            table = energy_decomposition(point.modal_spectra, point.omega, omegas)
            e22 = max(e22, table.fraction(2, 2))
            fractions = table.fractions
            other = max(
                other,
                max(
                    float(fractions[m, h])
                    for m in range(2)
                    for h in range(fractions.shape[1])
                    if (m, h) not in ((0, 0), (1, 1))
                ),
            )
        if ratio == 1.89:  # noqa: PLR2004
            ok = e22 > low
        else:
            ok = e22 < high
        checks.append(
            Check(
                "interaction",
                f"ratio {ratio}",
                ok and other < 0.03,  # noqa: PLR2004
                f"peak E(2,2)/E(1,1) {e22:.3f}, other fractions {other:.3f}",
            )
        )
    return checks


def _lab_settings(
    configuration: str,
    plant: dict[str, Any],
    protocols: list[str],
    *,
    sections: dict[str, Any] | None = None,
    noise_level: float = 0.0,
    **protocol: Any,
) -> dict[str, Any]:
    return validate_settings(
        {
            "scenario": {
                "name": "selftest",
                "configuration": configuration,
                "protocols": protocols,
                "noise_level": noise_level,
            },
            "sampling": {"time_scale": 0.2},
            "plant": plant,
            "protocol": protocol,
            **(sections or {}),
        }
    )


def _lab_run(settings: dict[str, Any]) -> LabRun:
    scenario = build_scenario(settings)
    rig = make_rig(scenario)
    run = LabRun(1)
    for protocol in scenario.protocols:
        rig.reset()
        run.records[protocol] = run_protocol(rig, scenario, protocol)
    identify(run, scenario)
    return run


def _nonlinear_plant(**extra: Any) -> dict[str, Any]:
    design = {
        "dip_depth": DESIGN.dip_depth,
        "dip_amplitude": DESIGN.dip_amplitude,
        "interaction": 0.0,
    }
    return {"f1": F1, "d1": D1, "frequency_ratio": 1.84, "design": design, **extra}


def linear_identity_suite(quick: bool = False) -> list[Check]:
    """PRT and RCT recover the configured linear mode."""
    levels = 3 if quick else 8
    settings = _lab_settings(
        "linear",
        {"f1": F1, "d1": D1},
        ["prt", "rct"],
        prt={"levels": levels},
        rct={"levels": 2, "points": 8},
    )
    run = _lab_run(settings)
    omega1 = TWO_PI * F1
    checks = []
    points = run.backbone.points if run.backbone else []
    f_err = max((abs(p.omega - omega1) / omega1 for p in points), default=math.inf)
    d_err = max((abs(p.damping - D1) / D1 for p in points), default=math.inf)
    checks.append(
        Check("linear", "prt frequency", f_err < LINEAR_FREQ_TOL, f"max rel error {f_err:.2e}")
    )
    checks.append(
        Check("linear", "prt damping", d_err < LINEAR_DAMPING_TOL, f"max rel error {d_err:.2e}")
    )
    if not run.circle_fits:
        checks.append(Check("linear", "rct circle fit", False, "; ".join(run.notes)))
    for lf in run.circle_fits:
        err = abs(lf.fit.d_mean - D1) / D1
        spread = (lf.fit.d_max - lf.fit.d_min) / lf.fit.d_mean
        checks.append(
            Check(
                "linear",
                f"rct level {lf.level_index}",
                err < LINEAR_DAMPING_TOL and spread < LINEAR_SPREAD_TOL,
                f"rel error {err:.2e}, spread {spread:.2e}",
            )
        )
    return checks


def oracle_equivalence_suite(quick: bool = False) -> list[Check]:
    """PRT backbone of the softening-hardening plant against harmonic balance.

    Every accepted PRT point is paired with the oracle solution at exactly
    its amplitude; an amplitude the oracle could not solve fails the suite.
    """
    settings = _lab_settings(
        "misaligned",
        _nonlinear_plant(),
        ["prt"],
        prt={"levels": 6 if quick else 20, "level_max": 2.0},
    )
    scenario = build_scenario(settings)
    run = _lab_run(settings)
    points = run.backbone.points if run.backbone else []
    if not points:
        return [Check("oracle", "prt backbone", False, "no accepted points")]
    try:
        oracle = calibrate_backbone(scenario.plant, sorted({p.a for p in points}))
    except ConvergenceError as err:
        return [Check("oracle", "harmonic balance", False, str(err))]
    return oracle_checks(points, oracle)


def oracle_checks(points: Sequence[BackbonePoint], oracle: Backbone) -> list[Check]:
    """Compare identified points with the oracle solutions of equal amplitude."""
    reference = {p.a: p for p in oracle.points}
    f_err = 0.0
    d_err = 0.0
    unmatched = []
    for ident in points:
        ref = reference.get(ident.a)
        if ref is None:
            unmatched.append(ident.a)
            continue
        f_err = max(f_err, abs(ident.omega - ref.omega) / ref.omega)
        d_err = max(d_err, abs(ident.damping - ref.damping) / ref.damping)
    unsolved = ", ".join(f"{a:.4g}" for a in sorted({*oracle.failures, *unmatched}))
    return [
        Check(
            "oracle",
            "coverage",
            bool(points) and not unsolved,
            f"unsolved amplitudes: {unsolved}" if unsolved else f"{len(points)} points",
        ),
        Check("oracle", "frequency", f_err < ORACLE_FREQ_TOL, f"max rel error {f_err:.2e}"),
        Check("oracle", "damping", d_err < ORACLE_DAMPING_TOL, f"max rel error {d_err:.2e}"),
    ]


def pll_compliance_suite(quick: bool = False) -> list[Check]:
    """Phase error and frequency scatter on every accepted PRT level."""
    levels = 4 if quick else 10
    checks = []
    for name, configuration, plant in (
        ("linear", "linear", {"f1": F1, "d1": D1}),
        ("nonlinear", "misaligned", _nonlinear_plant()),
    ):
        settings = _lab_settings(configuration, plant, ["prt"], prt={"levels": levels})
        scenario = build_scenario(settings)
        rig = make_rig(scenario)
        records = run_protocol(rig, scenario, "prt")
        accepted = quality_filter(records, scenario.control.detector)
        phase_err = max(
            (math.degrees(abs(wrap_phase(r.phase_lag - r.set_phase))) for r in accepted),
            default=math.inf,
        )
        freq_std = max((r.quality.freq_std for r in accepted), default=math.inf)
        checks.append(
            Check(
                "pll",
                f"{name} phase error",
                phase_err < PLL_PHASE_ERROR_DEG,
                f"max {phase_err:.3f} deg over {len(accepted)}/{len(records)} levels",
            )
        )
        checks.append(
            Check(
                "pll",
                f"{name} frequency std",
                freq_std < PLL_FREQ_STD_HZ,
                f"max {freq_std:.4f} Hz",
            )
        )
    return checks


def _resonant_capture(
    plant: PlantConfig, voltage: float, *, center: float | None = None, settle: float = 4.0
) -> Capture:
    """Voltage-driven PLL at 90 degrees, recorded after ``settle`` seconds."""
    control = ControlConfig(pll=PllConfig(center=center))
    rig = Rig(plant, ExciterConfig(), control, SamplingConfig())
    rig.command(Setpoint(LoopMode.VOLTAGE, math.pi / 2, voltage))
    rig.run(settle)
    return rig.run(1.0, record=True)


def pll_initialization_suite(quick: bool = False) -> list[Check]:
    """Linear lock frequency does not depend on where the PLL starts."""
    plant = build_plant_config(F1, F1 * 1.89, D1, D1 / 10)
    factors = (0.9, 1.1) if quick else (0.9, 0.95, 1.0, 1.05, 1.1)
    checks = []
    for factor in factors:
        capture = _resonant_capture(plant, 0.5, center=factor * plant.omega1)
        err = abs(capture.mean_freq - plant.omega1) / plant.omega1
        checks.append(
            Check(
                "pll init",
                f"start {factor:.2f} f1",
                not capture.diverged and err < LINEAR_FREQ_TOL,
                f"rel error {err:.2e}",
            )
        )
    return checks


def time_averaged_energy(capture: Capture, plant: PlantConfig) -> float:
    """Mean mechanical energy over the recorded samples."""
    return float(
        np.mean(
            [
                mechanical_energy(PlantState.from_tuple(y, 0.0), plant)
                for y in zip(*capture.eta, *capture.eta_dot, strict=True)
            ]
        )
    )


def energy_closure_suite() -> list[Check]:
    """Modal-harmonic energy split sums to the directly averaged energy."""
    harmonics = SamplingConfig().harmonics
    checks = []
    for name, plant, voltage in (
        ("linear", build_plant_config(F1, F1 * 1.89, D1, D1 / 10), 0.5),
        ("nonlinear", build_plant_config(F1, F1 * 1.84, D1, D1 / 10, DESIGN), 1.0),
    ):
        capture = _resonant_capture(plant, voltage)
        direct = time_averaged_energy(capture, plant)
        table = energy_decomposition(
            capture.modal_spectra(harmonics), capture.mean_freq, (plant.omega1, plant.omega2)
        )
        err = abs(table.total - direct) / direct
        checks.append(
            Check("energy", name, err < ENERGY_CLOSURE_TOL, f"rel error {err:.2e}")
        )
    return checks


def prt_rct_suite(quick: bool = False) -> list[Check]:
    """Backbone and circle fits agree on the drift-free nonlinear plant."""
    settings = _lab_settings(
        "misaligned",
        _nonlinear_plant(),
        ["prt", "rct"],
        prt={"levels": 8 if quick else 20, "level_min": 0.1},
        rct={"levels": 4 if quick else 10},
    )
    run = _lab_run(settings)
    if not run.consistency:
        return [Check("prt-rct", "levels", False, "; ".join(run.notes) or "no matched levels")]
    inside = sum(c.within for c in run.consistency)
    gap = max(c.freq_error_hz for c in run.consistency)
    return [
        Check(
            "prt-rct",
            f"{len(run.consistency)} levels",
            consistency_passes(run.consistency),
            f"max frequency gap {gap:.3f} Hz, damping inside {inside}/{len(run.consistency)}",
        )
    ]


def ect_suite(quick: bool = False) -> list[Check]:
    """ECT points against the FRC bounds, the backbone and the overhang."""
    settings = _lab_settings(
        "misaligned",
        _nonlinear_plant(),
        ["prt", "ect"],
        prt={"levels": 8 if quick else 20, "level_min": 0.1},
        ect={"level_min": 2.0, "points": 20 if quick else 40},
    )
    run = _lab_run(settings)
    checks = []
    if not run.ect_coverage:
        return [Check("ect", "bounds", False, "; ".join(run.notes) or "no accepted points")]
    for level, share in sorted(run.ect_coverage.items()):
        checks.append(
            Check("ect", f"bounds {level:g}", share >= ECT_COVERAGE, f"inside {100 * share:.0f} %")
        )
    for check in run.resonance:
        checks.append(
            Check(
                "ect",
                f"resonance {check.level:g}",
                check.passes(),
                f"{check.freq_error_hz:.3f} Hz, amplitude {100 * check.amp_error:.2f} %",
            )
        )
    top = max(run.ect_coverage)
    accepted = sorted(
        (r for r in run.records["ect"] if r.accepted and r.level == top),
        key=lambda r: r.set_phase,
    )
    turns = sum(b.omega < a.omega for a, b in itertools.pairwise(accepted))
    checks.append(
        Check("ect", f"overhang {top:g}", turns > 0, f"{turns} backward frequency steps")
    )
    return checks


def drift_suite(quick: bool = False) -> list[Check]:
    """Repeated voltage-stepped PRT under exciter drift shifts its maxima one way."""
    repeat = 3
    rate = -0.0005
    settings = _lab_settings(
        "aligned",
        _nonlinear_plant(frequency_ratio=1.89),
        ["prt"],
        sections={"exciter": {"drift_enabled": True, "drift_rate": rate}},
        prt={"levels": 4 if quick else 10},
    )
    scenario = build_scenario(settings)
    rig = make_rig(scenario)
    maxima = []
    gains = []
    times = []
    for _ in range(repeat):
        rig.reset(keep_drift=True)
        records = run_protocol(rig, scenario, "prt")
        maxima.append(max((r.amplitude for r in records if r.accepted), default=math.nan))
        gains.append(rig.exciter.effective_gain(rig.t))
        times.append(rig.t)
    steps = np.diff(maxima)
    shifts = np.diff(gains) / scenario.exciter.gain
    expected = rate * np.diff(times)
    return [
        Check(
            "drift",
            "maxima",
            bool(np.all(np.sign(steps) == np.sign(rate))),
            ", ".join(f"{1e3 * m:.4f}" for m in maxima) + " mm",
        ),
        Check(
            "drift",
            "gain",
            bool(np.allclose(shifts, expected, rtol=1e-9, atol=0.0)),
            ", ".join(f"{g:.4f}" for g in gains),
        ),
    ]


def determinism_suite(quick: bool = False) -> list[Check]:
    """Executing a scenario twice rewrites byte-identical files."""
    settings = _lab_settings(
        "linear",
        {"f1": F1, "d1": D1},
        ["prt", "rct"],
        noise_level=0.002,
        prt={"levels": 2 if quick else 6},
        rct={"levels": 2, "points": 6},
    )
    with tempfile.TemporaryDirectory() as tmp:
        scenario = with_overrides(build_scenario(settings), output_dir=Path(tmp))
        first = {p.name: p.read_bytes() for run in execute(scenario) for p in run.files}
        second = {p.name: p.read_bytes() for run in execute(scenario) for p in run.files}
    differing = sorted(name for name in first if first[name] != second.get(name))
    return [
        Check(
            "determinism",
            f"{len(first)} files",
            bool(first) and first.keys() == second.keys() and not differing,
            ", ".join(differing) or "identical",
        )
    ]


def run_selftest(*, quick: bool = False) -> list[Check]:
    """Run the suites; quick mode trims the simulation-heavy ones."""
    plant = build_plant_config(F1, F1 * 1.84, D1, D1 / 10, DESIGN)
    suites: list[tuple[str, Callable[[], list[Check]]]] = [
        ("quality", quality_boundary_suite),
        ("metric", amplitude_metric_suite),
        ("circle", circle_fit_suite),
        ("frc", lambda: frc_identity_suite(plant)),
        ("oracle consistency", oracle_consistency_suite),
        ("interaction", lambda: modal_interaction_suite(12 if quick else 24)),
        ("linear", lambda: linear_identity_suite(quick)),
        ("energy closure", energy_closure_suite),
        ("determinism", lambda: determinism_suite(quick)),
    ]
    if not quick:
        suites += [
            ("oracle equivalence", oracle_equivalence_suite),
            ("pll compliance", pll_compliance_suite),
            ("pll initialization", pll_initialization_suite),
            ("prt-rct consistency", prt_rct_suite),
            ("ect cross-validation", ect_suite),
            ("drift", drift_suite),
        ]
    checks: list[Check] = []
    for name, suite in suites:
        LOGGER.info("Selftest: %s", name)
        results = suite()
        for check in results:
            log = LOGGER.debug if check.passed else LOGGER.error
            verdict = "ok" if check.passed else "FAIL"
            log("%s %s: %s (%s)", check.suite, check.name, verdict, check.detail)
        checks.extend(results)
    return checks
