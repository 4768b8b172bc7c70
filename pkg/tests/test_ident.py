"""Tests for backbone, circle-fit, FRC and energy identification."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from vibelab.control import Quality
from vibelab.data import LevelFit
from vibelab.dsp import TWO_PI, HarmonicSpectrum
from vibelab.exceptions import IdentificationError
from vibelab.ident import (
    Backbone,
    BackbonePoint,
    CircleFit,
    ModalContext,
    NyquistSet,
    backbone_from_prt,
    circle_fit,
    consistency_passes,
    ect_resonance,
    energy_decomposition,
    frc_bounds,
    modal_damping_ratio,
    power_balance_damping,
    predict_frc,
    prt_rct_consistency,
)
from vibelab.protocols import SteadyRecord

OMEGA = TWO_PI * 101.0
D = 0.004


def _record(
    omega: float, q1: complex, ab1: complex, *, diverged: bool = False, level_index: int = 0
) -> SteadyRecord:
    response = HarmonicSpectrum(omega, np.array([0, q1, 0], dtype=complex))
    velocity = HarmonicSpectrum(omega, np.array([0, 1j * omega * q1, 0], dtype=complex))
    return SteadyRecord(
        protocol="prt",
        direction="up",
        level_index=level_index,
        point_index=0,
        level=1.0,
        set_phase=math.pi / 2,
        omega=omega,
        phase_lag=math.pi / 2,
        voltage=1.0,
        response=response,
        response_velocity=velocity,
        base=HarmonicSpectrum(omega, np.array([0, ab1, 0], dtype=complex)),
        quality=Quality(0.1, 0.01, 0.1, accepted=True),
        diverged=diverged,
    )


def _resonant(eta: float, damping: float = D, b: float = 1.0, e: float = 1.0) -> SteadyRecord:
    """Linear mode driven at its natural frequency with modal amplitude ``eta``."""
    accel = 2 * damping * OMEGA**2 * eta / b
    # At resonance the modal response lags the forcing by a quarter period.
    base_hat = -1j * accel
    eta_hat = -b * base_hat / (2j * damping * OMEGA**2)
    return _record(OMEGA, e * eta_hat, base_hat)


def _linear_backbone(damping: float = D, omega: float = OMEGA) -> Backbone:
    return Backbone(
        [
            BackbonePoint(a=a, omega=omega, damping=damping, modal_amplitude=a)
            for a in np.linspace(0.1e-3, 2e-3, 20)
        ]
    )


# -- power balance ---------------------------------------------------


def test_modal_damping_ratio_exact_for_linear_mode() -> None:
    record = _resonant(1e-3, b=0.8, e=1.2)
    damping = modal_damping_ratio(
        complex(record.base.coeffs[1]), complex(record.response.coeffs[1]), OMEGA, 0.8, 1.2
    )
    assert damping == pytest.approx(D, rel=1e-12)


def test_power_balance_below_noise_floor() -> None:
    record = _record(OMEGA, 1e-12, -1j)
    with pytest.raises(IdentificationError, match="amplitude_below_noise"):
        power_balance_damping(record, ModalContext())


def test_backbone_from_prt_keeps_direction_and_modal_amplitude() -> None:
    records = [_resonant(a) for a in (0.5e-3, 1e-3)]
    backbone = backbone_from_prt(records, ModalContext())
    assert len(backbone.points) == 2
    for point, a in zip(backbone.points, (0.5e-3, 1e-3), strict=True):
        assert point.direction == "up"
        assert point.eta == pytest.approx(a)
        assert point.damping == pytest.approx(D)
        assert point.omega == OMEGA


def test_backbone_from_prt_skips_diverged_and_unphysical() -> None:
    good = _resonant(1e-3)
    diverged = _record(OMEGA, 1e-3, -1j, diverged=True)
    # In-phase response gives zero power: non-physical damping.
    unphysical = _record(OMEGA, 1e-3 + 0j, 1.0 + 0j, level_index=2)
    backbone = backbone_from_prt([good, diverged, unphysical], ModalContext())
    assert len(backbone.points) == 1
    assert backbone.failures == [pytest.approx(1e-3)]


def test_backbone_from_prt_empty() -> None:
    with pytest.raises(IdentificationError, match="empty_records"):
        backbone_from_prt([_record(OMEGA, 1e-3, -1j, diverged=True)], ModalContext())


def test_backbone_interpolation() -> None:
    backbone = Backbone(
        [
            BackbonePoint(a=2e-3, omega=2.0, damping=0.02),
            BackbonePoint(a=1e-3, omega=1.0, damping=0.01),
        ]
    )
    assert backbone.omega_at(1.5e-3) == pytest.approx(1.5)
    assert backbone.damping_at(1.5e-3) == pytest.approx(0.015)
    assert backbone.by_direction("down").points == []


# -- circle fit ------------------------------------------------------


def _frf(omegas: np.ndarray, damping: float) -> np.ndarray:
    """Relative response over base displacement of a viscously damped mode."""
    return omegas**2 / (OMEGA**2 - omegas**2 + 2j * damping * OMEGA * omegas)


def _phase_grid(damping: float, low: float, high: float, count: int) -> np.ndarray:
    """Frequencies at which the response lags the base by ``low``..``high`` degrees."""
    cot = 1 / np.tan(np.radians(np.linspace(low, high, count)))
    return OMEGA * (-damping * cot + np.sqrt((damping * cot) ** 2 + 1))


@pytest.mark.parametrize("damping", [0.002, 0.004, 0.01])
def test_circle_fit_exact_on_viscous_damping(damping: float) -> None:
    omegas = OMEGA * np.linspace(0.985, 1.02, 11)
    fit = circle_fit(NyquistSet(1e-3, omegas, _frf(omegas, damping)))
    assert fit.d_mean == pytest.approx(damping, rel=1e-6)
    assert fit.d_max - fit.d_min < 1e-6 * damping
    assert fit.omega_n == pytest.approx(OMEGA, rel=1e-9)
    assert fit.residual < 1e-9
    assert len(fit.pair_dampings) > 1


def test_circle_fit_every_pair_on_phase_grid() -> None:
    omegas = _phase_grid(D, 75.0, 105.0, 12)
    lag = -np.degrees(np.angle(_frf(omegas, D)))
    np.testing.assert_allclose(lag, np.linspace(75.0, 105.0, 12), atol=1e-9)
    fit = circle_fit(NyquistSet(1e-3, omegas, _frf(omegas, D)))
    assert len(fit.pair_dampings) == 36
    for pair in fit.pair_dampings:
        assert pair == pytest.approx(D, rel=1e-6)


def test_circle_fit_point_at_resonance() -> None:
    omegas = OMEGA * np.array([0.996, 0.998, 1.0, 1.002, 1.004])
    fit = circle_fit(NyquistSet(1e-3, omegas, _frf(omegas, D)))
    assert fit.omega_n == pytest.approx(OMEGA, rel=1e-9)
    assert fit.resonant_index == 2
    assert fit.d_mean == pytest.approx(D, rel=1e-6)


def test_circle_fit_needs_points() -> None:
    omegas = OMEGA * np.array([0.99, 1.0, 1.01])
    with pytest.raises(IdentificationError, match="too_few_points"):
        circle_fit(NyquistSet(1e-3, omegas, _frf(omegas, D)))


def test_circle_fit_one_sided() -> None:
    omegas = OMEGA * np.linspace(0.95, 0.99, 6)
    with pytest.raises(IdentificationError, match="one_sided_points"):
        circle_fit(NyquistSet(1e-3, omegas, _frf(omegas, D)))


def test_circle_fit_row() -> None:
    omegas = OMEGA * np.linspace(0.99, 1.01, 8)
    row = circle_fit(NyquistSet(1e-3, omegas, _frf(omegas, D))).to_row()
    assert row["freq_n_hz"] == pytest.approx(101.0)
    assert row["pairs"] > 0


# -- FRC prediction --------------------------------------------------


def test_predict_frc_matches_linear_oscillator() -> None:
    level = 2.0
    prediction = predict_frc(_linear_backbone(), level)
    assert prediction.points
    for point in prediction.points:
        w = point.omega
        modulus = abs(OMEGA**2 - w**2 + 2j * D * OMEGA * w)
        assert modulus * point.modal_amplitude == pytest.approx(level, rel=1e-9)


def test_predict_frc_peak_on_backbone() -> None:
    backbone = _linear_backbone()
    point = backbone.points[7]
    level = 2 * D * OMEGA**2 * point.eta
    prediction = predict_frc(backbone, level)
    above = [p for p in prediction.points if p.flank == "above" and p.modal_amplitude == point.eta]
    assert above
    assert above[0].omega == pytest.approx(OMEGA, rel=1e-9)
    assert prediction.peak.modal_amplitude == pytest.approx(point.eta, rel=1e-4)


def test_predict_frc_flanks_ordered() -> None:
    prediction = predict_frc(_linear_backbone(), 1.0)
    amp_b, om_b = prediction.flank("below")
    amp_a, om_a = prediction.flank("above")
    assert np.all(np.diff(amp_b) >= 0)
    assert np.all(om_b <= OMEGA * (1 + 1e-9))
    assert np.all(om_a >= OMEGA * math.sqrt(1 - 2 * D**2) * (1 - 1e-12))
    assert len(amp_a) == len(om_a)


def test_predict_frc_without_points() -> None:
    with pytest.raises(IdentificationError, match="missing_backbone"):
        predict_frc(Backbone(), 1.0)


def test_frc_bounds_collapse_for_identical_backbones() -> None:
    backbone = _linear_backbone()
    bounds = frc_bounds(backbone, backbone, 1.0)
    assert set(bounds.flanks) == {"below", "above"}
    assert bounds.width() == pytest.approx(0.0, abs=1e-9)
    amp, lo, _ = bounds.flanks["below"]
    k = len(amp) // 2
    assert bounds.contains(float(lo[k]), float(amp[k]), tol=1e-6)
    assert not bounds.contains(float(lo[k]) * 1.05, float(amp[k]))
    assert len(bounds.lower) == len(bounds.upper)


def test_frc_bounds_envelope() -> None:
    up = _linear_backbone(omega=OMEGA)
    down = _linear_backbone(omega=OMEGA * 1.002)
    bounds = frc_bounds(up, down, 1.0)
    assert bounds.width() > 0
    amp, lo, hi = bounds.flanks["below"]
    k = len(amp) // 2
    assert bounds.contains(0.5 * (lo[k] + hi[k]), float(amp[k]))


def test_frc_bounds_missing_direction() -> None:
    with pytest.raises(IdentificationError):
        frc_bounds(_linear_backbone(), Backbone(), 1.0)


# -- cross-validation ------------------------------------------------


def _ect_point(level: float, omega: float) -> SteadyRecord:
    """Linear-mode ECT steady state with the analytic lag."""
    denom = OMEGA**2 - omega**2 + 2j * D * OMEGA * omega
    lag = math.atan2(2 * D * OMEGA * omega, OMEGA**2 - omega**2)
    record = _record(omega, level / abs(denom) + 0j, level + 0j)
    return replace(record, protocol="ect", level=level, phase_lag=lag)


def test_ect_resonance_on_linear_mode() -> None:
    level = 2 * D * OMEGA**2 * 1e-3
    ratios = (0.995, 0.999, 1.0, 1.001, 1.005)
    records = [_ect_point(lvl, OMEGA * r) for lvl in (level / 2, level) for r in ratios]
    low, high = ect_resonance(records, _linear_backbone())
    assert (low.level, high.level) == (level / 2, level)
    for check in (low, high):
        assert check.omega == OMEGA
        assert check.phase_lag == pytest.approx(math.pi / 2)
        assert check.freq_error_hz == pytest.approx(0.0, abs=1e-9)
        assert check.amp_error < 0.01
        assert check.passes()
    assert high.amplitude == pytest.approx(1e-3)
    assert high.to_row()["passed"] is True


def test_ect_resonance_flags_shifted_backbone() -> None:
    level = 2 * D * OMEGA**2 * 1e-3
    records = [_ect_point(level, OMEGA * r) for r in (0.999, 1.0, 1.001)]
    (check,) = ect_resonance(records, _linear_backbone(omega=OMEGA + TWO_PI * 0.5))
    assert check.freq_error_hz == pytest.approx(0.5)
    assert not check.passes()
    assert check.passes(freq_tol_hz=0.6)


def _level_fit(index: int, level: float, omega: float, d_min: float, d_max: float) -> LevelFit:
    fit = CircleFit(
        d_mean=0.5 * (d_min + d_max),
        d_min=d_min,
        d_max=d_max,
        omega_n=omega,
        center=0j,
        radius=1.0,
        residual=0.0,
        resonant_index=0,
        pair_dampings=(d_min, d_max),
    )
    return LevelFit(index, level, fit)


def _fits(outside: int, gap_hz: float = 0.0) -> list[LevelFit]:
    fits = []
    for k, level in enumerate(np.linspace(0.2e-3, 1.8e-3, 10)):
        low, high = (1.1 * D, 1.2 * D) if k < outside else (0.95 * D, 1.05 * D)
        fits.append(_level_fit(k, float(level), OMEGA + TWO_PI * gap_hz, low, high))
    return fits


def test_prt_rct_consistency_rows() -> None:
    checks = prt_rct_consistency(_linear_backbone(), _fits(outside=2, gap_hz=0.1))
    assert len(checks) == 10
    assert [c.within for c in checks] == [False, False] + [True] * 8
    for check in checks:
        assert check.prt_omega == pytest.approx(OMEGA)
        assert check.prt_damping == pytest.approx(D)
        assert check.freq_error_hz == pytest.approx(0.1)
    row = checks[-1].to_row()
    assert row["level_index"] == 9
    assert row["within"] is True
    assert row["freq_rct_hz"] - row["freq_prt_hz"] == pytest.approx(0.1)


@pytest.mark.parametrize(
    ("outside", "gap_hz", "expected"),
    [(0, 0.0, True), (2, 0.0, True), (3, 0.0, False), (0, 0.19, True), (0, 0.25, False)],
)
def test_consistency_passes(outside: int, gap_hz: float, expected: bool) -> None:  # noqa: FBT001
    checks = prt_rct_consistency(_linear_backbone(), _fits(outside, gap_hz))
    assert consistency_passes(checks) is expected


def test_consistency_without_levels_or_backbone() -> None:
    assert not consistency_passes([])
    with pytest.raises(IdentificationError, match="missing_backbone"):
        prt_rct_consistency(Backbone(), _fits(0))


# -- energy ----------------------------------------------------------


def test_energy_single_mode_fundamental() -> None:
    spectra = (np.array([0, 1e-3, 0]), np.zeros(3, dtype=complex))
    table = energy_decomposition(spectra, OMEGA, (OMEGA, 2 * OMEGA))
    assert table.entry(1, 1) == pytest.approx(0.5 * OMEGA**2 * 1e-6)
    assert table.fraction(2, 2) == 0.0
    assert table.total == pytest.approx(table.entry(1, 1))


def test_energy_second_harmonic_of_mode_two() -> None:
    spectra = (np.array([1e-5, 1e-3, 0]), np.array([0, 0, 2e-4j]))
    table = energy_decomposition(spectra, OMEGA, (OMEGA, 2 * OMEGA))
    expected = 0.25 * ((2 * OMEGA) ** 2 + (2 * OMEGA) ** 2) * 4e-8 / (0.5 * OMEGA**2 * 1e-6)
    assert table.fraction(2, 2) == pytest.approx(expected)
    assert table.static[0] == pytest.approx(0.5 * OMEGA**2 * 1e-10)
    rows = table.to_rows()
    assert len(rows) == 2 * 3
    assert rows[0] == {"mode": 1, "harmonic": 0, "energy": table.static[0], "fraction": ""}


def test_energy_zero_reference() -> None:
    spectra = (np.zeros(3, dtype=complex), np.array([0, 1e-3, 0]))
    with pytest.raises(IdentificationError, match="zero_reference_energy"):
        energy_decomposition(spectra, OMEGA, (OMEGA, 2 * OMEGA))
