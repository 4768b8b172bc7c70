"""Identification: backbones, damping estimators, FRC prediction, energy split."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal

import numpy as np

from .const import LOGGER
from .dsp import TWO_PI, amplitude_metric
from .exceptions import (
    AMPLITUDE_BELOW_NOISE,
    DEGENERATE_CIRCLE,
    EMPTY_RECORDS,
    MISSING_BACKBONE,
    ONE_SIDED_POINTS,
    TOO_FEW_POINTS,
    ZERO_REFERENCE_ENERGY,
    IdentificationError,
)

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from .data import LevelFit
    from .protocols import SteadyRecord

Direction = Literal["up", "down"]
Flank = Literal["below", "above"]

MIN_CIRCLE_POINTS = 4
DEFAULT_NOISE_FLOOR = 1e-9
FRC_GRID = 400
RESONANCE_FREQ_TOL_HZ = 0.2
RESONANCE_AMP_TOL = 0.03
CONSISTENCY_FREQ_TOL_HZ = 0.2
CONSISTENCY_SHARE = 0.8


@dataclass(frozen=True, slots=True)
class BackbonePoint:
    """One phase-resonant point: amplitude, modal frequency and damping.

    ``a`` is the multi-harmonic response amplitude; ``modal_amplitude`` is
    the fundamental modal amplitude |q̂_1|/|e_proj|.
    """

    a: float
    omega: float
    damping: float
    direction: Direction = "up"
    e_proj: float = 1.0
    b_proj: float = 1.0
    modal_amplitude: float = 0.0
    base_accel: float = 0.0
    residual: float = 0.0
    level_index: int = -1
    modal_spectra: tuple[np.ndarray, ...] | None = field(default=None, compare=False, repr=False)

    @property
    def eta(self) -> float:
        """Fundamental modal amplitude, falling back to a/|e_proj|."""
        return self.modal_amplitude or self.a / abs(self.e_proj)

    @property
    def is_physical(self) -> bool:
        """Return True when amplitude, frequency and damping are admissible."""
        return self.a > 0 and self.omega > 0 and 0 < self.damping < 1

    def to_row(self) -> dict[str, object]:
        """Flat CSV row."""
        return {
            "direction": self.direction,
            "level_index": self.level_index,
            "a": self.a,
            "modal_amplitude": self.eta,
            "freq_hz": self.omega / TWO_PI,
            "damping": self.damping,
            "e_proj": self.e_proj,
            "b_proj": self.b_proj,
            "base_accel": self.base_accel,
            "residual": self.residual,
        }

    @classmethod
    def from_row(cls, row: dict[str, str]) -> BackbonePoint:
        """Inverse of :meth:`to_row`."""
        return cls(
            a=float(row["a"]),
            omega=TWO_PI * float(row["freq_hz"]),
            damping=float(row["damping"]),
            direction=row["direction"],  # type: ignore[arg-type]
            e_proj=float(row["e_proj"]),
            b_proj=float(row["b_proj"]),
            modal_amplitude=float(row["modal_amplitude"]),
            base_accel=float(row["base_accel"]),
            residual=float(row["residual"]),
            level_index=int(row["level_index"]),
        )


@dataclass(slots=True)
class Backbone:
    """Amplitude-dependent modal properties; ``failures`` lists skipped amplitudes."""

    points: list[BackbonePoint] = field(default_factory=list)
    failures: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        """Number of points."""
        return len(self.points)

    def by_direction(self, direction: Direction) -> Backbone:
        """Points recorded in one stepping direction."""
        return Backbone([p for p in self.points if p.direction == direction])

    def sorted(self) -> Backbone:
        """Points ordered by increasing amplitude."""
        return Backbone(sorted(self.points, key=lambda p: p.a), list(self.failures))

    @property
    def amplitudes(self) -> np.ndarray:
        """Response amplitudes a."""
        return np.array([p.a for p in self.points])

    @property
    def omegas(self) -> np.ndarray:
        """Modal frequencies in rad/s."""
        return np.array([p.omega for p in self.points])

    @property
    def dampings(self) -> np.ndarray:
        """Damping ratios."""
        return np.array([p.damping for p in self.points])

    def omega_at(self, a: float) -> float:
        """Linearly interpolated modal frequency at response amplitude ``a``."""
        ordered = self.sorted()
        return float(np.interp(a, ordered.amplitudes, ordered.omegas))

    def damping_at(self, a: float) -> float:
        """Linearly interpolated damping ratio at response amplitude ``a``."""
        ordered = self.sorted()
        return float(np.interp(a, ordered.amplitudes, ordered.dampings))


# --- Power balance ---


@dataclass(frozen=True, slots=True)
class ModalContext:
    """Projections of the resonant mode: pick (e) and base influence (b)."""

    e_proj: float = 1.0
    b_proj: float = 1.0
    noise_floor: float = DEFAULT_NOISE_FLOOR

    @classmethod
    def from_factors(
        cls,
        b_factors: Sequence[float],
        e_factors: Sequence[float],
        noise_floor: float = DEFAULT_NOISE_FLOOR,
    ) -> ModalContext:
        """Context for the first mode of a plant's factor pairs."""
        return cls(e_proj=e_factors[0], b_proj=b_factors[0], noise_floor=noise_floor)


def modal_damping_ratio(
    base_accel_hat: complex,
    response_hat: complex,
    omega: float,
    b_proj: float,
    e_proj: float,
) -> float:
    """Damping ratio from the fundamental-harmonic power balance.

    For η'' + 2Dωη' + ω²η = f at Ω = ω the period average of f·η' over the
    fundamental is P̄ = ½Re{f̂·conj(iΩη̂)} = DΩ³|η̂|², hence D = P̄/(Ω³a²).
    Here f̂ = -b·â_b and η̂ = q̂_1/e.
    """
    force = -b_proj * base_accel_hat
    eta_hat = response_hat / e_proj
    power = 0.5 * (force * np.conj(1j * omega * eta_hat)).real
    return float(power / (omega**3 * abs(eta_hat) ** 2))


def power_balance_damping(record: SteadyRecord, context: ModalContext) -> float:
    """Damping ratio of one phase-resonant record."""
    response_hat = complex(record.response.coeffs[1])
    if abs(response_hat) <= context.noise_floor:
        message = f"{AMPLITUDE_BELOW_NOISE}: |q1|={abs(response_hat):.3g} m"
        raise IdentificationError(message)
    return modal_damping_ratio(
        complex(record.base.coeffs[1]),
        response_hat,
        record.omega,
        context.b_proj,
        context.e_proj,
    )


def backbone_from_prt(records: Iterable[SteadyRecord], context: ModalContext) -> Backbone:
    """One backbone point per steady PRT record, direction preserved."""
    records = [r for r in records if not r.diverged]
    if not records:
        message = EMPTY_RECORDS
        raise IdentificationError(message)
    backbone = Backbone()
    for record in records:
        try:
            damping = power_balance_damping(record, context)
        except IdentificationError as err:
            LOGGER.warning("Skipping level %d: %s", record.level_index, err)
            backbone.failures.append(amplitude_metric(record.response))
            continue
        point = BackbonePoint(
            a=amplitude_metric(record.response),
            omega=record.omega,
            damping=damping,
            direction=record.direction,
            e_proj=context.e_proj,
            b_proj=context.b_proj,
            modal_amplitude=abs(record.response.coeffs[1]) / abs(context.e_proj),
            base_accel=abs(record.base.coeffs[1]),
            level_index=record.level_index,
            modal_spectra=record.modal,
        )
        if not point.is_physical:
            LOGGER.warning(
                "Level %d gives non-physical damping %.4g, skipped", record.level_index, damping
            )
            backbone.failures.append(point.a)
            continue
        backbone.points.append(point)
    return backbone


# --- Circle fit ---


@dataclass(slots=True)
class NyquistSet:
    """FRF points of one amplitude level, H = q̂_1/q̂_b1 at each Ω."""

    level: float
    omegas: np.ndarray
    frf: np.ndarray
    level_index: int = -1

    def __post_init__(self) -> None:
        """Coerce to arrays."""
        self.omegas = np.asarray(self.omegas, dtype=float)
        self.frf = np.asarray(self.frf, dtype=complex)


@dataclass(frozen=True, slots=True)
class CircleFit:
    """Circle-fit damping: spread over all (below, above) pairs."""

    d_mean: float
    d_min: float
    d_max: float
    omega_n: float
    center: complex
    radius: float
    residual: float
    resonant_index: int
    pair_dampings: tuple[float, ...]

    def to_row(self) -> dict[str, object]:
        """Flat CSV row."""
        return {
            "freq_n_hz": self.omega_n / TWO_PI,
            "d_mean": self.d_mean,
            "d_min": self.d_min,
            "d_max": self.d_max,
            "center_re": self.center.real,
            "center_im": self.center.imag,
            "radius": self.radius,
            "residual": self.residual,
            "resonant_index": self.resonant_index,
            "pairs": len(self.pair_dampings),
        }


def _fit_circle(points: np.ndarray) -> tuple[complex, float, float]:
    """Algebraic least-squares circle through complex points: (center, radius, residual)."""
    scale = float(np.max(np.abs(points)))
    z = points / scale
    x, y = z.real, z.imag
    design = np.column_stack((x, y, np.ones_like(x)))
    if np.linalg.matrix_rank(design, tol=1e-10) < 3:  # noqa: PLR2004
        message = DEGENERATE_CIRCLE
        raise IdentificationError(message)
    (a, b, c), *_ = np.linalg.lstsq(design, -(x**2 + y**2), rcond=None)
    center = complex(-a / 2, -b / 2)
    r2 = center.real**2 + center.imag**2 - c
    spread = float(np.max(np.abs(z - z.mean())))
    if r2 <= 0 or math.sqrt(r2) > 1e3 * max(spread, 1e-300):
        message = DEGENERATE_CIRCLE
        raise IdentificationError(message)
    radius = math.sqrt(r2)
    residual = float(np.sqrt(np.mean((np.abs(z - center) - radius) ** 2))) / radius
    return center * scale, radius * scale, residual


def circle_fit(nyq: NyquistSet) -> CircleFit:
    """Damping ratio from the Nyquist circle of one amplitude level.

    For viscous damping H/Ω is an exact circle through the origin, with the
    resonant point opposite it. A point at Ω subtending ψ at the center from
    there satisfies tan(ψ/2) = |Ω² - ωn²| / (2DωnΩ). The two points closest
    to resonance give ωn, and each (below, above) pair gives
    D = (Ωb² - Ωa²) / (2ωn (Ωa·tan(ψa/2) + Ωb·tan(ψb/2))).
    """
    if len(nyq.omegas) < MIN_CIRCLE_POINTS:
        message = f"{TOO_FEW_POINTS}: {len(nyq.omegas)} < {MIN_CIRCLE_POINTS}"
        raise IdentificationError(message)
    g = nyq.frf / nyq.omegas
    center, radius, residual = _fit_circle(g)
    if abs(center) == 0:
        message = DEGENERATE_CIRCLE
        raise IdentificationError(message)
    u = center / abs(center)
    psi = np.angle((g - center) * np.conj(u))
    positive = psi > 0
    if positive.all() or not positive.any():
        message = ONE_SIDED_POINTS
        raise IdentificationError(message)
    # The side holding the lower frequencies is "below" resonance.
    lower_first = nyq.omegas[positive].mean() < nyq.omegas[~positive].mean()
    below_mask = positive if lower_first else ~positive
    below = np.flatnonzero(below_mask)
    above = np.flatnonzero(~below_mask)
    t = np.tan(np.abs(psi) / 2)
    ia = below[np.argmin(t[below])]
    ib = above[np.argmin(t[above])]
    w = nyq.omegas
    wa, wb = w[ia], w[ib]
    omega_n = math.sqrt(wa * wb * (wa * t[ib] + wb * t[ia]) / (wa * t[ia] + wb * t[ib]))
    pairs = tuple(
        float((w[j] ** 2 - w[i] ** 2) / (2 * omega_n * (w[i] * t[i] + w[j] * t[j])))
        for i, j in itertools.product(below, above)
    )
    resonant = int(ia if t[ia] <= t[ib] else ib)
    return CircleFit(
        d_mean=float(np.mean(pairs)),
        d_min=float(np.min(pairs)),
        d_max=float(np.max(pairs)),
        omega_n=omega_n,
        center=complex(center),
        radius=radius,
        residual=residual,
        resonant_index=resonant,
        pair_dampings=pairs,
    )


# --- FRC prediction ---


@dataclass(frozen=True, slots=True)
class FrcPoint:
    """Predicted steady state on one flank of the resonance."""

    omega: float
    amplitude: float
    modal_amplitude: float
    flank: Flank
    phase: float


@dataclass(slots=True)
class FrcPrediction:
    """Single-nonlinear-mode frequency response at one base-acceleration level."""

    level: float
    points: list[FrcPoint] = field(default_factory=list)

    def flank(self, flank: Flank) -> tuple[np.ndarray, np.ndarray]:
        """(amplitude, Ω) arrays of one flank ordered by amplitude."""
        selected = sorted((p for p in self.points if p.flank == flank), key=lambda p: p.amplitude)
        return (
            np.array([p.amplitude for p in selected]),
            np.array([p.omega for p in selected]),
        )

    @property
    def peak(self) -> FrcPoint:
        """Largest predicted amplitude."""
        return max(self.points, key=lambda p: p.amplitude)


def predict_frc(backbone: Backbone, level: float, *, grid: int = FRC_GRID) -> FrcPrediction:
    """Frequency response implied by a backbone at base-acceleration amplitude ``level``.

    For every modal amplitude a the squared modulus of the modal oscillator
    gives a quadratic in y = Ω²:
    y² - 2ω²(1 - 2D²)y + ω⁴ - R² = 0 with R = |b|·level/a.
    Each positive root is one flank point. Amplitudes with no real root are
    out of reach at this level and are skipped.
    """
    usable = [p for p in backbone.points if p.is_physical]
    if not usable:
        message = MISSING_BACKBONE
        raise IdentificationError(message)
    usable.sort(key=lambda p: p.eta)
    eta = np.array([p.eta for p in usable])
    omega = np.array([p.omega for p in usable])
    damping = np.array([p.damping for p in usable])
    b_proj = np.array([abs(p.b_proj) for p in usable])
    e_proj = np.array([abs(p.e_proj) for p in usable])
    fine = np.unique(np.concatenate((np.linspace(eta[0], eta[-1], grid), eta)))
    w = np.interp(fine, eta, omega)
    d = np.interp(fine, eta, damping)
    b = np.interp(fine, eta, b_proj)
    e = np.interp(fine, eta, e_proj)
    r = b * level / fine
    mid = w**2 * (1 - 2 * d**2)
    disc = mid**2 - (w**4 - r**2)
    prediction = FrcPrediction(level=level)
    for k in np.flatnonzero(disc >= 0):
        root = math.sqrt(disc[k])
        for flank, y in (("below", mid[k] - root), ("above", mid[k] + root)):
            if y <= 0:
                continue
            om = math.sqrt(y)
            prediction.points.append(
                FrcPoint(
                    omega=om,
                    amplitude=float(e[k] * fine[k]),
                    modal_amplitude=float(fine[k]),
                    flank=flank,  # type: ignore[arg-type]
                    phase=math.atan2(2 * d[k] * w[k] * om, w[k] ** 2 - y),
                )
            )
    return prediction


@dataclass(slots=True)
class FrcBounds:
    """Frequency envelope of two predictions, per flank, over common amplitudes."""

    level: float
    flanks: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=dict)

    @property
    def lower(self) -> list[tuple[float, float]]:
        """(Ω, amplitude) pairs at the lower frequency bound."""
        return [
            (float(lo), float(amp))
            for amp_arr, lo_arr, _ in self.flanks.values()
            for amp, lo in zip(amp_arr, lo_arr, strict=True)
        ]

    @property
    def upper(self) -> list[tuple[float, float]]:
        """(Ω, amplitude) pairs at the upper frequency bound."""
        return [
            (float(hi), float(amp))
            for amp_arr, _, hi_arr in self.flanks.values()
            for amp, hi in zip(amp_arr, hi_arr, strict=True)
        ]

    def width(self) -> float:
        """Widest frequency gap between the bounds in rad/s."""
        gaps = [float(np.max(hi - lo)) for _, lo, hi in self.flanks.values() if len(lo)]
        return max(gaps, default=0.0)

    def contains(self, omega: float, amplitude: float, tol: float = 0.0) -> bool:
        """Return True when (Ω, amplitude) lies between the bounds on some flank."""
        for amp, lo, hi in self.flanks.values():
            if len(amp) < 2 or not amp[0] <= amplitude <= amp[-1]:  # noqa: PLR2004
                continue
            low = float(np.interp(amplitude, amp, lo))
            high = float(np.interp(amplitude, amp, hi))
            if low - tol <= omega <= high + tol:
                return True
        return False


def frc_bounds(
    backbone_up: Backbone, backbone_down: Backbone, level: float, *, grid: int = FRC_GRID
) -> FrcBounds:
    """Envelope of the up- and down-stepping FRC predictions."""
    if not backbone_up.points or not backbone_down.points:
        message = MISSING_BACKBONE
        raise IdentificationError(message)
    up = predict_frc(backbone_up, level, grid=grid)
    down = predict_frc(backbone_down, level, grid=grid)
    bounds = FrcBounds(level=level)
    for flank in ("below", "above"):
        amp_u, om_u = up.flank(flank)  # type: ignore[arg-type]
        amp_d, om_d = down.flank(flank)  # type: ignore[arg-type]
        if len(amp_u) < 2 or len(amp_d) < 2:  # noqa: PLR2004
            continue
        lo_a = max(amp_u[0], amp_d[0])
        hi_a = min(amp_u[-1], amp_d[-1])
        if hi_a <= lo_a:
            continue
        amp = np.linspace(lo_a, hi_a, grid)
        iu = np.interp(amp, amp_u, om_u)
        idn = np.interp(amp, amp_d, om_d)
        bounds.flanks[flank] = (amp, np.minimum(iu, idn), np.maximum(iu, idn))
    return bounds


# --- Cross-validation ---


@dataclass(frozen=True, slots=True)
class ResonanceCheck:
    """ECT point nearest phase resonance against the backbone at one level."""

    level: float
    omega: float
    amplitude: float
    phase_lag: float
    backbone_omega: float
    predicted_amplitude: float

    @property
    def freq_error_hz(self) -> float:
        """Distance to the backbone frequency at the measured amplitude."""
        return abs(self.omega - self.backbone_omega) / TWO_PI

    @property
    def amp_error(self) -> float:
        """Relative distance to the predicted resonance amplitude."""
        return abs(self.amplitude - self.predicted_amplitude) / self.predicted_amplitude

    def passes(
        self, freq_tol_hz: float = RESONANCE_FREQ_TOL_HZ, amp_tol: float = RESONANCE_AMP_TOL
    ) -> bool:
        """Return True when frequency and amplitude both agree."""
        return self.freq_error_hz < freq_tol_hz and self.amp_error < amp_tol

    def to_row(self) -> dict[str, object]:
        """Flat report row."""
        return {
            "level": self.level,
            "freq_hz": self.omega / TWO_PI,
            "backbone_freq_hz": self.backbone_omega / TWO_PI,
            "amplitude": self.amplitude,
            "predicted_amplitude": self.predicted_amplitude,
            "lag_deg": math.degrees(self.phase_lag),
            "passed": self.passes(),
        }


def ect_resonance(records: Iterable[SteadyRecord], backbone: Backbone) -> list[ResonanceCheck]:
    """Per excitation level, the point with lag closest to 90 degrees.

    Its frequency is compared with the backbone at the measured amplitude
    and its amplitude with the peak of the FRC predicted at that level.
    """
    by_level: dict[float, list[SteadyRecord]] = {}
    for record in records:
        by_level.setdefault(record.level, []).append(record)
    checks = []
    for level in sorted(by_level):
        nearest = min(by_level[level], key=lambda r: abs(r.phase_lag - math.pi / 2))
        prediction = predict_frc(backbone, level)
        if not prediction.points:
            LOGGER.debug("No predicted FRC at level %g, skipping resonance check", level)
            continue
        checks.append(
            ResonanceCheck(
                level=level,
                omega=nearest.omega,
                amplitude=nearest.amplitude,
                phase_lag=nearest.phase_lag,
                backbone_omega=backbone.omega_at(nearest.amplitude),
                predicted_amplitude=prediction.peak.amplitude,
            )
        )
    return checks


@dataclass(frozen=True, slots=True)
class ConsistencyCheck:
    """PRT backbone against one RCT circle fit at the same response amplitude."""

    level_index: int
    level: float
    prt_omega: float
    prt_damping: float
    rct_omega: float
    d_min: float
    d_mean: float
    d_max: float

    @property
    def freq_error_hz(self) -> float:
        """Gap between the PRT and circle-fit natural frequencies."""
        return abs(self.prt_omega - self.rct_omega) / TWO_PI

    @property
    def within(self) -> bool:
        """PRT damping inside the all-pairs interval."""
        return self.d_min <= self.prt_damping <= self.d_max

    def to_row(self) -> dict[str, object]:
        """Flat report row."""
        return {
            "level_index": self.level_index,
            "a": self.level,
            "d_prt": self.prt_damping,
            "d_rct_min": self.d_min,
            "d_rct_mean": self.d_mean,
            "d_rct_max": self.d_max,
            "within": self.within,
            "freq_prt_hz": self.prt_omega / TWO_PI,
            "freq_rct_hz": self.rct_omega / TWO_PI,
        }


def prt_rct_consistency(backbone: Backbone, fits: Iterable[LevelFit]) -> list[ConsistencyCheck]:
    """Interpolate the backbone at each RCT level and pair it with that level's fit."""
    if not backbone.points:
        message = MISSING_BACKBONE
        raise IdentificationError(message)
    return [
        ConsistencyCheck(
            level_index=lf.level_index,
            level=lf.level,
            prt_omega=backbone.omega_at(lf.level),
            prt_damping=backbone.damping_at(lf.level),
            rct_omega=lf.fit.omega_n,
            d_min=lf.fit.d_min,
            d_mean=lf.fit.d_mean,
            d_max=lf.fit.d_max,
        )
        for lf in fits
    ]


def consistency_passes(
    checks: Sequence[ConsistencyCheck],
    *,
    freq_tol_hz: float = CONSISTENCY_FREQ_TOL_HZ,
    share: float = CONSISTENCY_SHARE,
) -> bool:
    """All frequencies agree and enough dampings fall inside their intervals."""
    if not checks:
        return False
    inside = sum(c.within for c in checks)
    return all(c.freq_error_hz < freq_tol_hz for c in checks) and inside >= share * len(checks)


# --- Energy decomposition ---


@dataclass(frozen=True, slots=True)
class EnergyTable:
    """Period-averaged mechanical energy per mode and harmonic.

    ``entries[m-1, h-1]`` is E(m,h) for h >= 1; ``static[m-1]`` is the
    h = 0 potential energy of a mean offset.
    """

    entries: np.ndarray
    static: np.ndarray
    omega: float

    @property
    def total(self) -> float:
        """Sum of all harmonic and static terms."""
        return float(self.entries.sum() + self.static.sum())

    def entry(self, mode: int, harmonic: int) -> float:
        """E(mode, harmonic), both 1-based."""
        return float(self.entries[mode - 1, harmonic - 1])

    @property
    def fractions(self) -> np.ndarray:
        """E(m,h)/E(1,1) for h >= 1."""
        return self.entries / self.entries[0, 0]

    def fraction(self, mode: int, harmonic: int) -> float:
        """E(mode, harmonic)/E(1,1)."""
        return float(self.fractions[mode - 1, harmonic - 1])

    def to_rows(self) -> list[dict[str, object]]:
        """One CSV row per (mode, harmonic), static terms as h = 0."""
        rows: list[dict[str, object]] = []
        for m in range(self.entries.shape[0]):
            static = float(self.static[m])
            rows.append({"mode": m + 1, "harmonic": 0, "energy": static, "fraction": ""})
            rows.extend(
                {
                    "mode": m + 1,
                    "harmonic": h + 1,
                    "energy": float(self.entries[m, h]),
                    "fraction": float(self.fractions[m, h]),
                }
                for h in range(self.entries.shape[1])
            )
        return rows


def energy_decomposition(
    modal_spectra: Sequence[np.ndarray], omega: float, modal_omegas: Sequence[float]
) -> EnergyTable:
    """Split the period-averaged energy into E(m,h) = ¼[(hΩ)² + ω_m²]|η̂_m(h)|²."""
    spectra = [np.asarray(s, dtype=complex) for s in modal_spectra]
    harmonics = len(spectra[0]) - 1
    h = np.arange(1, harmonics + 1)
    entries = np.array(
        [
            0.25 * ((h * omega) ** 2 + w**2) * np.abs(s[1:]) ** 2
            for s, w in zip(spectra, modal_omegas, strict=True)
        ]
    )
    static = np.array(
        [0.5 * w**2 * abs(s[0]) ** 2 for s, w in zip(spectra, modal_omegas, strict=True)]
    )
    if entries[0, 0] <= 0:
        message = ZERO_REFERENCE_ENERGY
        raise IdentificationError(message)
    return EnergyTable(entries=entries, static=static, omega=omega)
