"""Two-mode nonlinear modal plant under base excitation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate, optimize

from .const import DEFAULT_B_FACTORS, DEFAULT_E_FACTORS, DEFAULT_HARMONICS, LOGGER
from .exceptions import (
    DESIGN_UNREACHABLE,
    INVALID_PLANT,
    NON_FINITE_INPUT,
    NOT_CONVERGED,
    UNSTABLE_TIME_STEP,
    ConvergenceError,
    ValidationError,
)
from .ident import Backbone, BackbonePoint, modal_damping_ratio

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

ORACLE_TOLERANCE = 1e-8
MAX_HALVINGS = 5
STEPS_PER_PERIOD = 20

Coefficients = tuple[float, ...]


@dataclass(frozen=True, slots=True)
class PlantConfig:
    """Modal parameters of the structure under test.

    Modes are mass-normalized. ``b_factors`` are the base-influence projections
    and ``e_factors`` the response-pick projections of the two modes.
    """

    omega1: float
    omega2: float
    d1: float
    d2: float
    beta: float = 0.0
    gamma: float = 0.0
    alpha: float = 0.0
    mu: float = 0.0
    v_ref: float = 1.0
    a_slip: float = 0.0
    b_factors: tuple[float, float] = DEFAULT_B_FACTORS
    e_factors: tuple[float, float] = DEFAULT_E_FACTORS

    def __post_init__(self) -> None:
        """Validate on construction."""
        self.validate()

    def validate(self) -> None:
        """Reject parameter sets outside the model's domain."""
        values = [
            self.omega1,
            self.omega2,
            self.d1,
            self.d2,
            self.beta,
            self.gamma,
            self.alpha,
            self.mu,
            self.v_ref,
            self.a_slip,
            *self.b_factors,
            *self.e_factors,
        ]
        if not all(math.isfinite(v) for v in values):
            message = NON_FINITE_INPUT
            raise ValidationError(message)
        if len(self.b_factors) != 2 or len(self.e_factors) != 2:  # noqa: PLR2004
            message = f"{INVALID_PLANT}: two modes expected"
            raise ValidationError(message)
        if self.omega1 <= 0 or self.omega2 <= 0:
            message = f"{INVALID_PLANT}: modal frequencies must be positive"
            raise ValidationError(message)
        if not (0 <= self.d1 < 1 and 0 <= self.d2 < 1):
            message = f"{INVALID_PLANT}: damping ratios must lie in [0, 1)"
            raise ValidationError(message)
        if self.v_ref <= 0 or self.a_slip < 0 or self.mu < 0:
            message = f"{INVALID_PLANT}: friction parameters out of range"
            raise ValidationError(message)

    @property
    def is_linear(self) -> bool:
        """Return True when every nonlinear coefficient is zero."""
        return self.beta == 0 and self.gamma == 0 and self.alpha == 0 and self.mu == 0

    @property
    def max_frequency_hz(self) -> float:
        """Highest linear modal frequency in Hz."""
        return max(self.omega1, self.omega2) / (2 * math.pi)

    def linearized(self) -> PlantConfig:
        """Return the same plant with all nonlinear terms removed."""
        return replace(self, beta=0.0, gamma=0.0, alpha=0.0, mu=0.0)

    def coefficients(self) -> Coefficients:
        """Flatten the parameters for the integration hot path."""
        return (
            self.omega1**2,
            self.omega2**2,
            2 * self.d1 * self.omega1,
            2 * self.d2 * self.omega2,
            self.beta,
            self.gamma,
            self.alpha,
            self.mu,
            1.0 / self.v_ref,
            self.a_slip**2,
            1.0 / self.omega1,
            self.b_factors[0],
            self.b_factors[1],
        )

    def as_dict(self) -> dict[str, object]:
        """Serialize for reports."""
        data = asdict(self)
        data["b_factors"] = list(self.b_factors)
        data["e_factors"] = list(self.e_factors)
        return data


@dataclass(slots=True)
class PlantState:
    """Instantaneous modal coordinates."""

    eta: np.ndarray = field(default_factory=lambda: np.zeros(2))
    eta_dot: np.ndarray = field(default_factory=lambda: np.zeros(2))
    t: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        """Return (eta1, eta2, eta_dot1, eta_dot2)."""
        return (
            float(self.eta[0]),
            float(self.eta[1]),
            float(self.eta_dot[0]),
            float(self.eta_dot[1]),
        )

    @classmethod
    def from_tuple(cls, y: tuple[float, float, float, float], t: float) -> PlantState:
        """Build a state from the flat hot-path representation."""
        return cls(np.array([y[0], y[1]]), np.array([y[2], y[3]]), t)


def _accel(
    e1: float, e2: float, v1: float, v2: float, qb: float, c: Coefficients
) -> tuple[float, float]:
    """Modal accelerations for base acceleration qb."""
    w1sq, w2sq, c1, c2, beta, gamma, alpha, mu, inv_vref, slip_sq, inv_w1, b1, b2 = c
    e1sq = e1 * e1
    g1 = beta * e1sq + gamma * e1sq * e1
    if mu:
        friction = mu * math.tanh(v1 * inv_vref)
        if slip_sq:
            r2 = e1sq + (v1 * inv_w1) ** 2
            friction *= r2 / (r2 + slip_sq)
        g1 += friction
    return (
        -b1 * qb - c1 * v1 - w1sq * e1 - g1,
        -b2 * qb - c2 * v2 - w2sq * e2 - alpha * e1sq,
    )


def _rk4(
    y: tuple[float, float, float, float],
    q0: float,
    qm: float,
    q1: float,
    dt: float,
    c: Coefficients,
) -> tuple[float, float, float, float]:
    """One classical Runge-Kutta step with forcing at start, midpoint and end."""
    e1, e2, v1, v2 = y
    h = 0.5 * dt
    ka1, ka2 = _accel(e1, e2, v1, v2, q0, c)
    kb1, kb2 = _accel(e1 + h * v1, e2 + h * v2, v1 + h * ka1, v2 + h * ka2, qm, c)
    vb1 = v1 + h * ka1
    vb2 = v2 + h * ka2
    kc1, kc2 = _accel(e1 + h * vb1, e2 + h * vb2, v1 + h * kb1, v2 + h * kb2, qm, c)
    vc1 = v1 + h * kb1
    vc2 = v2 + h * kb2
    vd1 = v1 + dt * kc1
    vd2 = v2 + dt * kc2
    kd1, kd2 = _accel(e1 + dt * vc1, e2 + dt * vc2, vd1, vd2, q1, c)
    s = dt / 6.0
    return (
        e1 + s * (v1 + 2 * vb1 + 2 * vc1 + vd1),
        e2 + s * (v2 + 2 * vb2 + 2 * vc2 + vd2),
        v1 + s * (ka1 + 2 * kb1 + 2 * kc1 + kd1),
        v2 + s * (ka2 + 2 * kb2 + 2 * kc2 + kd2),
    )


def derivatives(state: PlantState, base_accel: float, cfg: PlantConfig) -> np.ndarray:
    """Return the modal accelerations for the given state and base acceleration."""
    y = state.as_tuple()
    if not (all(math.isfinite(v) for v in y) and math.isfinite(base_accel)):
        message = NON_FINITE_INPUT
        raise ValidationError(message)
    return np.array(_accel(*y, base_accel, cfg.coefficients()))


def max_time_step(cfg: PlantConfig) -> float:
    """Largest admissible integration step."""
    return 1.0 / (STEPS_PER_PERIOD * cfg.max_frequency_hz)


def check_time_step(dt: float, cfg: PlantConfig) -> None:
    """Reject steps that violate the stability bound."""
    if not (dt > 0 and dt <= max_time_step(cfg) * (1 + 1e-12)):
        message = f"{UNSTABLE_TIME_STEP}: dt={dt:g} s exceeds {max_time_step(cfg):g} s"
        raise ValidationError(message)


def step(
    state: PlantState,
    base_accel_fn: Callable[[float], float],
    dt: float,
    cfg: PlantConfig,
) -> PlantState:
    """Advance the plant by one fixed step."""
    check_time_step(dt, cfg)
    t = state.t
    y = state.as_tuple()
    if not all(math.isfinite(v) for v in y):
        message = NON_FINITE_INPUT
        raise ValidationError(message)
    q0 = base_accel_fn(t)
    qm = base_accel_fn(t + 0.5 * dt)
    q1 = base_accel_fn(t + dt)
    return PlantState.from_tuple(_rk4(y, q0, qm, q1, dt, cfg.coefficients()), t + dt)


def response_displacement(state: PlantState, cfg: PlantConfig) -> float:
    """Panel-center displacement relative to the base."""
    return float(cfg.e_factors[0] * state.eta[0] + cfg.e_factors[1] * state.eta[1])


def mechanical_energy(state: PlantState, cfg: PlantConfig) -> float:
    """Kinetic plus linear potential energy of the mass-normalized modes."""
    eta, eta_dot = state.eta, state.eta_dot
    return float(
        0.5 * (eta_dot[0] ** 2 + eta_dot[1] ** 2)
        + 0.5 * (cfg.omega1**2 * eta[0] ** 2 + cfg.omega2**2 * eta[1] ** 2)
    )


def dissipated_power(state: PlantState, cfg: PlantConfig) -> float:
    """Instantaneous power drawn by damping and friction."""
    e1, _, v1, v2 = state.as_tuple()
    power = 2 * cfg.d1 * cfg.omega1 * v1 * v1 + 2 * cfg.d2 * cfg.omega2 * v2 * v2
    if cfg.mu:
        friction = cfg.mu * math.tanh(v1 / cfg.v_ref)
        if cfg.a_slip:
            r2 = e1 * e1 + (v1 / cfg.omega1) ** 2
            friction *= r2 / (r2 + cfg.a_slip**2)
        power += friction * v1
    return power


def supplied_power(state: PlantState, base_accel: float, cfg: PlantConfig) -> float:
    """Instantaneous power of the inertia forcing."""
    return float(
        -base_accel
        * (cfg.b_factors[0] * state.eta_dot[0] + cfg.b_factors[1] * state.eta_dot[1])
    )


# --- Harmonic balance oracle ---


class _HarmonicBalance:
    """Phase-resonant periodic solutions by alternating frequency/time evaluation.

    Unknowns are normalized: modal coefficients over the target amplitude,
    frequency over ω1 and base acceleration over ω1²·target.
    """

    def __init__(self, cfg: PlantConfig, harmonics: int, samples: int) -> None:
        self.cfg = cfg
        self.harmonics = harmonics
        self.size = 2 * harmonics + 1
        theta = 2 * np.pi * np.arange(samples) / samples
        basis = np.ones((samples, self.size))
        deriv = np.zeros((self.size, self.size))
        for h in range(1, harmonics + 1):
            basis[:, 2 * h - 1] = np.cos(h * theta)
            basis[:, 2 * h] = np.sin(h * theta)
            deriv[2 * h - 1, 2 * h] = h
            deriv[2 * h, 2 * h - 1] = -h
        self.basis = basis
        self.basis_d = basis @ deriv
        self.deriv = deriv
        self.deriv2 = deriv @ deriv
        self.eye = np.eye(self.size)
        self.project = np.linalg.pinv(basis)
        self.forcing = self.project @ np.sin(theta)

    def unpack(self, z: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray, float, float]:
        n = self.size
        w1 = self.cfg.omega1
        return (
            z[:n] * scale,
            z[n : 2 * n] * scale,
            z[2 * n] * w1,
            z[2 * n + 1] * w1 * w1 * scale,
        )

    def response_coeffs(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        e1, e2 = self.cfg.e_factors
        return e1 * x1 + e2 * x2

    def _linear(self, omega: float, damping: float, natural: float) -> np.ndarray:
        """Linear modal operator acting on coefficient vectors."""
        return (
            omega * omega * self.deriv2
            + 2 * damping * natural * omega * self.deriv
            + natural * natural * self.eye
        )

    def _friction(
        self, eta1: np.ndarray, vel1: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Friction force with its derivatives in displacement and velocity."""
        cfg = self.cfg
        zeros = np.zeros_like(eta1)
        if not cfg.mu:
            return zeros, zeros, zeros
        tanh = np.tanh(vel1 / cfg.v_ref)
        force = cfg.mu * tanh
        d_vel = cfg.mu * (1 - tanh**2) / cfg.v_ref
        d_eta = zeros
        if cfg.a_slip:
            r2 = eta1**2 + (vel1 / cfg.omega1) ** 2
            engage = r2 / (r2 + cfg.a_slip**2)
            d_engage = cfg.a_slip**2 / (r2 + cfg.a_slip**2) ** 2
            d_eta = force * d_engage * 2 * eta1
            d_vel = d_vel * engage + force * d_engage * 2 * vel1 / cfg.omega1**2
            force = force * engage
        return force, d_eta, d_vel

    def residual(self, z: np.ndarray, target: float) -> np.ndarray:
        cfg = self.cfg
        x1, x2, omega, accel = self.unpack(z, target)
        eta1 = self.basis @ x1
        friction, _, _ = self._friction(eta1, omega * (self.basis_d @ x1))
        g1 = cfg.beta * eta1**2 + cfg.gamma * eta1**3 + friction
        r1 = (
            self._linear(omega, cfg.d1, cfg.omega1) @ x1
            + self.project @ g1
            + cfg.b_factors[0] * accel * self.forcing
        )
        r2 = (
            self._linear(omega, cfg.d2, cfg.omega2) @ x2
            + self.project @ (cfg.alpha * eta1**2)
            + cfg.b_factors[1] * accel * self.forcing
        )
        norm = cfg.omega1**2 * target
        qm = self.response_coeffs(x1, x2)
        harmonic = qm[1:]
        return np.concatenate(
            (
                r1 / norm,
                r2 / norm,
                [qm[2] / target, (math.sqrt(float(harmonic @ harmonic)) - target) / target],
            )
        )

    def jacobian(self, z: np.ndarray, target: float) -> np.ndarray:
        """Analytic derivative of :meth:`residual` in the normalized unknowns."""
        cfg = self.cfg
        n = self.size
        w1 = cfg.omega1
        x1, x2, omega, _ = self.unpack(z, target)
        eta1 = self.basis @ x1
        dx1 = self.basis_d @ x1
        _, f_eta, f_vel = self._friction(eta1, omega * dx1)
        g_eta = 2 * cfg.beta * eta1 + 3 * cfg.gamma * eta1**2 + f_eta

        jac = np.zeros((2 * n + 2, 2 * n + 2))
        jac[:n, :n] = (
            self._linear(omega, cfg.d1, w1)
            + self.project @ (g_eta[:, None] * self.basis)
            + omega * (self.project @ (f_vel[:, None] * self.basis_d))
        )
        jac[:n, 2 * n] = (
            2 * omega * (self.deriv2 @ x1)
            + 2 * cfg.d1 * w1 * (self.deriv @ x1)
            + self.project @ (f_vel * dx1)
        )
        jac[:n, 2 * n + 1] = cfg.b_factors[0] * self.forcing
        jac[n : 2 * n, :n] = self.project @ ((2 * cfg.alpha * eta1)[:, None] * self.basis)
        jac[n : 2 * n, n : 2 * n] = self._linear(omega, cfg.d2, cfg.omega2)
        jac[n : 2 * n, 2 * n] = 2 * omega * (self.deriv2 @ x2) + 2 * cfg.d2 * cfg.omega2 * (
            self.deriv @ x2
        )
        jac[n : 2 * n, 2 * n + 1] = cfg.b_factors[1] * self.forcing
        # chain rule to normalized unknowns, then the residual normalization
        jac[: 2 * n, : 2 * n] *= target
        jac[: 2 * n, 2 * n] *= w1
        jac[: 2 * n, 2 * n + 1] *= w1 * w1 * target
        jac[: 2 * n] /= w1 * w1 * target

        e1, e2 = cfg.e_factors
        harmonic = self.response_coeffs(x1, x2)[1:]
        grad = np.zeros(n)
        grad[1:] = harmonic / max(math.sqrt(float(harmonic @ harmonic)), 1e-300)
        jac[2 * n, 2] = e1
        jac[2 * n, n + 2] = e2
        jac[2 * n + 1, :n] = e1 * grad
        jac[2 * n + 1, n : 2 * n] = e2 * grad
        return jac

    def initial_guess(self, target: float) -> np.ndarray:
        """First-order single-mode estimate at response amplitude ``target``."""
        cfg = self.cfg
        n = self.size
        w1, w2 = cfg.omega1, cfg.omega2
        a1 = target / cfg.e_factors[0]
        omega = w1 * math.sqrt(
            max(1 + (0.75 * cfg.gamma - 5 * cfg.beta**2 / (6 * w1**2)) * a1**2 / w1**2, 0.25)
        )
        damping = cfg.d1
        if cfg.mu:
            c_eq = min(1 / cfg.v_ref, 4 / (math.pi * omega * abs(a1)))
            if cfg.a_slip:
                c_eq *= a1**2 / (a1**2 + cfg.a_slip**2)
            damping += cfg.mu * c_eq / (2 * w1)
        accel = 2 * damping * w1 * omega * a1 / cfg.b_factors[0]

        z = np.zeros(2 * n + 2)
        z[0] = -cfg.beta * a1**2 / (2 * w1**2) / target
        z[1] = a1 / target
        if self.harmonics >= 2:  # noqa: PLR2004
            z[3] = cfg.beta * a1**2 / (2 * (4 * omega**2 - w1**2)) / target
        z[n] = -cfg.alpha * a1**2 / (2 * w2**2) / target
        first = 1j * cfg.b_factors[1] * accel / (w2**2 - omega**2 + 2j * cfg.d2 * w2 * omega)
        z[n + 1] = first.real / target
        z[n + 2] = -first.imag / target
        if self.harmonics >= 2:  # noqa: PLR2004
            second = -0.5 * cfg.alpha * a1**2 / (w2**2 - 4 * omega**2 + 4j * cfg.d2 * w2 * omega)
            z[n + 3] = second.real / target
            z[n + 4] = -second.imag / target
        z[2 * n] = omega / w1
        z[2 * n + 1] = accel / (w1 * w1 * target)
        return z


def to_complex(coeffs: np.ndarray) -> np.ndarray:
    """Convert [x0, c1, s1, c2, s2, ...] into complex coefficients q̂_h."""
    harmonics = (len(coeffs) - 1) // 2
    out = np.empty(harmonics + 1, dtype=complex)
    out[0] = coeffs[0]
    out[1:] = coeffs[1::2] - 1j * coeffs[2::2]
    return out


def _solve(hb: _HarmonicBalance, guess: np.ndarray, target: float) -> tuple[np.ndarray, float]:
    """Root from ``guess`` with Powell's method, falling back to Levenberg-Marquardt."""
    best, best_residual = guess, math.inf
    for method in ("hybr", "lm"):
        sol = optimize.root(
            hb.residual, guess, args=(target,), jac=hb.jacobian, method=method, tol=1e-13
        )
        residual = float(np.max(np.abs(hb.residual(sol.x, target))))
        if residual < best_residual:
            best, best_residual = sol.x, residual
        if best_residual < ORACLE_TOLERANCE:
            break
    return best, best_residual


def _march(
    hb: _HarmonicBalance, start: np.ndarray, a_start: float, target: float, depth: int
) -> tuple[np.ndarray, float]:
    """Reach ``target`` from a converged point, halving the step on failure."""
    z, residual = _solve(hb, start, target)
    if residual < ORACLE_TOLERANCE or depth == 0:
        return z, residual
    middle = 0.5 * (a_start + target)
    z_mid, residual_mid = _march(hb, start, a_start, middle, depth - 1)
    if residual_mid >= ORACLE_TOLERANCE:
        return z, residual
    return _march(hb, z_mid, middle, target, depth - 1)


def _candidates(
    hb: _HarmonicBalance, previous: list[tuple[float, np.ndarray]], target: float
) -> list[np.ndarray]:
    """Start vectors: secant prediction, last solution, then a cold start."""
    out = []
    if len(previous) >= 2:  # noqa: PLR2004
        (a0, z0), (a1, z1) = previous[-2:]
        out.append(z1 + (z1 - z0) * (target - a1) / (a1 - a0))
    if previous:
        out.append(previous[-1][1])
    out.append(hb.initial_guess(target))
    return out


def calibrate_backbone(
    cfg: PlantConfig,
    amplitude_grid: Iterable[float],
    *,
    harmonics: int = DEFAULT_HARMONICS,
    samples: int | None = None,
) -> Backbone:
    """Compute the plant's phase-resonant backbone by harmonic balance.

    For each response amplitude (harmonic amplitude metric of the response)
    the forced periodic solution whose fundamental lags the base displacement
    by 90 degrees is solved together with its frequency and forcing level.
    Damping is the fundamental-harmonic power balance, the same estimator the
    phase resonance test uses. Points are continued in increasing amplitude
    with a secant predictor; a stalled step is retried from a cold start and
    then in halved steps from the last converged amplitude.

    Raises ConvergenceError when no amplitude of a non-empty grid converges.
    """
    samples = samples or max(64, 8 * harmonics)
    hb = _HarmonicBalance(cfg, harmonics, samples)
    n = hb.size
    grid = sorted(float(a) for a in amplitude_grid)
    points: list[BackbonePoint] = []
    failures: list[float] = []
    previous: list[tuple[float, np.ndarray]] = []
    for target in grid:
        if not (target > 0 and math.isfinite(target)):
            message = f"{INVALID_PLANT}: amplitude grid must be positive"
            raise ValidationError(message)
        z, residual = hb.initial_guess(target), math.inf
        for guess in _candidates(hb, previous, target):
            z, residual = _solve(hb, guess, target)
            if residual < ORACLE_TOLERANCE:
                break
        if residual >= ORACLE_TOLERANCE:
            if previous:
                a_start, start = previous[-1]
            else:
                a_start = target / 16
                start, _ = _solve(hb, hb.initial_guess(a_start), a_start)
            z, residual = _march(hb, start, a_start, target, MAX_HALVINGS)
        if residual >= ORACLE_TOLERANCE:
            LOGGER.warning(
                "Oracle did not converge at a=%.4g m (residual %.3g)", target, residual
            )
            failures.append(target)
            continue
        previous.append((target, z))
        x1, x2, omega, accel = hb.unpack(z, target)
        response = to_complex(hb.response_coeffs(x1, x2))
        base_hat = -1j * accel
        damping = modal_damping_ratio(
            base_hat, response[1], omega, cfg.b_factors[0], cfg.e_factors[0]
        )
        points.append(
            BackbonePoint(
                a=target,
                omega=omega,
                damping=damping,
                direction="up",
                e_proj=cfg.e_factors[0],
                b_proj=cfg.b_factors[0],
                modal_amplitude=abs(response[1]) / abs(cfg.e_factors[0]),
                residual=residual,
                modal_spectra=(to_complex(x1), to_complex(x2)),
                base_accel=abs(base_hat),
            )
        )
        LOGGER.debug(
            "Oracle a=%.4g m: f=%.4f Hz D=%.5f (residual %.2g, %d unknowns)",
            target,
            omega / (2 * math.pi),
            damping,
            residual,
            2 * n + 2,
        )
    if grid and not points:
        message = f"{NOT_CONVERGED}: oracle failed on all {len(grid)} amplitudes"
        raise ConvergenceError(message)
    return Backbone(points=points, failures=failures)


# --- Design calibration ---


def conservative_frequency(x_max: float, kappa: float) -> tuple[float, float]:
    """Free-vibration amplitude and frequency of x'' + x - sqrt(kappa) x² + x³ = 0.

    ``x_max`` is the positive turning point. The period is the exact
    quadrature of the energy integral; the amplitude is half the
    peak-to-peak excursion.
    """
    s = -math.sqrt(kappa)
    energy = 0.5 * x_max**2 + s * x_max**3 / 3 + 0.25 * x_max**4
    poly = np.array([-0.25, -s / 3, -0.5, 0.0, energy])
    cubic, _ = np.polydiv(poly, np.array([1.0, -x_max]))
    roots = np.roots(cubic)
    negatives = [r.real for r in roots if abs(r.imag) < 1e-9 * (1 + abs(r)) and r.real < 0]
    if not negatives:
        message = f"{DESIGN_UNREACHABLE}: no return point for x_max={x_max:g}"
        raise ValidationError(message)
    x_min = max(negatives)
    quad, _ = np.polydiv(cubic, np.array([1.0, -x_min]))

    def weight(x: float) -> float:
        return 1.0 / math.sqrt(-2.0 * np.polyval(quad, x))

    half, _ = integrate.quad(weight, x_min, x_max, weight="alg", wvar=(-0.5, -0.5))
    return 0.5 * (x_max - x_min), 2 * math.pi / (2 * half)


def _dip(kappa: float) -> tuple[float, float]:
    """Depth and amplitude of the frequency minimum for a given kappa."""
    res = optimize.minimize_scalar(
        lambda x: conservative_frequency(x, kappa)[1],
        bounds=(1e-3, 3.0),
        method="bounded",
        options={"xatol": 1e-7},
    )
    amplitude, freq = conservative_frequency(float(res.x), kappa)
    return 1.0 - freq, amplitude


@lru_cache(maxsize=32)
def _kappa_for_depth(depth: float) -> tuple[float, float]:
    if not 0 < depth < 0.5:  # noqa: PLR2004
        message = f"{DESIGN_UNREACHABLE}: dip depth {depth:g} outside (0, 0.5)"
        raise ValidationError(message)
    kappa = optimize.brentq(lambda k: _dip(k)[0] - depth, 0.95, 3.8, xtol=1e-10)
    return kappa, _dip(kappa)[1]


def design_softening_hardening(
    omega1: float, dip_depth: float, dip_amplitude: float
) -> tuple[float, float]:
    """Return (beta, gamma) giving a frequency dip of ``dip_depth`` at ``dip_amplitude``.

    The backbone of the quadratic-cubic oscillator depends on a single
    shape parameter kappa = beta²/(gamma ω1²); gamma sets the amplitude scale.
    """
    kappa, amplitude = _kappa_for_depth(round(dip_depth, 12))
    gamma = (amplitude * omega1 / dip_amplitude) ** 2
    beta = -math.sqrt(kappa * gamma) * omega1
    return beta, gamma


@dataclass(frozen=True, slots=True)
class PlantDesign:
    """Calibration targets for the nonlinear coefficients."""

    dip_depth: float
    dip_amplitude: float
    interaction: float = 0.0
    friction_damping: float = 0.0


def build_plant_config(  # noqa: PLR0913
    f1: float,
    f2: float,
    d1: float,
    d2: float,
    design: PlantDesign | None = None,
    **overrides: float | tuple[float, float],
) -> PlantConfig:
    """Build a plant from frequencies in Hz and optional design targets.

    Explicit coefficients in ``overrides`` win over designed ones.
    """
    omega1 = 2 * math.pi * f1
    params: dict = {"omega1": omega1, "omega2": 2 * math.pi * f2, "d1": d1, "d2": d2}
    v_ref = float(overrides.get("v_ref", 1.0))
    if design is not None:
        beta, gamma = design_softening_hardening(omega1, design.dip_depth, design.dip_amplitude)
        params.update(
            beta=beta,
            gamma=gamma,
            alpha=design.interaction * omega1**2 / design.dip_amplitude,
            mu=2 * omega1 * v_ref * design.friction_damping,
        )
    params.update(overrides)
    return PlantConfig(**params)
