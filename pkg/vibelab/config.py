"""Scenario files: TOML parsing and schema validation."""

from __future__ import annotations

import hashlib
import json
import math
import re
import tomllib
from dataclasses import replace
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    CONF_A_SLIP,
    CONF_ALPHA,
    CONF_AMP_DEV,
    CONF_AMPLITUDE,
    CONF_ANALYSIS_FRACTION,
    CONF_ANTI_WINDUP,
    CONF_B_FACTORS,
    CONF_BETA,
    CONF_CENTER,
    CONF_CONFIGURATION,
    CONF_CONTROL,
    CONF_CUTOFF_RATIO,
    CONF_D1,
    CONF_D2,
    CONF_DESIGN,
    CONF_DETECTOR,
    CONF_DIP_AMPLITUDE,
    CONF_DIP_DEPTH,
    CONF_DRIFT_ENABLED,
    CONF_DRIFT_RATE,
    CONF_E_FACTORS,
    CONF_ECT,
    CONF_EXCITATION,
    CONF_EXCITER,
    CONF_F1,
    CONF_F2,
    CONF_FREQ_LIMIT,
    CONF_FREQ_STD,
    CONF_FREQUENCY_RATIO,
    CONF_FRICTION_DAMPING,
    CONF_GAIN,
    CONF_GAMMA,
    CONF_HARMONICS,
    CONF_HOLD,
    CONF_INTERACTION,
    CONF_KI,
    CONF_KP,
    CONF_LEVEL_MAX,
    CONF_LEVEL_MIN,
    CONF_LEVELS,
    CONF_MU,
    CONF_NAME,
    CONF_NOISE_LEVEL,
    CONF_OUT_MAX,
    CONF_OUT_MIN,
    CONF_OUTPUT_DIR,
    CONF_PHASE_MAX,
    CONF_PHASE_MIN,
    CONF_PHASE_STD,
    CONF_PLANT,
    CONF_PLL,
    CONF_POINTS,
    CONF_POLE_FREQ,
    CONF_PROTOCOL,
    CONF_PROTOCOLS,
    CONF_PRT,
    CONF_RATE,
    CONF_RCT,
    CONF_REPEAT,
    CONF_SAMPLING,
    CONF_SAT_LEVEL,
    CONF_SCENARIO,
    CONF_SEED,
    CONF_SETTLE,
    CONF_TELEMETRY,
    CONF_TELEMETRY_DECIMATION,
    CONF_TIME_SCALE,
    CONF_TIMEOUT,
    CONF_V_REF,
    CONF_WINDOW_PERIODS,
    CONFIGURATIONS,
    DEFAULT_AMP_DEV,
    DEFAULT_AMP_KI,
    DEFAULT_AMP_KP,
    DEFAULT_ANALYSIS_FRACTION,
    DEFAULT_B_FACTORS,
    DEFAULT_CUTOFF_RATIO,
    DEFAULT_D1,
    DEFAULT_D2,
    DEFAULT_DRIFT_RATE,
    DEFAULT_E_FACTORS,
    DEFAULT_ECT_LEVEL_MAX,
    DEFAULT_ECT_LEVEL_MIN,
    DEFAULT_ECT_LEVELS,
    DEFAULT_ECT_PHASE_MAX,
    DEFAULT_ECT_PHASE_MIN,
    DEFAULT_ECT_POINTS,
    DEFAULT_EXC_KI,
    DEFAULT_EXC_KP,
    DEFAULT_F1,
    DEFAULT_FREQ_STD,
    DEFAULT_FREQUENCY_RATIO,
    DEFAULT_GAIN,
    DEFAULT_HARMONICS,
    DEFAULT_NOISE_LEVEL,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_PHASE_STD,
    DEFAULT_PLL_FREQ_LIMIT,
    DEFAULT_PLL_KI,
    DEFAULT_PLL_KP,
    DEFAULT_POLE_FREQ,
    DEFAULT_PROTOCOLS,
    DEFAULT_PRT_HOLD,
    DEFAULT_PRT_LEVEL_MAX,
    DEFAULT_PRT_LEVEL_MIN,
    DEFAULT_PRT_LEVELS,
    DEFAULT_RATE,
    DEFAULT_RCT_LEVEL_MAX,
    DEFAULT_RCT_LEVEL_MIN,
    DEFAULT_RCT_LEVELS,
    DEFAULT_RCT_PHASE_MAX,
    DEFAULT_RCT_PHASE_MIN,
    DEFAULT_RCT_POINTS,
    DEFAULT_REPEAT,
    DEFAULT_SAT_LEVEL,
    DEFAULT_SEED,
    DEFAULT_SETTLE,
    DEFAULT_TELEMETRY_DECIMATION,
    DEFAULT_TIME_SCALE,
    DEFAULT_TIMEOUT,
    DEFAULT_V_MAX,
    DEFAULT_V_REF,
    DEFAULT_WINDOW_PERIODS,
    LOGGER,
    PROTOCOLS,
)
from .control import DetectorThresholds, PiGains
from .data import Scenario
from .exceptions import ConfigError, VibeLabError
from .exciter import ExciterConfig
from .plant import PlantDesign, build_plant_config
from .protocols import ProtocolConfig, PrtPlan, SweepPlan
from .rig import ControlConfig, PllConfig, SamplingConfig

FLOAT = vol.Coerce(float)
POSITIVE = vol.All(FLOAT, vol.Range(min=0, min_included=False))
NON_NEGATIVE = vol.All(FLOAT, vol.Range(min=0))
RATIO = vol.All(FLOAT, vol.Range(min=0, max=1, min_included=False))
COUNT = vol.All(vol.Coerce(int), vol.Range(min=1))
LEVEL_COUNT = vol.All(vol.Coerce(int), vol.Range(min=2))
PAIR = vol.All(vol.ExactSequence([FLOAT, FLOAT]), tuple)

SCENARIO_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_NAME, default="scenario"): vol.Match(r"^[A-Za-z0-9_.-]+$"),
        vol.Optional(CONF_CONFIGURATION, default="aligned"): vol.In(CONFIGURATIONS),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(
            vol.Coerce(int), vol.Range(min=0)
        ),
        vol.Optional(CONF_REPEAT, default=DEFAULT_REPEAT): COUNT,
        vol.Optional(CONF_PROTOCOLS, default=list(DEFAULT_PROTOCOLS)): vol.All(
            [vol.In(PROTOCOLS)], vol.Length(min=1)
        ),
        vol.Optional(CONF_OUTPUT_DIR, default=DEFAULT_OUTPUT_DIR): str,
        vol.Optional(CONF_NOISE_LEVEL, default=DEFAULT_NOISE_LEVEL): NON_NEGATIVE,
        vol.Optional(CONF_TELEMETRY, default=False): bool,
        vol.Optional(CONF_TELEMETRY_DECIMATION, default=DEFAULT_TELEMETRY_DECIMATION): COUNT,
    }
)

SAMPLING_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_RATE, default=DEFAULT_RATE): POSITIVE,
        vol.Optional(CONF_HARMONICS, default=DEFAULT_HARMONICS): COUNT,
        vol.Optional(CONF_CUTOFF_RATIO, default=DEFAULT_CUTOFF_RATIO): RATIO,
        vol.Optional(CONF_TIME_SCALE, default=DEFAULT_TIME_SCALE): POSITIVE,
        vol.Optional(CONF_ANALYSIS_FRACTION, default=DEFAULT_ANALYSIS_FRACTION): RATIO,
    }
)

DESIGN_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_DIP_DEPTH): vol.All(FLOAT, vol.Range(min=0, max=0.5, min_included=False)),
        vol.Required(CONF_DIP_AMPLITUDE): POSITIVE,
        vol.Optional(CONF_INTERACTION, default=0.0): NON_NEGATIVE,
        vol.Optional(CONF_FRICTION_DAMPING, default=0.0): NON_NEGATIVE,
    }
)

PLANT_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_F1, default=DEFAULT_F1): POSITIVE,
        vol.Optional(CONF_F2): POSITIVE,
        vol.Optional(CONF_FREQUENCY_RATIO, default=DEFAULT_FREQUENCY_RATIO): POSITIVE,
        vol.Optional(CONF_D1, default=DEFAULT_D1): vol.All(FLOAT, vol.Range(min=0, max=1)),
        vol.Optional(CONF_D2, default=DEFAULT_D2): vol.All(FLOAT, vol.Range(min=0, max=1)),
        vol.Optional(CONF_BETA): FLOAT,
        vol.Optional(CONF_GAMMA): FLOAT,
        vol.Optional(CONF_ALPHA): FLOAT,
        vol.Optional(CONF_MU): NON_NEGATIVE,
        vol.Optional(CONF_V_REF, default=DEFAULT_V_REF): POSITIVE,
        vol.Optional(CONF_A_SLIP, default=0.0): NON_NEGATIVE,
        vol.Optional(CONF_B_FACTORS, default=list(DEFAULT_B_FACTORS)): PAIR,
        vol.Optional(CONF_E_FACTORS, default=list(DEFAULT_E_FACTORS)): PAIR,
        vol.Optional(CONF_DESIGN): DESIGN_SCHEMA,
    }
)

EXCITER_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_GAIN, default=DEFAULT_GAIN): POSITIVE,
        vol.Optional(CONF_POLE_FREQ, default=DEFAULT_POLE_FREQ): POSITIVE,
        vol.Optional(CONF_SAT_LEVEL, default=DEFAULT_SAT_LEVEL): POSITIVE,
        vol.Optional(CONF_DRIFT_RATE, default=DEFAULT_DRIFT_RATE): FLOAT,
        vol.Optional(CONF_DRIFT_ENABLED, default=False): bool,
    }
)


def _pi_schema(kp: float, ki: float) -> vol.Schema:
    return vol.Schema(
        {
            vol.Optional(CONF_KP, default=kp): NON_NEGATIVE,
            vol.Optional(CONF_KI, default=ki): NON_NEGATIVE,
            vol.Optional(CONF_OUT_MIN, default=0.0): NON_NEGATIVE,
            vol.Optional(CONF_OUT_MAX, default=DEFAULT_V_MAX): POSITIVE,
            vol.Optional(CONF_ANTI_WINDUP, default=True): bool,
        }
    )


CONTROL_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_PLL, default=dict): vol.Schema(
            {
                vol.Optional(CONF_KP, default=DEFAULT_PLL_KP): NON_NEGATIVE,
                vol.Optional(CONF_KI, default=DEFAULT_PLL_KI): NON_NEGATIVE,
                vol.Optional(CONF_FREQ_LIMIT, default=DEFAULT_PLL_FREQ_LIMIT): RATIO,
                vol.Optional(CONF_CENTER): POSITIVE,
            }
        ),
        vol.Optional(CONF_AMPLITUDE, default=dict): _pi_schema(DEFAULT_AMP_KP, DEFAULT_AMP_KI),
        vol.Optional(CONF_EXCITATION, default=dict): _pi_schema(DEFAULT_EXC_KP, DEFAULT_EXC_KI),
        vol.Optional(CONF_DETECTOR, default=dict): vol.Schema(
            {
                vol.Optional(CONF_AMP_DEV, default=DEFAULT_AMP_DEV): POSITIVE,
                vol.Optional(CONF_FREQ_STD, default=DEFAULT_FREQ_STD): POSITIVE,
                vol.Optional(CONF_PHASE_STD, default=DEFAULT_PHASE_STD): POSITIVE,
                vol.Optional(CONF_WINDOW_PERIODS, default=DEFAULT_WINDOW_PERIODS): COUNT,
            }
        ),
    }
)


def _sweep_schema(  # noqa: PLR0913
    level_min: float,
    level_max: float,
    levels: int,
    phase_min: float,
    phase_max: float,
    points: int,
) -> vol.Schema:
    return vol.Schema(
        {
            vol.Optional(CONF_LEVEL_MIN, default=level_min): POSITIVE,
            vol.Optional(CONF_LEVEL_MAX, default=level_max): POSITIVE,
            vol.Optional(CONF_LEVELS, default=levels): LEVEL_COUNT,
            vol.Optional(CONF_PHASE_MIN, default=phase_min): POSITIVE,
            vol.Optional(CONF_PHASE_MAX, default=phase_max): POSITIVE,
            vol.Optional(CONF_POINTS, default=points): LEVEL_COUNT,
            vol.Optional(CONF_SETTLE, default=DEFAULT_SETTLE): NON_NEGATIVE,
            vol.Optional(CONF_TIMEOUT, default=DEFAULT_TIMEOUT): POSITIVE,
        }
    )


PROTOCOL_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_PRT, default=dict): vol.Schema(
            {
                vol.Optional(CONF_LEVEL_MIN, default=DEFAULT_PRT_LEVEL_MIN): POSITIVE,
                vol.Optional(CONF_LEVEL_MAX, default=DEFAULT_PRT_LEVEL_MAX): POSITIVE,
                vol.Optional(CONF_LEVELS, default=DEFAULT_PRT_LEVELS): LEVEL_COUNT,
                vol.Optional(CONF_HOLD, default=DEFAULT_PRT_HOLD): POSITIVE,
            }
        ),
        vol.Optional(CONF_RCT, default=dict): _sweep_schema(
            DEFAULT_RCT_LEVEL_MIN,
            DEFAULT_RCT_LEVEL_MAX,
            DEFAULT_RCT_LEVELS,
            DEFAULT_RCT_PHASE_MIN,
            DEFAULT_RCT_PHASE_MAX,
            DEFAULT_RCT_POINTS,
        ),
        vol.Optional(CONF_ECT, default=dict): _sweep_schema(
            DEFAULT_ECT_LEVEL_MIN,
            DEFAULT_ECT_LEVEL_MAX,
            DEFAULT_ECT_LEVELS,
            DEFAULT_ECT_PHASE_MIN,
            DEFAULT_ECT_PHASE_MAX,
            DEFAULT_ECT_POINTS,
        ),
    }
)

SCENARIO_FILE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SCENARIO, default=dict): SCENARIO_SCHEMA,
        vol.Optional(CONF_SAMPLING, default=dict): SAMPLING_SCHEMA,
        vol.Optional(CONF_PLANT, default=dict): PLANT_SCHEMA,
        vol.Optional(CONF_EXCITER, default=dict): EXCITER_SCHEMA,
        vol.Optional(CONF_CONTROL, default=dict): CONTROL_SCHEMA,
        vol.Optional(CONF_PROTOCOL, default=dict): PROTOCOL_SCHEMA,
    }
)

_TOML_LINE_RE = re.compile(r"line (\d+)")
_TABLE_RE = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\s]+?)\s*\]\s*(#.*)?$")


def locate(text: str, path: list[str]) -> int | None:
    """Line number (1-based) of a dotted key in TOML source, if it can be found."""
    if not path:
        return None
    table, key = ".".join(path[:-1]), path[-1]
    current = ""
    key_re = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for number, line in enumerate(text.splitlines(), start=1):
        match = _TABLE_RE.match(line)
        if match:
            current = re.sub(r"\s+", "", match.group(1))
            if current == ".".join(path):
                return number
            continue
        if current == table and key_re.match(line):
            return number
    return None


def config_hash(settings: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of validated settings.

    The output directory is left out so that reruns elsewhere stay byte-identical.
    """
    hashed = {**settings}
    if CONF_SCENARIO in hashed:
        hashed[CONF_SCENARIO] = {
            k: v for k, v in hashed[CONF_SCENARIO].items() if k != CONF_OUTPUT_DIR
        }
    canonical = json.dumps(hashed, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def validate_settings(raw: dict[str, Any], text: str = "") -> dict[str, Any]:
    """Apply the scenario schema; errors carry the dotted field and source line."""
    try:
        settings = SCENARIO_FILE_SCHEMA(raw)
    except vol.Invalid as err:
        path = [str(p) for p in err.path]
        raise ConfigError(err.msg, field=".".join(path), line=locate(text, path)) from err
    return settings


def _plant(settings: dict[str, Any]) -> Any:
    plant = settings[CONF_PLANT]
    f1 = plant[CONF_F1]
    f2 = plant.get(CONF_F2, f1 * plant[CONF_FREQUENCY_RATIO])
    design = None
    if CONF_DESIGN in plant:
        d = plant[CONF_DESIGN]
        design = PlantDesign(
            dip_depth=d[CONF_DIP_DEPTH],
            dip_amplitude=d[CONF_DIP_AMPLITUDE],
            interaction=d[CONF_INTERACTION],
            friction_damping=d[CONF_FRICTION_DAMPING],
        )
    overrides: dict[str, Any] = {
        key: plant[key]
        for key in (CONF_BETA, CONF_GAMMA, CONF_ALPHA, CONF_MU)
        if key in plant
    }
    overrides.update(
        v_ref=plant[CONF_V_REF],
        a_slip=plant[CONF_A_SLIP],
        b_factors=plant[CONF_B_FACTORS],
        e_factors=plant[CONF_E_FACTORS],
    )
    return build_plant_config(f1, f2, plant[CONF_D1], plant[CONF_D2], design, **overrides)


def _pi(section: dict[str, Any]) -> PiGains:
    return PiGains(
        kp=section[CONF_KP],
        ki=section[CONF_KI],
        out_min=section[CONF_OUT_MIN],
        out_max=section[CONF_OUT_MAX],
        anti_windup=section[CONF_ANTI_WINDUP],
    )


def _sweep(section: dict[str, Any]) -> SweepPlan:
    return SweepPlan(
        level_min=section[CONF_LEVEL_MIN],
        level_max=section[CONF_LEVEL_MAX],
        levels=section[CONF_LEVELS],
        phase_min=section[CONF_PHASE_MIN],
        phase_max=section[CONF_PHASE_MAX],
        points=section[CONF_POINTS],
        settle=section[CONF_SETTLE],
        timeout=section[CONF_TIMEOUT],
    )


def build_scenario(settings: dict[str, Any], *, text: str = "") -> Scenario:
    """Turn validated settings into a Scenario; domain errors map to ConfigError."""
    section = CONF_PLANT
    try:
        plant = _plant(settings)
        section = CONF_EXCITER
        exc = settings[CONF_EXCITER]
        exciter = ExciterConfig(
            gain=exc[CONF_GAIN],
            pole_freq=exc[CONF_POLE_FREQ],
            sat_level=exc[CONF_SAT_LEVEL],
            drift_rate=exc[CONF_DRIFT_RATE],
            drift_enabled=exc[CONF_DRIFT_ENABLED],
        )
        section = CONF_CONTROL
        ctl = settings[CONF_CONTROL]
        pll = ctl[CONF_PLL]
        det = ctl[CONF_DETECTOR]
        control = ControlConfig(
            pll=PllConfig(
                kp=pll[CONF_KP],
                ki=pll[CONF_KI],
                freq_limit=pll[CONF_FREQ_LIMIT],
                center=2 * math.pi * pll[CONF_CENTER] if CONF_CENTER in pll else None,
            ),
            amplitude=_pi(ctl[CONF_AMPLITUDE]),
            excitation=_pi(ctl[CONF_EXCITATION]),
            detector=DetectorThresholds(
                amp_dev=det[CONF_AMP_DEV],
                freq_std=det[CONF_FREQ_STD],
                phase_std=det[CONF_PHASE_STD],
                window_periods=det[CONF_WINDOW_PERIODS],
            ),
        )
        section = CONF_SAMPLING
        smp = settings[CONF_SAMPLING]
        sampling = SamplingConfig(
            rate=smp[CONF_RATE],
            harmonics=smp[CONF_HARMONICS],
            cutoff_ratio=smp[CONF_CUTOFF_RATIO],
            time_scale=smp[CONF_TIME_SCALE],
            analysis_fraction=smp[CONF_ANALYSIS_FRACTION],
        )
        section = CONF_PROTOCOL
        proto = settings[CONF_PROTOCOL]
        prt = proto[CONF_PRT]
        protocol = ProtocolConfig(
            prt=PrtPlan(
                level_min=prt[CONF_LEVEL_MIN],
                level_max=prt[CONF_LEVEL_MAX],
                levels=prt[CONF_LEVELS],
                hold=prt[CONF_HOLD],
            ),
            rct=_sweep(proto[CONF_RCT]),
            ect=_sweep(proto[CONF_ECT]),
        )
    except VibeLabError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err), field=section, line=locate(text, [section])) from err
    scn = settings[CONF_SCENARIO]
    return Scenario(
        name=scn[CONF_NAME],
        configuration=scn[CONF_CONFIGURATION],
        seed=scn[CONF_SEED],
        repeat=scn[CONF_REPEAT],
        protocols=tuple(p for p in PROTOCOLS if p in scn[CONF_PROTOCOLS]),
        output_dir=Path(scn[CONF_OUTPUT_DIR]),
        noise_level=scn[CONF_NOISE_LEVEL],
        telemetry=scn[CONF_TELEMETRY],
        telemetry_decimation=scn[CONF_TELEMETRY_DECIMATION],
        plant=plant,
        exciter=exciter,
        control=control,
        sampling=sampling,
        protocol=protocol,
        config_hash=config_hash(settings),
        settings=settings,
    )


def loads_scenario(text: str) -> Scenario:
    """Parse and validate scenario TOML text."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        match = _TOML_LINE_RE.search(str(err))
        line = int(match.group(1)) if match else None
        raise ConfigError(f"TOML syntax error: {err}", line=line) from err
    return build_scenario(validate_settings(raw, text), text=text)


def load_scenario(path: Path) -> Scenario:
    """Read a scenario file."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from err
    LOGGER.debug("Loading scenario %s", path)
    return loads_scenario(text)


def with_overrides(
    scenario: Scenario,
    *,
    seed: int | None = None,
    repeat: int | None = None,
    protocols: tuple[str, ...] | None = None,
    output_dir: Path | None = None,
) -> Scenario:
    """Apply command-line overrides; the hash covers the effective settings."""
    settings = json.loads(json.dumps(scenario.settings, default=list))
    scn = settings[CONF_SCENARIO]
    if seed is not None:
        scn[CONF_SEED] = seed
    if repeat is not None:
        if repeat < 1:
            message = "repeat must be at least 1"
            raise ConfigError(message, field=f"{CONF_SCENARIO}.{CONF_REPEAT}")
        scn[CONF_REPEAT] = repeat
    if protocols is not None:
        scn[CONF_PROTOCOLS] = list(protocols)
    if output_dir is not None:
        scn[CONF_OUTPUT_DIR] = str(output_dir)
    return replace(
        scenario,
        seed=scn[CONF_SEED],
        repeat=scn[CONF_REPEAT],
        protocols=tuple(p for p in PROTOCOLS if p in scn[CONF_PROTOCOLS]),
        output_dir=Path(scn[CONF_OUTPUT_DIR]),
        config_hash=config_hash(settings),
        settings=settings,
    )
