"""Constants for Vibelab."""

from __future__ import annotations

import json
from contextlib import suppress
from logging import Logger, getLogger
from pathlib import Path

LOGGER: Logger = getLogger(__package__)

_PACKAGE_DIR = Path(__file__).parent


def _resolve_manifest() -> dict:
    """Read manifest.json once at import time."""
    manifest: dict = {}
    with (
        suppress(FileNotFoundError, json.JSONDecodeError),
        (_PACKAGE_DIR / "manifest.json").open(encoding="utf-8") as fh,
    ):
        manifest = json.load(fh)
    return manifest


def _resolve_version(manifest: dict) -> str:
    """Return the package version.

    `manifest.json` is checked in with ``"version": "0.0.0"`` as a sentinel for
    "unreleased source"; releases rewrite it to the tag. Unreleased trees
    report ``0.0.0.dev0`` so reports never claim a release they are not.
    The value is embedded in every report, so it must not depend on file
    mtimes or anything else that would break byte-identical reruns.
    """
    version = str(manifest.get("version", "0.0.0"))
    if version == "0.0.0":
        version = "0.0.0.dev0"
    return version


_MANIFEST = _resolve_manifest()
VERSION: str = _resolve_version(_MANIFEST)
REPORT_SCHEMA: int = int(_MANIFEST.get("report_schema", 1))

# Scenario sections
CONF_SCENARIO = "scenario"
CONF_SAMPLING = "sampling"
CONF_PLANT = "plant"
CONF_DESIGN = "design"
CONF_EXCITER = "exciter"
CONF_CONTROL = "control"
CONF_PROTOCOL = "protocol"

# [scenario]
CONF_NAME = "name"
CONF_CONFIGURATION = "configuration"
CONF_SEED = "seed"
CONF_REPEAT = "repeat"
CONF_PROTOCOLS = "protocols"
CONF_OUTPUT_DIR = "output_dir"
CONF_NOISE_LEVEL = "noise_level"
CONF_TELEMETRY = "telemetry"
CONF_TELEMETRY_DECIMATION = "telemetry_decimation"

# [sampling]
CONF_RATE = "rate"
CONF_HARMONICS = "harmonics"
CONF_CUTOFF_RATIO = "cutoff_ratio"
CONF_TIME_SCALE = "time_scale"
CONF_ANALYSIS_FRACTION = "analysis_fraction"

# [plant]
CONF_F1 = "f1"
CONF_F2 = "f2"
CONF_FREQUENCY_RATIO = "frequency_ratio"
CONF_D1 = "d1"
CONF_D2 = "d2"
CONF_BETA = "beta"
CONF_GAMMA = "gamma"
CONF_ALPHA = "alpha"
CONF_MU = "mu"
CONF_V_REF = "v_ref"
CONF_A_SLIP = "a_slip"
CONF_B_FACTORS = "b_factors"
CONF_E_FACTORS = "e_factors"

# [plant.design]
CONF_DIP_DEPTH = "dip_depth"
CONF_DIP_AMPLITUDE = "dip_amplitude"
CONF_INTERACTION = "interaction"
CONF_FRICTION_DAMPING = "friction_damping"

# [exciter]
CONF_GAIN = "gain"
CONF_POLE_FREQ = "pole_freq"
CONF_SAT_LEVEL = "sat_level"
CONF_DRIFT_RATE = "drift_rate"
CONF_DRIFT_ENABLED = "drift_enabled"

# [control.*]
CONF_PLL = "pll"
CONF_AMPLITUDE = "amplitude"
CONF_EXCITATION = "excitation"
CONF_DETECTOR = "detector"
CONF_KP = "kp"
CONF_KI = "ki"
CONF_OUT_MIN = "out_min"
CONF_OUT_MAX = "out_max"
CONF_ANTI_WINDUP = "anti_windup"
CONF_FREQ_LIMIT = "freq_limit"
CONF_CENTER = "center"
CONF_AMP_DEV = "amp_dev"
CONF_FREQ_STD = "freq_std"
CONF_PHASE_STD = "phase_std"
CONF_WINDOW_PERIODS = "window_periods"

# [protocol.*]
CONF_PRT = "prt"
CONF_RCT = "rct"
CONF_ECT = "ect"
CONF_LEVEL_MIN = "level_min"
CONF_LEVEL_MAX = "level_max"
CONF_LEVELS = "levels"
CONF_PHASE_MIN = "phase_min"
CONF_PHASE_MAX = "phase_max"
CONF_POINTS = "points"
CONF_HOLD = "hold"
CONF_SETTLE = "settle"
CONF_TIMEOUT = "timeout"

PROTOCOLS = ("prt", "rct", "ect")
CONFIGURATIONS = ("aligned", "misaligned", "linear")

DEFAULT_SEED = 0
DEFAULT_REPEAT = 1
DEFAULT_PROTOCOLS: list[str] = ["prt", "rct"]
DEFAULT_OUTPUT_DIR = "out"
DEFAULT_NOISE_LEVEL = 0.0
DEFAULT_TELEMETRY_DECIMATION = 10

DEFAULT_RATE = 10_000.0
DEFAULT_HARMONICS = 8
DEFAULT_CUTOFF_RATIO = 0.1
DEFAULT_TIME_SCALE = 1.0
DEFAULT_ANALYSIS_FRACTION = 0.5

DEFAULT_F1 = 101.0
DEFAULT_FREQUENCY_RATIO = 1.89
DEFAULT_D1 = 0.004
DEFAULT_D2 = 0.0004
DEFAULT_V_REF = 2.0
DEFAULT_B_FACTORS: tuple[float, float] = (1.0, 0.2)
DEFAULT_E_FACTORS: tuple[float, float] = (1.0, 0.1)

DEFAULT_GAIN = 4.0
DEFAULT_POLE_FREQ = 2000.0
DEFAULT_SAT_LEVEL = 200.0
DEFAULT_DRIFT_RATE = 0.0

# Loop gains tuned on the linear 101 Hz plant, see README "Controller tuning".
DEFAULT_PLL_KP = 20.0
DEFAULT_PLL_KI = 50.0
DEFAULT_PLL_FREQ_LIMIT = 0.2
DEFAULT_AMP_KP = 1500.0
DEFAULT_AMP_KI = 4000.0
DEFAULT_V_MAX = 10.0
DEFAULT_EXC_KP = 0.02
DEFAULT_EXC_KI = 1.5

DEFAULT_AMP_DEV = 2.0
DEFAULT_FREQ_STD = 0.2
DEFAULT_PHASE_STD = 2.5
DEFAULT_WINDOW_PERIODS = 100

DEFAULT_PRT_LEVEL_MIN = 0.45
DEFAULT_PRT_LEVEL_MAX = 2.6
DEFAULT_PRT_LEVELS = 45
DEFAULT_PRT_HOLD = 16.0
DEFAULT_RCT_LEVEL_MIN = 0.2e-3
DEFAULT_RCT_LEVEL_MAX = 1.4e-3
DEFAULT_RCT_LEVELS = 10
DEFAULT_RCT_PHASE_MIN = 75.0
DEFAULT_RCT_PHASE_MAX = 105.0
DEFAULT_RCT_POINTS = 12
DEFAULT_ECT_LEVEL_MIN = 1.0
DEFAULT_ECT_LEVEL_MAX = 5.0
DEFAULT_ECT_LEVELS = 5
DEFAULT_ECT_PHASE_MIN = 40.0
DEFAULT_ECT_PHASE_MAX = 140.0
DEFAULT_ECT_POINTS = 40
DEFAULT_SETTLE = 20.0
DEFAULT_TIMEOUT = 30.0

PHASE_RESONANCE_DEG = 90.0
