"""
Check configuration: CLI flags over environment (.env) over a YAML settings
file over built-in defaults.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from dotenv import load_dotenv

from src.encoding.bmc import BINARY, CUBES, PER_STEP, QF, QUANTIFIED, SHARED, EncodingOptions
from src.errors import ConfigError
from src.utils.solver_utils import DEFAULT_SOLVER

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "qbmc.yaml"

SINGLE = "single"
DEEPENING = "iterative-deepening"

# CLI spellings of the encoder's option values.
DELTA_MODE_NAMES = {"per-step": PER_STEP, "per_step": PER_STEP, "shared": SHARED}
SELECTOR_NAMES = {"binary": BINARY, "binary_equality": BINARY, "cubes": CUBES, "merged_cubes": CUBES}


@dataclass(frozen=True)
class CheckConfig:
    model_path: Optional[str] = None
    encoding: str = QF
    kmax: Optional[int] = None
    schedule: str = SINGLE
    solver: str = DEFAULT_SOLVER
    timeout: float = 600.0
    options: EncodingOptions = field(default_factory=EncodingOptions)
    output: Optional[str] = None
    as_json: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.encoding not in (QF, QUANTIFIED):
            raise ConfigError(f"unknown encoding {self.encoding!r}")
        if self.kmax is not None and self.kmax < 0:
            raise ConfigError(f"kmax must be >= 0, got {self.kmax}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if self.schedule not in (SINGLE, DEEPENING):
            raise ConfigError(f"unknown k-schedule {self.schedule!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def fingerprint(self) -> str:
        """Stable description of everything that can change a verdict."""
        opts = self.options
        return (
            f"{self.encoding}|{opts.delta_mode}|{opts.selector_mode}|"
            f"{int(opts.include_target_invariant_on_discrete)}{int(opts.out_of_range_guard)}|"
            f"{self.solver}|{self.timeout:g}"
        )


def read_settings(path: Optional[str]) -> Dict[str, Any]:
    """YAML settings; a missing default file is not an error, a missing explicit one is."""
    candidate = Path(path or DEFAULT_CONFIG_FILE)
    if not candidate.exists():
        if path:
            raise ConfigError(f"config file {path} does not exist")
        return {}
    with open(candidate, "r") as file:
        data = yaml.safe_load(file) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {candidate} must contain a mapping")
    logger.debug("loaded settings from %s: %s", candidate, sorted(data))
    return data


def _pick(overrides: Mapping[str, Any], key: str, env: Optional[str], settings: Mapping[str, Any], default):
    value = overrides.get(key)
    if value is not None:
        return value
    if env and os.getenv(env):
        return os.getenv(env)
    if settings.get(key) is not None:
        return settings[key]
    return default


def _mode(value: str, names: Mapping[str, str], what: str) -> str:
    try:
        return names[value]
    except KeyError:
        raise ConfigError(f"unknown {what} {value!r}") from None


def load_config(overrides: Optional[Mapping[str, Any]] = None, config_path: Optional[str] = None) -> CheckConfig:
    """
    Build a CheckConfig. `overrides` holds CLI values (None means not given).
    QBMC_SOLVER and QBMC_TIMEOUT are read from the environment after load_dotenv().
    """
    load_dotenv()
    overrides = dict(overrides or {})
    settings = read_settings(config_path)
    try:
        options = EncodingOptions(
            delta_mode=_mode(_pick(overrides, "delta_mode", None, settings, "per-step"), DELTA_MODE_NAMES, "delta mode"),
            selector_mode=_mode(_pick(overrides, "selector", None, settings, "binary"), SELECTOR_NAMES, "selector"),
            include_target_invariant_on_discrete=bool(
                _pick(overrides, "target_invariant", None, settings, True)
            ),
            out_of_range_guard=bool(_pick(overrides, "range_guard", None, settings, True)),
        )
        kmax = _pick(overrides, "kmax", None, settings, None)
        config = CheckConfig(
            model_path=overrides.get("model_path"),
            encoding=_pick(overrides, "encoding", None, settings, QF),
            kmax=None if kmax is None else int(kmax),
            schedule=_pick(overrides, "schedule", None, settings, SINGLE),
            solver=str(_pick(overrides, "solver", "QBMC_SOLVER", settings, DEFAULT_SOLVER)),
            timeout=float(_pick(overrides, "timeout", "QBMC_TIMEOUT", settings, 600.0)),
            options=options,
            output=overrides.get("output"),
            as_json=bool(overrides.get("as_json", False)),
            jobs=int(_pick(overrides, "jobs", None, settings, 1)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid setting: {e}") from e
    logger.debug("configuration: %s", config)
    return config


def with_kmax(config: CheckConfig, kmax: int) -> CheckConfig:
    return replace(config, kmax=kmax)
