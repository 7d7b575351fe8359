"""Flat JSON configuration.

Every physical key carries its unit in the name::

    bandwidth_w_hz          Hz
    p_over_n0_db            dB (10 log10 of P/N0 in 1/sec)
    coherence_time_tc_s     sec
    delay_spread_td_s       sec
    ppm_symbol_time_ts_s    sec
    ppm_guard_time_s        sec
    num_paths_l             count
    duty_cycle_theta        fraction in (0, 1]
    gain_bound_b            dimensionless
    pseudo_random_d         dimensionless
    threshold_alpha         fraction in (0, 1)

Optional sweep keys: ``sweep_parameter`` (one of ``num_paths_l``,
``duty_cycle_theta``, ``bandwidth_w``), ``sweep_values`` (strictly increasing
list) and ``outputs`` (list of selectors, default ``DEFAULT_OUTPUTS``). Missing keys take the reference
defaults; unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from uwbcap.system import ParameterError, SystemParams, db_to_linear

# config key -> (SystemParams field, converter, unit description)
PARAM_KEYS = {
    "bandwidth_w_hz": ("bandwidth_w", float, "Hz"),
    "p_over_n0_db": ("p_over_n0", db_to_linear, "dB"),
    "coherence_time_tc_s": ("coherence_time_tc", float, "seconds"),
    "delay_spread_td_s": ("delay_spread_td", float, "seconds"),
    "ppm_symbol_time_ts_s": ("ppm_symbol_time_ts", float, "seconds"),
    "ppm_guard_time_s": ("ppm_guard_time", float, "seconds"),
    "num_paths_l": ("num_paths_l", int, "integer count"),
    "duty_cycle_theta": ("duty_cycle_theta", float, "fraction in (0, 1]"),
    "gain_bound_b": ("gain_bound_b", float, "dimensionless"),
    "pseudo_random_d": ("pseudo_random_d", float, "dimensionless"),
    "threshold_alpha": ("threshold_alpha", float, "fraction in (0, 1)"),
}
FIELD_TO_KEY = {field: key for key, (field, _, _) in PARAM_KEYS.items()}
FIELD_TO_KEY["physical_delays"] = "physical_delays"

SWEEP_KEYS = ("sweep_parameter", "sweep_values", "outputs")
SWEEPABLE = ("num_paths_l", "duty_cycle_theta", "bandwidth_w")
DEFAULT_OUTPUTS = ("c_awgn", "dsss_lower_known", "dsss_lower_unknown", "dsss_upper", "ppm_upper")

_UNIT_SUFFIX = re.compile(r"_(hz|khz|mhz|ghz|db|dbm|linear|lin|s|sec|ms|us|ns|count)$")


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    values: tuple
    fixed: SystemParams
    outputs: tuple

    def __post_init__(self):
        if self.swept_parameter not in SWEEPABLE:
            raise ConfigError("sweep_parameter", f"must be one of {SWEEPABLE}, got {self.swept_parameter!r}")
        if not self.values:
            raise ConfigError("sweep_values", "must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep_values", "must be strictly increasing")
        if not self.outputs:
            raise ConfigError("outputs", "must name at least one selector")

    def point(self, value) -> SystemParams:
        if self.swept_parameter == "num_paths_l":
            value = int(value)
        try:
            return self.fixed.replace(**{self.swept_parameter: value})
        except ParameterError as exc:
            raise ConfigError("sweep_values", f"value {value!r} is invalid: {exc}") from exc


def _base(key):
    return _UNIT_SUFFIX.sub("", key)


def _suggest(key):
    base = _base(key)
    for known in list(PARAM_KEYS) + list(SWEEP_KEYS):
        if _base(known) == base and known != key:
            return known
    return None


def _number(key, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer and (isinstance(value, float) and not value.is_integer()):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    return value


def params_from_mapping(doc: dict, base: Optional[SystemParams] = None) -> SystemParams:
    """Apply the physical keys of ``doc`` on top of ``base`` (reference defaults)."""
    base = base or SystemParams.reference_defaults()
    changes = {}
    for key, value in doc.items():
        if key in SWEEP_KEYS:
            continue
        if key not in PARAM_KEYS:
            suggestion = _suggest(key)
            if suggestion:
                unit = PARAM_KEYS[suggestion][2] if suggestion in PARAM_KEYS else "see documentation"
                raise ConfigError(key, f"unit suffix mismatch; expected {suggestion!r} ({unit})")
            raise ConfigError(key, f"unknown key; expected one of {sorted(PARAM_KEYS) + list(SWEEP_KEYS)}")
        field, convert, unit = PARAM_KEYS[key]
        number = _number(key, value, integer=(convert is int))
        changes[field] = convert(number)
    try:
        return base.replace(**changes)
    except ParameterError as exc:
        raise ConfigError(FIELD_TO_KEY.get(exc.field, exc.field), str(exc)) from exc


def parse_config_dict(doc: dict, base: Optional[SystemParams] = None):
    """Validate a config document; returns ``(SystemParams, SweepSpec or None)``."""
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a JSON object")
    for key, value in doc.items():
        if isinstance(value, (dict,)):
            raise ConfigError(key, "config must be flat; nested objects are not allowed")
    params = params_from_mapping(doc, base)
    present = [k for k in ("sweep_parameter", "sweep_values") if k in doc]
    if not present:
        if "outputs" in doc:
            raise ConfigError("sweep_parameter", "missing required key (outputs given without a sweep)")
        return params, None
    for key in ("sweep_parameter", "sweep_values"):
        if key not in doc:
            raise ConfigError(key, "missing required key")
    values = doc["sweep_values"]
    if not isinstance(values, list):
        raise ConfigError("sweep_values", "expected a list of numbers")
    values = tuple(_number("sweep_values", v) for v in values)
    outputs = doc.get("outputs", list(DEFAULT_OUTPUTS))
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ConfigError("outputs", "expected a list of selector names")
    from uwbcap.sweeps import SELECTORS

    for name in outputs:
        if name not in SELECTORS:
            raise ConfigError("outputs", f"unknown selector {name!r}; expected one of {sorted(SELECTORS)}")
    sweep = SweepSpec(str(doc["sweep_parameter"]), values, params, tuple(outputs))
    for value in values:
        sweep.point(value)
    return params, sweep


def parse_config(path):
    """Read a flat JSON config file; returns ``(SystemParams, SweepSpec or None)``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path} is not valid JSON: {exc}") from exc
    return parse_config_dict(doc)


def params_to_config(params: SystemParams) -> dict:
    """Inverse of :func:`params_from_mapping` for the sidecar."""
    out = {}
    for key, (field, convert, _) in PARAM_KEYS.items():
        value = getattr(params, field)
        out[key] = params.p_over_n0_db if convert is db_to_linear else value
    return out
