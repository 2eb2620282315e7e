"""Run-configuration files: unit-suffixed JSON, strict keys, canonical SI.

Every physical quantity in a config file carries an explicit unit suffix
("-1.2 MHz", "47 us", "0.5 1/us"); frequencies are quoted the way data
sheets quote them (f, not omega) and canonicalize to angular rad/s.
Unknown keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .device import DeviceParams
from .protocol import ProtocolConfig

TWO_PI = 2 * math.pi

_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_FREQ_UNITS = {"GHz": 1e9, "MHz": 1e6, "kHz": 1e3, "Hz": 1.0}
_RATE_UNITS = {"1/s": 1.0, "1/ms": 1e3, "1/us": 1e6, "1/ns": 1e9}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def parse_quantity(value: Any, dimension: str, field: str) -> float:
    """Parse "number unit" into SI (angular rad/s for frequencies)."""
    if dimension == "dimensionless":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{field}: expected a bare number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{field}: expected a string with a unit suffix, got {value!r}")
    parts = value.split()
    if len(parts) != 2:
        raise ConfigError(f"{field}: malformed quantity {value!r} (want 'number unit')")
    try:
        number = float(parts[0])
    except ValueError:
        raise ConfigError(f"{field}: cannot parse number in {value!r}") from None
    unit = parts[1]
    if dimension == "time":
        if unit not in _TIME_UNITS:
            raise ConfigError(f"{field}: unknown time unit {unit!r}")
        return number * _TIME_UNITS[unit]
    if dimension == "frequency":
        if unit not in _FREQ_UNITS:
            raise ConfigError(f"{field}: unknown frequency unit {unit!r}")
        return TWO_PI * number * _FREQ_UNITS[unit]
    if dimension == "rate":
        if unit not in _RATE_UNITS:
            raise ConfigError(f"{field}: unknown rate unit {unit!r}")
        return number * _RATE_UNITS[unit]
    if dimension == "angle":
        if unit != "rad":
            raise ConfigError(f"{field}: angles must be given in rad")
        return number
    raise ConfigError(f"{field}: unknown dimension {dimension!r}")


def format_quantity(value: float, dimension: str, unit: str) -> Any:
    if dimension == "dimensionless":
        return value
    if dimension == "time":
        return f"{value / _TIME_UNITS[unit]:.12g} {unit}"
    if dimension == "frequency":
        return f"{value / (TWO_PI * _FREQ_UNITS[unit]):.12g} {unit}"
    if dimension == "rate":
        return f"{value / _RATE_UNITS[unit]:.12g} {unit}"
    if dimension == "angle":
        return f"{value:.12g} rad"
    raise ValueError(dimension)


_DEVICE_SCHEMA = {
    "chi_e": ("frequency", "MHz"),
    "chi_f": ("frequency", "MHz"),
    "kerr_K": ("frequency", "kHz"),
    "anharmonicity_alpha": ("frequency", "MHz"),
    "t1_ge": ("time", "us"),
    "t1_ef": ("time", "us"),
    "tphi_ge": ("time", "us"),
    "tphi_gf": ("time", "us"),
    "t1_cavity": ("time", "ms"),
    "nbar_thermal": ("dimensionless", None),
    "injected_dephasing_rate": ("rate", "1/us"),
    "injected_ef_noise_rate": ("rate", "1/us"),
    "injected_dephasing_cavity_fraction": ("dimensionless", None),
}

_PROTOCOL_SCHEMA = {
    "variant": ("literal", None),
    "theta": ("angle", "rad"),
    "et_drive_on": ("bool", None),
    "snap_duration": ("time", "us"),
    "swap_duration": ("time", "ns"),
    "measurement_duration": ("time", "us"),
    "measurement_fidelity": ("matrix3", None),
    "max_repeats": ("int", None),
    "repeat_on": ("literal", None),
    "drive_model": ("literal", None),
    "envelope_shape": ("literal", None),
    "envelope_sigma": ("time?", "us"),
    "raman_leakage_prob": ("dimensionless", None),
    "readout_dephasing_prob": ("dimensionless", None),
    "h_mixing_prob": ("dimensionless", None),
    "kerr_precompensation": ("bool", None),
    "include_kerr": ("bool", None),
    "dephasing_model": ("literal", None),
    "cavity_dim": ("int", None),
    "tolerance": ("dimensionless", None),
    "drive_phase_trims": ("floats?", None),
    "drive_area_trim": ("dimensionless", None),
}


def _check_keys(section: dict, schema: dict, name: str):
    unknown = set(section) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")


def device_params_from_dict(section: dict) -> DeviceParams:
    _check_keys(section, _DEVICE_SCHEMA, "device")
    kwargs = {}
    for key, value in section.items():
        dimension, _ = _DEVICE_SCHEMA[key]
        kwargs[key] = parse_quantity(value, dimension, f"device.{key}")
    try:
        return DeviceParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"device parameters rejected: {exc}") from exc


def device_params_to_dict(params: DeviceParams) -> dict:
    out = {}
    for key, (dimension, unit) in _DEVICE_SCHEMA.items():
        out[key] = format_quantity(getattr(params, key), dimension, unit)
    return out


def protocol_config_from_dict(section: dict) -> ProtocolConfig:
    _check_keys(section, _PROTOCOL_SCHEMA, "protocol")
    kwargs = {}
    for key, value in section.items():
        dimension, _ = _PROTOCOL_SCHEMA[key]
        field = f"protocol.{key}"
        if dimension in ("literal", "bool", "int"):
            kwargs[key] = value
        elif dimension == "matrix3":
            kwargs[key] = np.asarray(value, dtype=float)
        elif dimension == "time?":
            kwargs[key] = None if value is None else parse_quantity(value, "time", field)
        elif dimension == "floats?":
            kwargs[key] = None if value is None else tuple(float(v) for v in value)
        else:
            kwargs[key] = parse_quantity(value, dimension, field)
    try:
        return ProtocolConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"protocol configuration rejected: {exc}") from exc


def protocol_config_to_dict(config: ProtocolConfig) -> dict:
    out = {}
    for key, (dimension, unit) in _PROTOCOL_SCHEMA.items():
        value = getattr(config, key)
        if dimension in ("literal", "bool", "int"):
            out[key] = value
        elif dimension == "matrix3":
            out[key] = np.asarray(value, dtype=float).tolist()
        elif dimension == "time?":
            out[key] = None if value is None else format_quantity(value, "time", unit)
        elif dimension == "floats?":
            out[key] = None if value is None else list(value)
        else:
            out[key] = format_quantity(value, dimension, unit)
    return out


_TOP_LEVEL_KEYS = {"device", "protocol", "seed", "simulate_gate", "wigner", "rb",
                   "sweep", "check", "budget"}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """A parsed run file: shared device/protocol plus command sections."""

    device: DeviceParams
    protocol: Optional[ProtocolConfig]
    seed: int
    sections: dict
    raw: dict

    def section(self, name: str) -> dict:
        if name not in self.sections:
            raise ConfigError(f"config has no [{name}] section")
        return self.sections[name]


def load_run_config(path) -> RunConfig:
    text = Path(path).read_text()
    return parse_run_config(text)


def parse_run_config(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    device = device_params_from_dict(raw.get("device", {}))
    protocol = protocol_config_from_dict(raw["protocol"]) if "protocol" in raw else None
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    sections = {k: v for k, v in raw.items() if k not in ("device", "protocol", "seed")}
    return RunConfig(device=device, protocol=protocol, seed=seed,
                     sections=sections, raw=raw)


def bundled_config_path(name: str) -> Path:
    """Path of a configuration file shipped with the package."""
    root = resources.files("snapgate") / "configs" / name
    if not root.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return Path(str(root))


def resolve_config_path(spec: str) -> Path:
    if spec.startswith("bundled:"):
        return bundled_config_path(spec.split(":", 1)[1])
    return Path(spec)
