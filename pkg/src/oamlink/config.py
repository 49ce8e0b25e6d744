"""Sectioned key=value run configuration.

Every key has a default; an empty file yields the stock evaluation setup
(5.8 GHz carrier, centre distance of 20 wavelengths, half-metre arrays,
unit gain constant, zero reference rotations).  Unknown sections or keys
are rejected, as are out-of-range values.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass

import numpy as np

from .channel import SPEED_OF_LIGHT


class ConfigError(ValueError):
    """Raised for malformed, unknown or out-of-range configuration input."""


DEFAULT_F_HZ = 5.8e9
DEFAULT_D_WAVELENGTHS = 20.0


def _positive(value: float, key: str) -> float:
    if value <= 0.0:
        raise ConfigError(f"{key} must be positive, got {value}")
    return value


@dataclass
class RunConfig:
    """Flat view of one run configuration; see ``SCHEMA`` for the file layout."""

    k: int = 8
    v: int = 8
    r_t: float = 0.5
    r_r: float = 0.5
    a_t_deg: float = 0.0
    a_r_deg: float = 0.0
    d_m: float = DEFAULT_D_WAVELENGTHS * SPEED_OF_LIGHT / DEFAULT_F_HZ
    theta_deg: float = 40.0
    phi_deg: float = 1.0
    f_hz: float = DEFAULT_F_HZ
    beta_real: float = 1.0
    beta_imag: float = 0.0
    model: str = "farfield"
    se_variant: str = "both"
    seed: int = 0
    num_seeds: int = 1
    snr_db: float = 20.0
    power_total_w: float = 1.0
    pilot_snr_db: float = math.inf
    iterations: int = 1
    tolerance_rad: float = 1e-4
    quantizer_bits: int = 0
    nls_phi_max_deg: float = math.degrees(0.1)
    snr_db_start: float = 0.0
    snr_db_stop: float = 40.0
    snr_db_step: float = 10.0
    theta_deg_start: float = 0.0
    theta_deg_stop: float = 350.0
    theta_deg_step: float = 10.0
    phi_deg_start: float = 0.0
    phi_deg_stop: float = 1.6
    phi_deg_step: float = 0.1
    element_counts: tuple = (4, 8, 16)

    def snr_grid(self) -> np.ndarray:
        return _inclusive_grid(self.snr_db_start, self.snr_db_stop, self.snr_db_step)

    def theta_grid_deg(self) -> np.ndarray:
        return _inclusive_grid(self.theta_deg_start, self.theta_deg_stop, self.theta_deg_step)

    def phi_grid_deg(self) -> np.ndarray:
        return _inclusive_grid(self.phi_deg_start, self.phi_deg_stop, self.phi_deg_step)


# section -> key -> (parser, validator or None)
SCHEMA = {
    "array": {
        "k": ("int", lambda x: x >= 1),
        "v": ("int", lambda x: x >= 1),
        "r_t": ("float", lambda x: x > 0),
        "r_r": ("float", lambda x: x > 0),
        "a_t_deg": ("float", None),
        "a_r_deg": ("float", None),
    },
    "pose": {
        "d_m": ("float", lambda x: x > 0),
        "theta_deg": ("float", None),
        "phi_deg": ("float", lambda x: 0.0 <= x < 90.0),
    },
    "link": {
        "f_hz": ("float", lambda x: x > 0),
        "beta_real": ("float", None),
        "beta_imag": ("float", None),
    },
    "run": {
        "model": ("choice:exact,farfield", None),
        "se_variant": ("choice:paper,sinr,both", None),
        "seed": ("int", lambda x: x >= 0),
        "num_seeds": ("int", lambda x: x >= 1),
        "snr_db": ("float", None),
        "power_total_w": ("float", lambda x: x > 0),
        "pilot_snr_db": ("float_or_inf", None),
        "iterations": ("int", lambda x: 1 <= x <= 5),
        "tolerance_rad": ("float", lambda x: x > 0),
        "quantizer_bits": ("int", lambda x: x >= 0),
        "nls_phi_max_deg": ("float", lambda x: 0.0 < x < 90.0),
    },
    "sweep": {
        "snr_db_start": ("float", None),
        "snr_db_stop": ("float", None),
        "snr_db_step": ("float", lambda x: x > 0),
        "theta_deg_start": ("float", None),
        "theta_deg_stop": ("float", None),
        "theta_deg_step": ("float", lambda x: x > 0),
        "phi_deg_start": ("float", lambda x: 0.0 <= x < 90.0),
        "phi_deg_stop": ("float", lambda x: 0.0 <= x < 90.0),
        "phi_deg_step": ("float", lambda x: x > 0),
        "element_counts": ("int_list", None),
    },
}

_FIELD_SECTION = {
    key: section for section, keys in SCHEMA.items() for key in keys
}


def _inclusive_grid(start: float, stop: float, step: float) -> np.ndarray:
    if stop < start:
        raise ConfigError(f"empty range: stop {stop} below start {start}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _parse_value(kind: str, raw: str, key: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float_or_inf":
            return math.inf if raw.strip().lower() in ("inf", "none") else float(raw)
        if kind == "int_list":
            values = tuple(int(part) for part in raw.split(",") if part.strip())
            if not values:
                raise ValueError("empty list")
            return values
        if kind.startswith("choice:"):
            choices = kind.split(":", 1)[1].split(",")
            if raw not in choices:
                raise ValueError(f"must be one of {choices}")
            return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    raise AssertionError(f"unknown schema kind {kind}")


def parse_config_text(text: str) -> RunConfig:
    """Parse sectioned key=value text into a validated RunConfig."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = RunConfig()
    d_m_given = False
    f_hz_given = False
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind, validator = SCHEMA[section][key]
            value = _parse_value(kind, raw, key)
            if validator is not None and not validator(value):
                raise ConfigError(f"out-of-range value for {key}: {raw!r}")
            setattr(cfg, key, value)
            d_m_given = d_m_given or key == "d_m"
            f_hz_given = f_hz_given or key == "f_hz"

    # The default centre distance tracks the carrier: 20 wavelengths.
    if f_hz_given and not d_m_given:
        cfg.d_m = DEFAULT_D_WAVELENGTHS * SPEED_OF_LIGHT / cfg.f_hz
    _validate(cfg)
    return cfg


def parse_config(path: str) -> RunConfig:
    """Read and parse a configuration file."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read())


def _validate(cfg: RunConfig) -> None:
    for counts_key in ("element_counts",):
        counts = getattr(cfg, counts_key)
        for count in counts:
            if count < 4 or count % 4 != 0:
                raise ConfigError(
                    f"out-of-range value for {counts_key}: {counts} "
                    "(angle recovery needs element counts divisible by 4)"
                )
    for start, stop, step in (
        (cfg.snr_db_start, cfg.snr_db_stop, cfg.snr_db_step),
        (cfg.theta_deg_start, cfg.theta_deg_stop, cfg.theta_deg_step),
        (cfg.phi_deg_start, cfg.phi_deg_stop, cfg.phi_deg_step),
    ):
        _inclusive_grid(start, stop, step)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return "inf" if math.isinf(value) else format(value, ".17g")
    if isinstance(value, tuple):
        return ",".join(str(part) for part in value)
    return str(value)


def render_config(cfg: RunConfig) -> str:
    """Render a RunConfig back into parseable sectioned text."""
    out = io.StringIO()
    for section, keys in SCHEMA.items():
        out.write(f"[{section}]\n")
        for key in keys:
            out.write(f"{key} = {_format_value(getattr(cfg, key))}\n")
        out.write("\n")
    return out.getvalue()


def config_comment_lines(cfg: RunConfig) -> list[str]:
    """One comment line per key, echoed into CSV headers."""
    lines = []
    for section, keys in SCHEMA.items():
        for key in keys:
            lines.append(f"# {section}.{key} = {_format_value(getattr(cfg, key))}")
    return lines


def beta_complex(cfg: RunConfig) -> complex:
    return complex(cfg.beta_real, cfg.beta_imag)


__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "render_config",
    "config_comment_lines",
    "beta_complex",
]
