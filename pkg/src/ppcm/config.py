"""Run configuration: JSON ingestion, defaults and range validation.

Angles are radians, delays and pulse widths femtoseconds. Every key of
:class:`RunConfig` may appear in a JSON document or as a ``--flag``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import numpy as np

from .errors import ConfigError


def _logspace(a, b, k):
    return [float(x) for x in np.logspace(a, b, k)]


@dataclass(frozen=True)
class RunConfig:
    # single-photon preparation and projection
    theta_i: float = math.pi / 2
    theta_f: float = math.pi / 2
    epsilon: float = 0.1
    kappa: int = 2
    # coupling and probe
    g: float = 6.1e-8
    n: float = 1e5
    g0: float = 7.92e-8
    # temporal overlap
    fwhm_pump: float = 150.0
    fwhm_single: float = 480.0
    peak_overlap: float = 0.77
    # counting
    nu: int = 10
    n_total: int = 1_000_000
    bg_fraction: float = 0.0
    bg_prob: float = 0.5
    noise_onset_n: float = 0.0
    # scaling sweep
    mode: str = "mc"
    n_list: list = field(default_factory=lambda: [2e4, 5e4, 1e5, 2e5, 5e5, 1e6])
    g_grid: list = field(default_factory=lambda: [k * 1e-8 for k in range(1, 7)])
    designated_g: float | None = None
    delta_p_mode: str = "dispersion"
    weighted_slope: bool = False
    # fi surface
    surface_n: float = 5e4
    surface_g_grid: list = field(default_factory=lambda: _logspace(-12, -1, 45))
    eps_grid: list = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.3, 0.5])
    # delay scan
    delays: list = field(default_factory=lambda: [float(d) for d in range(-1500, 1501, 100)])
    delay_n_list: list = field(default_factory=lambda: [5e4, 1e5, 2e5])
    exact: bool = False
    # large-n theory curve
    theory_g: float = 6.1e-8
    theory_n_grid: list = field(default_factory=lambda: _logspace(4, 15, 45))
    operating_phase: float | None = math.pi / 2
    # epsilon-sweep calibration
    sweep_epsilons: list = field(default_factory=lambda: [0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2])
    calib_n: float = 6e5
    calib_total: int = 50_000_000
    # checks and fits
    oracle_tol: float = 1e-8
    fit_field: str = "delta_g"

    def to_dict(self) -> dict:
        return asdict(self)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_KEYS = {"kappa", "nu", "n_total", "calib_total"}
_BOOL_KEYS = {"weighted_slope", "exact"}
_STR_CHOICES = {
    "mode": ("mc", "exact"),
    "delta_p_mode": ("dispersion", "designated"),
    "fit_field": ("delta_g", "f_extracted", "f_extracted_per_event", "f_extracted_per_rep", "s_slope", "delta_p"),
}
_OPTIONAL_FLOAT = {"designated_g", "operating_phase"}
_LIST_KEYS = {k for k, t in FIELD_TYPES.items() if t == "list"}


def _number(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


def _coerce(key: str, v: Any):
    if key in _BOOL_KEYS:
        if not isinstance(v, bool):
            raise ConfigError(key, f"expected true/false, got {v!r}")
        return v
    if key in _STR_CHOICES:
        if v not in _STR_CHOICES[key]:
            raise ConfigError(key, f"{v!r} not in {list(_STR_CHOICES[key])}")
        return v
    if key in _OPTIONAL_FLOAT and v is None:
        return None
    if key in _LIST_KEYS:
        if not isinstance(v, list) or not v:
            raise ConfigError(key, "expected a nonempty list of numbers")
        return [_number(key, x) for x in v]
    x = _number(key, v)
    if key in _INT_KEYS:
        if x != int(x):
            raise ConfigError(key, f"expected an integer, got {v!r}")
        return int(x)
    return x


def _check(cfg: RunConfig) -> None:
    def need(ok, key, constraint):
        if not ok:
            raise ConfigError(key, f"{key} {constraint} (got {getattr(cfg, key)!r})")

    for k in ("theta_i", "theta_f"):
        need(0.0 <= getattr(cfg, k) <= math.pi, k, "∉ [0, π]")
    need(cfg.kappa in (1, 2), "kappa", "∉ {1, 2}")
    for k in ("g", "g0", "theory_g", "noise_onset_n"):
        need(getattr(cfg, k) >= 0.0, k, "must be ≥ 0")
    for k in ("n", "surface_n", "calib_n"):
        need(getattr(cfg, k) >= 0.0, k, "must be ≥ 0")
    need(cfg.theory_g > 0.0, "theory_g", "must be > 0")
    for k in ("fwhm_pump", "fwhm_single"):
        need(getattr(cfg, k) > 0.0, k, "must be > 0")
    need(0.0 < cfg.peak_overlap <= 1.0, "peak_overlap", "∉ (0, 1]")
    need(0.0 <= cfg.bg_fraction < 1.0, "bg_fraction", "∉ [0, 1)")
    need(0.0 <= cfg.bg_prob <= 1.0, "bg_prob", "∉ [0, 1]")
    need(cfg.nu >= 2, "nu", "must be ≥ 2")
    need(cfg.n_total >= 1, "n_total", "must be ≥ 1")
    need(cfg.calib_total >= 1, "calib_total", "must be ≥ 1")
    need(cfg.designated_g is None or cfg.designated_g >= 0.0, "designated_g", "must be ≥ 0")
    need(cfg.oracle_tol > 0.0, "oracle_tol", "must be > 0")
    need(all(x > 0 for x in cfg.n_list), "n_list", "entries must be > 0")
    need(cfg.n_list == sorted(cfg.n_list) and len(cfg.n_list) >= 3, "n_list", "must be ascending with ≥ 3 entries")
    need(all(x >= 0 for x in cfg.g_grid), "g_grid", "entries must be ≥ 0")
    need(all(x >= 0 for x in cfg.surface_g_grid), "surface_g_grid", "entries must be ≥ 0")
    need(all(x > 0 for x in cfg.theory_n_grid), "theory_n_grid", "entries must be > 0")
    need(all(x > 0 for x in cfg.delay_n_list), "delay_n_list", "entries must be > 0")


def resolve(overrides: dict, base: RunConfig | None = None) -> RunConfig:
    """Merge ``overrides`` onto ``base`` (defaults if omitted) and validate."""
    base = base or RunConfig()
    clean = {}
    for key, v in overrides.items():
        if key not in FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        clean[key] = _coerce(key, v)
    cfg = replace(base, **clean)
    _check(cfg)
    return cfg


def parse_config(document: str | bytes | dict) -> RunConfig:
    """Parse a JSON object into a validated :class:`RunConfig`."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"malformed JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ConfigError("<document>", "top level must be a JSON object")
    return resolve(document)


def parse_flag(key: str, text: str):
    """Parse a command-line string for config key ``key``."""
    if key in _BOOL_KEYS:
        low = text.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(key, f"expected true/false, got {text!r}")
        return low in ("true", "1", "yes")
    if key in _STR_CHOICES:
        return text
    if key in _OPTIONAL_FLOAT and text.strip().lower() in ("none", "null"):
        return None
    try:
        if key in _LIST_KEYS:
            return [float(x) for x in text.split(",") if x.strip()]
        return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as a number") from None
