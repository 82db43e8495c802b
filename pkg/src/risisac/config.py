"""Scenario configuration: defaults, YAML loading, validation, sweeps.

Config files are flat YAML key/value maps; any subset of the keys below
may be given and the rest take the default deployment values.
"""

import math
from dataclasses import dataclass, field, fields, replace

import yaml

from .geometry import SPEED_OF_LIGHT, InvalidConfig, ris_grid_shape
from .optimizer import Scheme


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


SWEEP_VARS = ("none", "m_ris", "p_k_dbm", "rate_k_th_bps", "x_ris")


@dataclass(frozen=True)
class ScenarioConfig:
    # arrays and devices
    n_ap: int = 8
    m_ris: int = 32
    k_devices: int = 3
    frequency_hz: float = 28e9
    ap_aperture_m: float = 0.5
    ris_spacing_m: float | None = None   # defaults to half a wavelength

    # powers / noise / band
    p_s_dbm: float = 15.0
    p_k_dbm: float = 15.0
    sigma2_dbm: float = -75.0
    bandwidth_hz: float = 50e6
    band_offset_hz: float = 5e7
    rho_so: float = 1e-9
    rho_isac: float = 1e-10
    sigma_tau2_s2: float = 1.2e-18
    beta_s: float = 2e-5
    pulse_duration_s: float = 1e-7

    # rate thresholds
    rate_s_th_bps: float = 5e6
    rate_k_th_bps: float = 2e6

    # geometry
    q_ap: tuple = (0.0, 0.0, 5.0)
    q_ris: tuple = (25.0, 0.0, 10.0)
    q_s: tuple = (20.0, 10.0, 0.0)
    device_radius_m: float = 80.0
    device_arc_rad: tuple = (0.0, 2.0 * math.pi)
    min_separation_m: float = 1.0

    # experiment plan
    schemes: tuple = ("proposed", "random-ris", "full-isac", "equal-split", "full-so")
    sweep_var: str = "none"
    sweep_values: tuple = ()
    seeds: tuple = (0,)

    # algorithm knobs
    alpha_step: float = 0.01
    ao_tol: float = 1e-3
    ao_max_iter: int = 50
    randomization_samples: int = 200
    sdr_tol: float = 1e-6
    coherent_interference: bool = True
    fim_n_scaling: str = "main"

    def __post_init__(self):
        for tup in ("q_ap", "q_ris", "q_s", "device_arc_rad", "schemes",
                    "sweep_values", "seeds"):
            object.__setattr__(self, tup, tuple(getattr(self, tup)))
        _validate(self)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    @property
    def ap_spacing(self) -> float:
        return self.ap_aperture_m / (self.n_ap - 1)

    @property
    def ris_spacing(self) -> float:
        if self.ris_spacing_m is not None:
            return self.ris_spacing_m
        return self.wavelength / 2.0

    def scheme_list(self) -> list:
        return [Scheme(s) for s in self.schemes]


def _positive(cfg, names):
    for name in names:
        if getattr(cfg, name) <= 0:
            raise ValidationError(f"{name} must be positive, got {getattr(cfg, name)}")


def _validate(cfg: ScenarioConfig):
    if cfg.n_ap < 2:
        raise ValidationError(f"n_ap must be at least 2, got {cfg.n_ap}")
    if cfg.k_devices < 1:
        raise ValidationError(f"k_devices must be positive, got {cfg.k_devices}")
    try:
        ris_grid_shape(cfg.m_ris)
    except InvalidConfig as exc:
        raise ValidationError(str(exc)) from exc
    _positive(cfg, ["frequency_hz", "ap_aperture_m", "bandwidth_hz",
                    "rho_so", "rho_isac", "sigma_tau2_s2", "beta_s",
                    "pulse_duration_s", "rate_s_th_bps", "rate_k_th_bps",
                    "device_radius_m", "min_separation_m", "ao_tol",
                    "sdr_tol", "randomization_samples", "ao_max_iter"])
    if cfg.ris_spacing_m is not None and cfg.ris_spacing_m <= 0:
        raise ValidationError("ris_spacing_m must be positive")
    if not 0.0 < cfg.alpha_step < 1.0:
        raise ValidationError(f"alpha_step must lie in (0, 1), got {cfg.alpha_step}")
    if cfg.band_offset_hz < cfg.bandwidth_hz / 2.0:
        raise ValidationError("band_offset_hz must be at least half the bandwidth")
    if len(cfg.q_ap) != 3 or len(cfg.q_ris) != 3 or len(cfg.q_s) != 3:
        raise ValidationError("node positions must be 3-vectors")
    lo, hi = cfg.device_arc_rad
    if not lo < hi:
        raise ValidationError("device_arc_rad must be an increasing (lo, hi) pair")
    if cfg.sweep_var not in SWEEP_VARS:
        raise ValidationError(
            f"sweep_var must be one of {SWEEP_VARS}, got {cfg.sweep_var!r}")
    if cfg.sweep_var != "none" and not cfg.sweep_values:
        raise ValidationError("sweep_values required when sweep_var is set")
    if not cfg.seeds:
        raise ValidationError("at least one seed is required")
    for s in cfg.schemes:
        try:
            Scheme(s)
        except ValueError as exc:
            raise ValidationError(f"unknown scheme {s!r}") from exc
    if cfg.fim_n_scaling not in ("main", "appendix"):
        raise ValidationError(f"unknown fim_n_scaling {cfg.fim_n_scaling!r}")


_FIELD_NAMES = {f.name for f in fields(ScenarioConfig)}
_FLOAT_FIELDS = {f.name: f.type in (float, float | None, "float", "float | None")
                 for f in fields(ScenarioConfig)}


def load_config(path) -> ScenarioConfig:
    """Config from a flat YAML file; missing keys take deployment defaults."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: expected a flat key/value mapping")
    unknown = set(raw) - _FIELD_NAMES
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for key, value in raw.items():
        # YAML 1.1 reads exponents without a sign ("4.0e6") as strings
        if _FLOAT_FIELDS.get(key) and isinstance(value, str):
            try:
                raw[key] = float(value)
            except ValueError as exc:
                raise ValidationError(f"{key}: expected a number, got {value!r}") from exc
    try:
        return ScenarioConfig(**raw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc)) from exc


def apply_sweep(cfg: ScenarioConfig, value) -> ScenarioConfig:
    """Config with the sweep variable replaced by ``value``."""
    var = cfg.sweep_var
    if var == "none":
        return cfg
    if var == "x_ris":
        return replace(cfg, q_ris=(float(value), cfg.q_ris[1], cfg.q_ris[2]))
    if var == "m_ris":
        return replace(cfg, m_ris=int(value))
    return replace(cfg, **{var: float(value)})
