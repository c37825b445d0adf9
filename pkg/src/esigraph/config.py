"""Experiment configuration: flat "key = value" files with dotted sections.

Unknown keys, malformed values, and invalid method names raise
ConfigError naming the offending field.  config_hash() fingerprints
the fully resolved configuration (defaults included) so output files
can embed their provenance.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields

ALL_METHODS = ("proposed", "mne", "sloreta", "mce", "l21")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    # source space and basis
    mesh_subdivisions: int = 2
    mesh_radius: float = 50.0
    mesh_separation: float = 110.0
    basis_neighbors: int = 6
    basis_rho: float | None = None  # None = mean edge length
    # sensors
    sensor_count: int = 32
    sensor_radius: float | None = None  # None = 1.15 * enclosing radius
    sensor_cap: float = 0.5  # covered sphere fraction; 0.5 = upper half
    # simulation
    sim_n_states: int = 3
    sim_samples_per_state: int = 200
    sim_sample_rate_hz: float = 100.0
    sim_patch_radius: float = 20.0
    # benchmark grid
    grid_snr_channel_db: tuple = (30.0, 20.0, 10.0)
    grid_snr_source_db: tuple = (math.inf, 30.0, 10.0)
    grid_repetitions: int = 10
    methods: tuple = ALL_METHODS
    # proposed-method hyperparameters
    proposed_lambda: float = 3.0
    proposed_beta: float = 3.0
    proposed_alpha: float = 0.01
    proposed_gamma1: float = 0.01
    proposed_gamma2: float = 0.01
    proposed_landmarks: int = 20
    proposed_max_outer_iter: int = 100
    proposed_outer_tol: float = 1e-6
    proposed_inner_tol: float = 1e-8
    proposed_inner_max_iter: int = 10_000
    # baselines
    mce_gamma: float = 0.01
    l21_mu: float = 0.05
    mne_reg: float | None = None  # None = scale-aware default
    sloreta_reg: float | None = None
    baseline_tol: float = 1e-8
    baseline_max_iter: int = 50_000
    # execution
    seed: int = 0
    jobs: int = 1
    extras: dict = field(default_factory=dict, compare=False)


def _parse_int(s: str) -> int:
    return int(s)


def _parse_float(s: str) -> float:
    if s.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(s)


def _parse_optional_float(s: str):
    return None if s.strip().lower() in ("auto", "none") else _parse_float(s)


def _parse_float_list(s: str) -> tuple:
    return tuple(_parse_float(tok) for tok in s.split(",") if tok.strip())


def _parse_methods(s: str) -> tuple:
    methods = tuple(tok.strip() for tok in s.split(",") if tok.strip())
    if not methods:
        raise ValueError("method list is empty")
    for m in methods:
        if m not in ALL_METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {ALL_METHODS}")
    return methods


# config key -> (attribute, parser)
KEY_MAP = {
    "mesh.subdivisions": ("mesh_subdivisions", _parse_int),
    "mesh.radius": ("mesh_radius", _parse_float),
    "mesh.separation": ("mesh_separation", _parse_float),
    "basis.neighbors": ("basis_neighbors", _parse_int),
    "basis.rho": ("basis_rho", _parse_optional_float),
    "sensors.count": ("sensor_count", _parse_int),
    "sensors.radius": ("sensor_radius", _parse_optional_float),
    "sensors.cap": ("sensor_cap", _parse_float),
    "sim.n_states": ("sim_n_states", _parse_int),
    "sim.samples_per_state": ("sim_samples_per_state", _parse_int),
    "sim.sample_rate_hz": ("sim_sample_rate_hz", _parse_float),
    "sim.patch_radius": ("sim_patch_radius", _parse_float),
    "grid.snr_channel_db": ("grid_snr_channel_db", _parse_float_list),
    "grid.snr_source_db": ("grid_snr_source_db", _parse_float_list),
    "grid.repetitions": ("grid_repetitions", _parse_int),
    "methods": ("methods", _parse_methods),
    "proposed.lambda": ("proposed_lambda", _parse_float),
    "proposed.beta": ("proposed_beta", _parse_float),
    "proposed.alpha": ("proposed_alpha", _parse_float),
    "proposed.gamma1": ("proposed_gamma1", _parse_float),
    "proposed.gamma2": ("proposed_gamma2", _parse_float),
    "proposed.landmarks": ("proposed_landmarks", _parse_int),
    "proposed.max_outer_iter": ("proposed_max_outer_iter", _parse_int),
    "proposed.outer_tol": ("proposed_outer_tol", _parse_float),
    "proposed.inner_tol": ("proposed_inner_tol", _parse_float),
    "proposed.inner_max_iter": ("proposed_inner_max_iter", _parse_int),
    "mce.gamma": ("mce_gamma", _parse_float),
    "l21.mu": ("l21_mu", _parse_float),
    "mne.reg": ("mne_reg", _parse_optional_float),
    "sloreta.reg": ("sloreta_reg", _parse_optional_float),
    "baseline.tol": ("baseline_tol", _parse_float),
    "baseline.max_iter": ("baseline_max_iter", _parse_int),
    "seed": ("seed", _parse_int),
    "jobs": ("jobs", _parse_int),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in KEY_MAP.items()}


def parse_config_text(text: str, origin: str = "<config>") -> ExperimentConfig:
    cfg = ExperimentConfig()
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{no}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KEY_MAP:
            raise ConfigError(f"{origin}:{no}: unknown field {key!r}")
        attr, parser = KEY_MAP[key]
        try:
            setattr(cfg, attr, parser(value))
        except ValueError as exc:
            raise ConfigError(f"{origin}:{no}: field {key!r}: {exc}") from exc
    validate_config(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), origin=str(path))


def validate_config(cfg: ExperimentConfig) -> None:
    def bad(key, msg):
        raise ConfigError(f"field {key!r}: {msg}")

    if cfg.mesh_subdivisions < 0:
        bad("mesh.subdivisions", "must be >= 0")
    for key in ("mesh.radius", "mesh.separation", "sim.sample_rate_hz"):
        if getattr(cfg, KEY_MAP[key][0]) <= 0:
            bad(key, "must be positive")
    if cfg.basis_neighbors < 1:
        bad("basis.neighbors", "must be >= 1")
    if cfg.sensor_count < 1:
        bad("sensors.count", "must be >= 1")
    if not 0 < cfg.sensor_cap <= 1:
        bad("sensors.cap", "must be in (0, 1]")
    if cfg.sim_n_states < 1 or cfg.sim_samples_per_state < 1:
        bad("sim.n_states", "states and samples per state must be >= 1")
    if cfg.sim_patch_radius < 0:
        bad("sim.patch_radius", "must be >= 0")
    if cfg.grid_repetitions < 1:
        bad("grid.repetitions", "must be >= 1")
    if not cfg.grid_snr_channel_db or not cfg.grid_snr_source_db:
        bad("grid.snr_channel_db", "SNR grids must be nonempty")
    if not cfg.methods:
        bad("methods", "must list at least one method")
    for m in cfg.methods:
        if m not in ALL_METHODS:
            bad("methods", f"unknown method {m!r}")
    if cfg.proposed_landmarks < 1:
        bad("proposed.landmarks", "must be >= 1")
    if cfg.proposed_landmarks > cfg.sim_n_states * cfg.sim_samples_per_state:
        bad("proposed.landmarks", "must not exceed the number of time samples")
    for key in ("proposed.lambda", "proposed.beta", "proposed.alpha",
                "proposed.gamma1", "proposed.gamma2", "mce.gamma", "l21.mu"):
        if getattr(cfg, KEY_MAP[key][0]) <= 0:
            bad(key, "must be positive")
    if cfg.jobs < 1:
        bad("jobs", "must be >= 1")


def config_text(cfg: ExperimentConfig) -> str:
    """Canonical dump of every field, defaults resolved; hash input."""
    lines = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        if f.name == "extras":
            continue
        key = _ATTR_TO_KEY[f.name]
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()[:12]
