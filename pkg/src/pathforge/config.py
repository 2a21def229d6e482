"""Flat key-value configuration shared by the library and the CLI.

Config files are plain ``key=value`` lines with dotted keys
(``lowess.half_window=10``), blank lines and ``#`` comments.  Every key has
a default equal to the fixed analysis protocol; runs should normally vary
only the seed and the simulation scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .simulate import AnalysisParams, SimParams


@dataclass(frozen=True)
class SessionConfig:
    fps: float = 25.0
    grid_cm: float = 1.0
    seed: int = 0
    lowess_half_window: int = 10
    lowess_robustness_iters: int = 2
    rrm_schedule: tuple = (3, 2, 1, 1)
    arrest_min_duration_s: float = 0.2
    lingering_threshold_cm_s: float = 5.0
    boundary_sectors: int = 720
    boundary_width_rad: float = 2.0 * math.pi / 360.0
    boundary_quantile: float = 0.95
    boundary_bandwidth: float = 0.15
    boundary_min_count: int = 10
    sim_n_frames: int = 30001
    sim_sigma_cm: float = 0.6
    sim_outlier_rate: float = 0.04
    sim_shifts_cm: tuple = (5.0, 10.0, 15.0)
    sim_target_p: float = 0.36
    sim_pool_size: int = 60
    sim_peak_range_cm_s: tuple = (20.0, 120.0)
    sim_duration_range_s: tuple = (1.0, 8.0)
    sim_grid_cm: float = 2.0
    sim_reps: int = 50
    sim_vac_share: float = 0.0
    sim_vac_burst_s: float = 3.2
    sim_vac_dwell_s: float = 0.08

    def analysis_params(self) -> AnalysisParams:
        return AnalysisParams(half_window=self.lowess_half_window,
                              robustness_iters=self.lowess_robustness_iters,
                              rrm_schedule=self.rrm_schedule,
                              min_arrest_s=self.arrest_min_duration_s)

    def sim_params(self, **overrides) -> SimParams:
        params = SimParams(fps=self.fps, n_frames=self.sim_n_frames,
                           sigma=self.sim_sigma_cm,
                           outlier_rate=self.sim_outlier_rate,
                           shifts=self.sim_shifts_cm,
                           target_p=self.sim_target_p,
                           pool_size=self.sim_pool_size,
                           peak_range=self.sim_peak_range_cm_s,
                           duration_range=self.sim_duration_range_s,
                           min_arrest_s=self.arrest_min_duration_s,
                           grid_cm=self.sim_grid_cm,
                           vac_share=self.sim_vac_share,
                           vac_burst_s=self.sim_vac_burst_s,
                           vac_dwell_s=self.sim_vac_dwell_s)
        return replace(params, **overrides) if overrides else params

    def boundary_kwargs(self) -> dict:
        return dict(sectors=self.boundary_sectors,
                    width=self.boundary_width_rad,
                    quantile=self.boundary_quantile,
                    bandwidth=self.boundary_bandwidth,
                    min_count=self.boundary_min_count)


KEY_MAP = {
    "fps": "fps",
    "grid_cm": "grid_cm",
    "seed": "seed",
    "lowess.half_window": "lowess_half_window",
    "lowess.robustness_iters": "lowess_robustness_iters",
    "rrm.schedule": "rrm_schedule",
    "arrest.min_duration_s": "arrest_min_duration_s",
    "lingering.threshold_cm_s": "lingering_threshold_cm_s",
    "boundary.sectors": "boundary_sectors",
    "boundary.width_rad": "boundary_width_rad",
    "boundary.quantile": "boundary_quantile",
    "boundary.bandwidth": "boundary_bandwidth",
    "boundary.min_count": "boundary_min_count",
    "sim.n_frames": "sim_n_frames",
    "sim.sigma_cm": "sim_sigma_cm",
    "sim.outlier_rate": "sim_outlier_rate",
    "sim.shifts_cm": "sim_shifts_cm",
    "sim.target_p": "sim_target_p",
    "sim.pool_size": "sim_pool_size",
    "sim.peak_range_cm_s": "sim_peak_range_cm_s",
    "sim.duration_range_s": "sim_duration_range_s",
    "sim.grid_cm": "sim_grid_cm",
    "sim.reps": "sim_reps",
    "sim.vac_share": "sim_vac_share",
    "sim.vac_burst_s": "sim_vac_burst_s",
    "sim.vac_dwell_s": "sim_vac_dwell_s",
}

_FIELD_TO_KEY = {v: k for k, v in KEY_MAP.items()}
_FIELD_TYPES = {f.name: f.type for f in fields(SessionConfig)}


def format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        text = "%.9g" % value
        return text if float(text) == value else repr(value)
    return str(value)


def _parse_value(raw: str, template):
    raw = raw.strip()
    try:
        if isinstance(template, tuple):
            cast = int if template and isinstance(template[0], int) else float
            values = tuple(cast(part) for part in _split(raw))
            if not values:
                raise ValueError("empty list")
            return values
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
    except ValueError as err:
        raise ConfigError(f"cannot parse value {raw!r}: {err}")
    return raw


def _split(raw):
    return [part.strip() for part in raw.split(",") if part.strip()]


def parse_config_text(text: str, base: SessionConfig | None = None) -> SessionConfig:
    config = base or SessionConfig()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in KEY_MAP:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field_name = KEY_MAP[key]
        updates[field_name] = _parse_value(raw, getattr(config, field_name))
    return replace(config, **updates)


def load_config(path, base: SessionConfig | None = None) -> SessionConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def config_to_text(config: SessionConfig) -> str:
    lines = [f"{_FIELD_TO_KEY[f.name]}={format_value(getattr(config, f.name))}"
             for f in fields(config)]
    return "\n".join(lines) + "\n"


def config_to_dict(config: SessionConfig) -> dict:
    return {_FIELD_TO_KEY[f.name]: format_value(getattr(config, f.name))
            for f in fields(config)}


def apply_overrides(config: SessionConfig, pairs) -> SessionConfig:
    """Apply CLI ``--set key=value`` overrides on top of a config."""
    text = "\n".join(pairs)
    try:
        return parse_config_text(text, config)
    except ConfigError as err:
        raise ConfigError(f"in --set override: {err}")
