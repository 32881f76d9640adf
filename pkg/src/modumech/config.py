"""Strict YAML run configuration for the command-line front end.

Dimensionless rates of the dynamics experiments carry the suffix ``_dimless``
(units where the reference rate is 1 and hbar = 1); circuit quantities carry
their SI unit (``_rad_per_s``, ``_per_s``, ``_s``, ``_A``, ``_F``, ``_m``,
``_kg``). Unknown keys anywhere are rejected.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .hilbert import DEFAULT_TAIL_TOL

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "RunConfig",
    "load_config",
    "apply_overrides",
    "section_for",
]

EXPERIMENTS = (
    "propagate",
    "compare-rwa",
    "cat-prep",
    "optimize",
    "scan-tau",
    "photon-pressure",
    "circuit-design",
)

TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    """Unreadable or invalid configuration; ``field`` is a dotted path when known."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


class PropagateSection(_Strict):
    dim_a: int = Field(3, ge=1)
    dim_b: int = Field(30, ge=2)
    omega_dimless: float = 0.0
    Omega_dimless: float = Field(1.0, gt=0)
    g_dimless: float = Field(0.1, ge=0)
    t_final_dimless: float = Field(4 * math.pi, ge=0)
    n_times: int = Field(21, ge=1)
    lc_amplitudes: Optional[list[float]] = None
    tail_tol: Optional[float] = Field(DEFAULT_TAIL_TOL, gt=0)


class CompareRwaSection(_Strict):
    dim_a: int = Field(3, ge=1)
    dim_b: int = Field(30, ge=2)
    g_max_dimless: float = Field(1.0, ge=0)
    eta: float = Field(1.0, ge=0, le=1)
    delta_dimless: float = 1.0
    omega_dimless: float = 0.0
    g_over_nu: list[float] = Field(default_factory=lambda: [0.04, 0.02, 0.01])
    g_t: float = Field(math.pi / 2, ge=0)
    tail_tol: Optional[float] = Field(DEFAULT_TAIL_TOL, gt=0)

    @model_validator(mode="after")
    def _ratios_positive(self):
        if any(not r > 0 for r in self.g_over_nu):
            raise ValueError("g_over_nu entries must be > 0")
        return self


class CatPrepSection(_Strict):
    alpha: float = 1.5
    g_dimless: float = Field(1.0, gt=0)
    g_over_nu: float = Field(0.01, gt=0)
    dim_a: int = Field(15, ge=1)
    dim_b: int = Field(40, ge=2)
    omega_dimless: float = 0.0
    tail_tol: Optional[float] = Field(DEFAULT_TAIL_TOL, gt=0)


class OptimizeSection(_Strict):
    N: int = Field(10, ge=1)
    tau_dimless: float = Field(1.0, ge=0)
    g_max_dimless: float = Field(math.pi, gt=0)
    Omega_bounds_dimless: Optional[tuple[float, float]] = None
    Omega_init_max_dimless: Optional[float] = Field(None, ge=0)
    restarts: int = Field(20, ge=1)
    max_iters: int = Field(3000, ge=1)
    tol: float = Field(1e-16, gt=0)
    momentum_steps: int = Field(60, ge=0)
    dim_a: int = Field(3, ge=1)
    dim_b: int = Field(30, ge=2)
    lc_amplitudes: Optional[list[float]] = None
    n_jobs: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _bounds_ordered(self):
        b = self.Omega_bounds_dimless
        if b is not None and not 0 <= b[0] <= b[1]:
            raise ValueError("Omega_bounds_dimless must satisfy 0 <= lower <= upper")
        return self


class ScanTauSection(OptimizeSection):
    tau_list_dimless: list[float] = Field(default_factory=lambda: [0.8, 0.9, 0.95, 0.99, 1.0])
    segment_counts: list[int] = Field(default_factory=lambda: [10, 15])


class PhotonPressureSection(_Strict):
    g_per_s: float = Field(5780.0, ge=0)
    n_photons: int = Field(10, ge=0)
    gamma_per_s: float = Field(TWO_PI * 1e7 / 1e5, ge=0)
    t_final_s: float = Field(0.01, gt=0)
    n_times: int = Field(51, ge=2)


class CircuitDesignSection(_Strict):
    I0_A: float = Field(1e-6, gt=0)
    C_F: float = Field(1e-12, gt=0)
    d_m: float = Field(1e-7, gt=0)
    m_kg: float = Field(1e-15, gt=0)
    Omega_rad_per_s: float = Field(TWO_PI * 1e7, gt=0)
    Q: float = Field(1e5, gt=0)
    eta: float = Field(0.2, ge=0, le=1)
    g_rad_per_s: float = Field(TWO_PI * 100, gt=0)
    g_pressure_per_s: float = Field(5780.0, gt=0)
    n_photons: int = Field(10, ge=0)
    nu_rad_per_s: float = Field(TWO_PI * 1e7, ge=0)
    flux_depth: float = Field(0.5, ge=0, le=0.5)
    omega_floor_rad_per_s: Optional[float] = Field(None, gt=0)
    adiabatic_threshold: float = Field(0.01, gt=0)


SECTION_MODELS = {
    "propagate": PropagateSection,
    "compare-rwa": CompareRwaSection,
    "cat-prep": CatPrepSection,
    "optimize": OptimizeSection,
    "scan-tau": ScanTauSection,
    "photon-pressure": PhotonPressureSection,
    "circuit-design": CircuitDesignSection,
}


class RunConfig(_Strict):
    experiment: Optional[Literal[EXPERIMENTS]] = None
    seed: int = 0
    output_dir: str = "results"
    format: Literal["csv", "json"] = "csv"
    propagate: PropagateSection = PropagateSection()
    compare_rwa: CompareRwaSection = Field(CompareRwaSection(), alias="compare-rwa")
    cat_prep: CatPrepSection = Field(CatPrepSection(), alias="cat-prep")
    optimize: OptimizeSection = OptimizeSection()
    scan_tau: ScanTauSection = Field(ScanTauSection(), alias="scan-tau")
    photon_pressure: PhotonPressureSection = Field(PhotonPressureSection(), alias="photon-pressure")
    circuit_design: CircuitDesignSection = Field(CircuitDesignSection(), alias="circuit-design")

    def resolved(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


def section_for(config: RunConfig, experiment: str):
    return getattr(config, experiment.replace("-", "_"))


def _field_path(err: dict) -> str:
    return ".".join(str(p) for p in err["loc"])


def _validate(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = _field_path(first)
        raise ConfigError(f"{path}: {first['msg']}", field=path) from None


def _read(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    return data


def apply_overrides(raw: dict, overrides, experiment: str | None = None) -> dict:
    """Apply ``key=value`` overrides; bare keys go into the experiment's section.

    Values are parsed as YAML scalars or flow collections.
    """
    raw = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    top = set(RunConfig.model_fields) | set(SECTION_MODELS)
    for item in overrides or ():
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {item!r}: {exc}", field=key) from None
        parts = key.split(".")
        if parts[0] not in top:
            if experiment is None:
                raise ConfigError(f"override {key!r} needs an experiment section", field=key)
            parts = [experiment] + parts
        node = raw
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section", field=key)
            node = child
        node[parts[-1]] = value
    return raw


def load_config(path=None, overrides=(), experiment: str | None = None, seed: int | None = None,
                output_dir: str | None = None, fmt: str | None = None) -> RunConfig:
    """Read, override and validate a configuration; raises :class:`ConfigError`."""
    raw = _read(path)
    if experiment is None:
        experiment = raw.get("experiment")
    raw = apply_overrides(raw, overrides, experiment)
    for key, value in (("experiment", experiment), ("seed", seed), ("output_dir", output_dir), ("format", fmt)):
        if value is not None:
            raw[key] = value
    return _validate(raw)
