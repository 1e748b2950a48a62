"""YAML run configuration: schema, loading, overrides.

Every section is optional; omitted keys take the defaults below. Unknown
keys anywhere are an error. Example::

    experiment:
      variant: gan4
      iterations: 10000
      seed: 0
    loss:
      hinge_convention: lag_penalty
    bench:
      seeds: [0, 1, 2]
    output:
      out_dir: results
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .losses import CouplingGraph, LossConfig
from .synthdata import CurveBand, Quadratic, default_grid
from .trainer import NAMED_VARIANTS, ExperimentSpec


class ConfigError(ValueError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ExperimentSection(_Section):
    variant: Literal["gan1", "gan2", "gan3", "gan4", "custom"] = "gan4"
    k: Optional[int] = Field(None, ge=1, description="generator count; custom variant only")
    edges: Optional[list[tuple[int, int]]] = None
    iterations: int = Field(10_000, ge=1)
    batch_size: int = Field(64, ge=1)
    optimizer: Literal["sgd", "adam"] = "adam"
    lr_d: float = Field(5e-5, gt=0)
    lr_g: float = Field(1e-4, gt=0)
    latent_dim: int = Field(8, ge=1)
    hidden: list[int] = Field(default_factory=lambda: [32, 32])
    seed: int = Field(0, ge=0, lt=2**64)
    checkpoint_iters: list[int] = Field(default_factory=lambda: [1, 2500, 8000])
    checkpoint_batch: int = Field(64, ge=1)

    @model_validator(mode="after")
    def _custom_graph(self):
        if self.variant == "custom":
            if self.k is None or self.edges is None:
                raise ValueError("custom variant needs both 'k' and 'edges'")
        elif self.k is not None or self.edges is not None:
            raise ValueError(f"'k' and 'edges' are fixed by variant {self.variant}")
        return self


class LossSection(_Section):
    formulation: Literal["standard_bce", "paper_literal"] = "standard_bce"
    hinge_convention: Literal["lag_penalty", "lead_penalty"] = "lag_penalty"


class BandSection(_Section):
    lower: tuple[float, float, float] = (1.0, 0.0, 0.0)
    upper: tuple[float, float, float] = (1.0, 0.0, 1.0)
    n_points: int = Field(16, ge=3)
    x_min: float = -1.0
    x_max: float = 1.0


class AnalysisSection(_Section):
    band_frac: float = Field(0.01, gt=0)
    window: int = Field(500, ge=1)
    smooth: int = Field(50, ge=1)
    burn_in: int = Field(1000, ge=0)
    eval_samples: int = Field(256, ge=2)
    containment_tol_frac: float = Field(0.02, ge=0)
    d_target: Optional[float] = None
    g_target: Optional[float] = None


class OutputSection(_Section):
    out_dir: str = "results"
    plots: bool = True


class BenchSection(_Section):
    seeds: list[int] = Field(default_factory=lambda: list(range(10)))
    variants: list[Literal["gan1", "gan2", "gan3", "gan4"]] = Field(
        default_factory=lambda: list(NAMED_VARIANTS))

    @field_validator("seeds")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("seed list must be nonempty")
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        return v


class RunConfig(_Section):
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    loss: LossSection = Field(default_factory=LossSection)
    band: BandSection = Field(default_factory=BandSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    output: OutputSection = Field(default_factory=OutputSection)
    bench: BenchSection = Field(default_factory=BenchSection)

    def band_obj(self) -> CurveBand:
        b = self.band
        return CurveBand(Quadratic(*b.lower), Quadratic(*b.upper),
                         default_grid(b.n_points, b.x_min, b.x_max))

    def experiment_spec(self, variant: str | None = None, seed: int | None = None) -> ExperimentSpec:
        e = self.experiment
        variant = variant or e.variant
        graph = CouplingGraph(e.k, frozenset(map(tuple, e.edges))) if variant == "custom" else None
        try:
            return ExperimentSpec(
                variant=variant, graph=graph,
                loss_config=LossConfig(self.loss.formulation, self.loss.hinge_convention),
                iterations=e.iterations, batch_size=e.batch_size, optimizer=e.optimizer,
                lr_d=e.lr_d, lr_g=e.lr_g, latent_dim=e.latent_dim, hidden=tuple(e.hidden),
                band=self.band_obj(), seed=e.seed if seed is None else seed,
                checkpoint_iters=tuple(e.checkpoint_iters), checkpoint_batch=e.checkpoint_batch)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: Any) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    try:
        cfg = RunConfig.model_validate(data)
        cfg.band_obj()
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    except ValueError as exc:
        raise ConfigError(f"band: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def apply_overrides(cfg: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """Return a copy with dotted-path overrides applied, e.g. ``{"experiment.seed": 7}``."""
    data = cfg.model_dump()
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if not key or section not in data or not isinstance(data[section], dict):
            raise ConfigError(f"unknown override {dotted!r}")
        if key not in data[section]:
            raise ConfigError(f"unknown override {dotted!r}")
        data[section][key] = value
    return parse_config(data)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)
