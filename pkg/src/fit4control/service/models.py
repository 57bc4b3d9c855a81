"""Pydantic request models: the JSON config schema shared by the HTTP
endpoints and the CLI (one config, one report)."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainConfig(StrictModel):
    kind: Literal["interval", "orthotope", "truncated-confining"] = "interval"
    sides: list[float]
    grid_points_per_side: list[int]
    truncation_center: list[float] | None = None
    truncation_half_width: float | None = None


class PotentialConfig(StrictModel):
    """Either a named analytic form (e.g. "zero", "linear-x",
    "random-piecewise-linear(seed=7, amp=10, knots=8)") or raw grid values
    (row-major)."""

    form: str | None = None
    values: list[float] | None = None
    label: str | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.form is None) == (self.values is None):
            raise ValueError("exactly one of 'form' or 'values' must be given")
        return self


class ControlSetConfig(StrictModel):
    intervals: list[tuple[float, float]] = Field(default=[(0.0, 1.0)])
    anchor: float = 0.0
    delta: float | None = None


class CertifyParamsConfig(StrictModel):
    levels: int = Field(default=20, ge=2)
    gap_prefix_max: int = Field(default=8, ge=1)
    coeff_bound: int = Field(default=50, ge=1)
    relation_tolerance: float = Field(default=1e-9, gt=0)
    zero_threshold: float | None = Field(default=None, gt=0)
    simplicity_tolerance: float | None = Field(default=None, gt=0)
    tail_length: int = Field(default=6, ge=1)


class CertifyRequest(StrictModel):
    domain: DomainConfig
    v: PotentialConfig
    w: PotentialConfig
    control_set: ControlSetConfig = ControlSetConfig()
    params: CertifyParamsConfig = CertifyParamsConfig()


class ScanRequest(StrictModel):
    domain: DomainConfig
    w: PotentialConfig
    samples: int = Field(default=100, ge=1)
    seed: int = 0
    amplitude: float = 10.0
    knots: int = Field(default=8, ge=1)
    params: CertifyParamsConfig = CertifyParamsConfig(levels=8)
    threads: int = Field(default=1, ge=1)


class SnakeRequest(StrictModel):
    dimension: int = Field(ge=1, le=10)
    count: int = Field(ge=1, le=10_000_000)


class HomotopyRequest(StrictModel):
    domain: DomainConfig
    v_base: PotentialConfig
    v_target: PotentialConfig
    w: PotentialConfig
    samples: int = Field(default=11, ge=1)
    levels: int = Field(default=6, ge=2)
    tracked_pairs: list[tuple[int, int]] | None = None
    simplicity_tolerance: float | None = Field(default=None, gt=0)
    zero_threshold: float = Field(default=1e-10, gt=0)


class BlowupRequest(StrictModel):
    domain: DomainConfig
    window: list[tuple[float, float]]
    v_window: PotentialConfig
    v_bar: PotentialConfig
    confinement_levels: list[float] = Field(default=[10.0, 100.0, 1000.0, 10000.0])
    level_count: int = Field(default=1, ge=1)


class StateConfig(StrictModel):
    """A Galerkin state: a basis index (1-based) or explicit complex
    components as [re, im] pairs."""

    basis: int | None = Field(default=None, ge=1)
    components: list[tuple[float, float]] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.basis is None) == (self.components is None):
            raise ValueError("exactly one of 'basis' or 'components' must be given")
        return self


class SystemConfig(StrictModel):
    """A truncated system: explicit (eigenvalues + coupling) or derived from
    a certified triple (domain + v + w + levels)."""

    eigenvalues: list[float] | None = None
    coupling: list[list[float]] | None = None
    domain: DomainConfig | None = None
    v: PotentialConfig | None = None
    w: PotentialConfig | None = None
    levels: int | None = Field(default=None, ge=2)
    control_set: ControlSetConfig | None = None

    @model_validator(mode="after")
    def _one_source(self):
        explicit = self.eigenvalues is not None and self.coupling is not None
        derived = self.domain is not None and self.v is not None and self.w is not None and self.levels is not None
        if explicit == derived:
            raise ValueError(
                "give either (eigenvalues, coupling) or (domain, v, w, levels)"
            )
        return self


class ScheduleSegment(StrictModel):
    value: float
    duration: float = Field(gt=0)


class SimulateRequest(StrictModel):
    system: SystemConfig
    schedule: list[ScheduleSegment]
    initial_state: StateConfig | None = None
    initial_mixture: list[tuple[float, StateConfig]] | None = None
    target_state: StateConfig | None = None
    sample_times: list[float] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.initial_state is None) == (self.initial_mixture is None):
            raise ValueError("exactly one of 'initial_state' or 'initial_mixture' must be given")
        return self


class SearchRequest(StrictModel):
    system: SystemConfig
    initial_state: StateConfig
    target_state: StateConfig
    budget: int = Field(default=10_000, ge=1)
    seed: int = 0
    max_segments: int = Field(default=8, ge=1)
    duration_min: float = Field(default=0.01, gt=0)
    duration_max: float = Field(default=100.0, gt=0)
    threads: int = Field(default=1, ge=1)


REQUEST_MODELS = {
    "certify": CertifyRequest,
    "scan": ScanRequest,
    "snake": SnakeRequest,
    "homotopy": HomotopyRequest,
    "blowup": BlowupRequest,
    "simulate": SimulateRequest,
    "search": SearchRequest,
}
