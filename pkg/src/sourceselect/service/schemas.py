"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..dataio import RunConfig

Algorithm = Literal["naive", "greedy", "random", "grasp", "splice", "datamodel"]


class ConfigSource(BaseModel):
    """A run configuration, either inline or as a server-side file path."""

    model_config = ConfigDict(extra="forbid")

    config: Optional[RunConfig] = None
    config_path: Optional[str] = None


class SelectRequest(ConfigSource):
    algorithm: Optional[Algorithm] = None
    seed: Optional[int] = Field(None, ge=0)
    s_max: Optional[int] = Field(None, ge=1)
    k_max: Optional[int] = Field(None, ge=1)
    grasp_iterations: Optional[int] = Field(None, ge=1)
    rcl_size: Optional[int] = Field(None, ge=1)
    n_training_subsets: Optional[int] = Field(None, ge=2)
    max_evaluations: Optional[int] = Field(None, ge=1)
    out: Optional[str] = None


class SubsetPayload(BaseModel):
    names: list[str]
    mask_hex: str
    size: int


class SelectResponse(BaseModel):
    algorithm: str
    seed: Optional[int]
    subset: SubsetPayload
    gain: float
    cost: float
    profit: float
    models_explored: int
    wall_time_ms: float
    out: Optional[str] = None


class BenchmarkRequest(ConfigSource):
    algorithms: Optional[list[Algorithm]] = Field(None, min_length=1)
    seeds: Optional[list[int]] = Field(None, min_length=1)
    no_percentile: bool = False
    threads: Optional[int] = Field(None, ge=1)
    out: Optional[str] = None


class BenchmarkRow(BaseModel):
    algorithm: str
    seed: Optional[int]
    subset: SubsetPayload
    gain: float
    cost: float
    profit: float
    percentile: Optional[float]
    models_explored: int
    models_explored_pct: float
    delta_profit: Optional[float]
    wall_time_ms: float


class BenchmarkSummaryRow(BaseModel):
    algorithm: str
    runs: int
    mean_percentile: Optional[float]
    min_percentile: Optional[float]
    max_percentile: Optional[float]
    mean_explored_pct: float
    mean_delta_profit: Optional[float]
    mean_wall_time_ms: float


class BenchmarkResponse(BaseModel):
    rows: list[BenchmarkRow]
    summary: list[BenchmarkSummaryRow]
    out: Optional[str] = None


class SynthRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m: int = Field(8, ge=1)
    n: int = Field(500, ge=2)
    p: int = Field(10, ge=1)
    clean: int = Field(3, ge=0)
    noise_clean: float = Field(0.02, ge=0.0, le=0.5)
    noise_corrupt: float = Field(0.45, ge=0.0, le=0.5)
    seed: int = Field(0, ge=0)
    out_dir: str
    force: bool = False


class SynthResponse(BaseModel):
    files: list[str]
    manifest: str
    clean_sources: list[str]


class GroundTruthRequest(ConfigSource):
    out: Optional[str] = None
    force: bool = False
    threads: Optional[int] = Field(None, ge=1)


class GroundTruthResponse(BaseModel):
    m: int
    subsets: int
    best: SubsetPayload
    best_profit: float
    digest: str
    out: Optional[str] = None
    wall_time_ms: float


class ShowRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str


class ShowResponse(BaseModel):
    kind: Literal["report", "ground_truth"]
    lines: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
