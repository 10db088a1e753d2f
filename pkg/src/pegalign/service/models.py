"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class ScenarioInfo(BaseModel):
    name: str
    hole_diameter_mm: float
    peg_diameter_mm: float
    clearance_mm: float
    uncertainty_radius_mm: float
    required_depth_mm: float


class BenchRequest(BaseModel):
    """Benchmark run; explicit fields override the optional INI config text."""

    scenario: str | None = None
    method: str | None = Field(default=None, description="comma-separated method list")
    trials: int | None = Field(default=None, ge=1)
    seed: int | None = Field(default=None, ge=0)
    estimator: str | None = None
    config_text: str | None = None


class TrialRowModel(BaseModel):
    index: int
    seed: int
    success: bool
    elapsed_s: float
    insertion_depth_m: float
    outcome_detail: str


class MethodResultModel(BaseModel):
    method: str
    trials: int
    successes: int
    success_rate: float
    mean_success_time_s: float | None
    significant: bool
    rows: list[TrialRowModel]


class ReportModel(BaseModel):
    scenario: str
    trials: int
    seed: int
    entries: list[MethodResultModel]


class ReportMeta(BaseModel):
    generator: str
    version: str
    created_utc: str


class ReportEnvelope(BaseModel):
    meta: ReportMeta
    report: ReportModel


class ServoDemoRequest(BaseModel):
    scenario: str | None = None
    seed: int | None = Field(default=None, ge=0)
    estimator: str | None = None
    config_text: str | None = None


class ServoDemoResponse(BaseModel):
    scenario: str
    seed: int
    status: str
    success: bool
    elapsed_s: float
    iterations: int
    final_planar_error_m: float
    insertion_depth_m: float
    trace_csv: str


class AccuracyRequest(BaseModel):
    estimator: str = "synth"
    samples: int = Field(default=10_000, ge=1)
    thresholds: list[float] = Field(default=[1.0, 2.0, 4.0, 8.0])
    seed: int = Field(default=0, ge=0)


class AccuracyResponse(BaseModel):
    thresholds: list[float]
    success_rates: list[float]
    csv: str


class DatagenRequest(BaseModel):
    """Paths are interpreted on the machine running the service."""

    input_dir: str
    output_dir: str
    count: int = Field(default=16, ge=1)
    seed: int = Field(default=0, ge=0)
    scenario: str | None = None


class DatagenResponse(BaseModel):
    written: int
    output_dir: str
    annotations_file: str


class RenderRequest(BaseModel):
    reports: list[ReportModel]
    format: str = "csv"  # csv | markdown


class RenderResponse(BaseModel):
    format: str
    content: str
