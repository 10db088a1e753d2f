"""FastAPI application wrapping the simulator core.

All simulation runs through the same seeded entry points as the library
API, so any request repeated with the same seed returns an identical
"report" section; only the response metadata timestamp changes.
"""

from __future__ import annotations

from dataclasses import replace

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import (
    BenchConfig,
    ConfigError,
    parse_config_text,
    render_csv,
    render_markdown,
    report_from_dict,
    report_json,
    resolve_estimator,
    run_accuracy,
    run_bench,
    run_demo,
)
from ..datagen import generate_dataset
from ..estimator import accuracy_csv
from ..scene import builtin_scenarios, scenario_by_name
from .models import (
    AccuracyRequest,
    AccuracyResponse,
    BenchRequest,
    DatagenRequest,
    DatagenResponse,
    HealthResponse,
    RenderRequest,
    RenderResponse,
    ReportEnvelope,
    ScenarioInfo,
    ServoDemoRequest,
    ServoDemoResponse,
)

import json


def _resolve_config(scenario: str | None, method: str | None, trials: int | None,
                    seed: int | None, estimator: str | None,
                    config_text: str | None) -> BenchConfig:
    cfg = BenchConfig.default()
    if config_text:
        cfg = parse_config_text(config_text, cfg)
    updates = {}
    if scenario is not None:
        updates["scenario"] = scenario_by_name(scenario)
    if method is not None:
        updates["methods"] = tuple(m.strip() for m in method.split(",") if m.strip())
    if trials is not None:
        updates["trials"] = trials
    if seed is not None:
        updates["seed"] = seed
    if estimator is not None:
        name, noise = resolve_estimator(estimator)
        updates["estimator_name"] = name
        updates["noise"] = noise
    return replace(cfg, **updates) if updates else cfg


def create_app() -> FastAPI:
    app = FastAPI(title="pegalign", version=__version__,
                  description="Peg-in-hole alignment simulation and benchmarking service")

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/scenarios", response_model=list[ScenarioInfo])
    def scenarios():
        return [
            ScenarioInfo(
                name=s.name,
                hole_diameter_mm=s.hole_diameter * 1000.0,
                peg_diameter_mm=s.peg_diameter * 1000.0,
                clearance_mm=s.clearance * 1000.0,
                uncertainty_radius_mm=s.uncertainty_radius * 1000.0,
                required_depth_mm=s.required_depth * 1000.0,
            )
            for s in builtin_scenarios()
        ]

    @app.post("/bench", response_model=ReportEnvelope)
    def bench(req: BenchRequest):
        try:
            cfg = _resolve_config(req.scenario, req.method, req.trials, req.seed,
                                  req.estimator, req.config_text)
            report = run_bench(cfg)
        except (ConfigError, KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return json.loads(report_json(report))

    @app.post("/servo-demo", response_model=ServoDemoResponse)
    def servo_demo(req: ServoDemoRequest):
        try:
            cfg = _resolve_config(req.scenario, None, None, req.seed,
                                  req.estimator, req.config_text)
            demo = run_demo(cfg)
        except (ConfigError, KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return ServoDemoResponse(
            scenario=demo.scenario, seed=demo.seed, status=demo.status,
            success=demo.success, elapsed_s=demo.elapsed_s, iterations=demo.iterations,
            final_planar_error_m=demo.final_planar_error_m,
            insertion_depth_m=demo.insertion_depth_m, trace_csv=demo.trace_csv)

    @app.post("/accuracy", response_model=AccuracyResponse)
    def accuracy(req: AccuracyRequest):
        try:
            _, noise = resolve_estimator(req.estimator)
            rates = run_accuracy(noise, req.samples, req.thresholds, req.seed)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return AccuracyResponse(thresholds=req.thresholds, success_rates=rates,
                                csv=accuracy_csv(req.thresholds, rates))

    @app.post("/datagen", response_model=DatagenResponse)
    def datagen(req: DatagenRequest):
        try:
            scenario = scenario_by_name(req.scenario) if req.scenario else None
            summary = generate_dataset(req.input_dir, req.output_dir, req.count,
                                       req.seed, scenario=scenario)
        except (FileNotFoundError, NotADirectoryError, KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return DatagenResponse(written=summary.written, output_dir=summary.output_dir,
                               annotations_file=summary.annotations_file)

    @app.post("/report/render", response_model=RenderResponse)
    def render(req: RenderRequest):
        reports = [report_from_dict(r.model_dump()) for r in req.reports]
        if req.format == "csv":
            content = render_csv(reports)
        elif req.format == "markdown":
            content = render_markdown(reports)
        else:
            raise HTTPException(status_code=400,
                                detail=f"unknown render format {req.format!r}")
        return RenderResponse(format=req.format, content=content)

    return app
