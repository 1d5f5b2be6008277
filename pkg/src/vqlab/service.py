"""HTTP front end for the experiment harness.

The service wraps :func:`vqlab.experiments.run_experiment` behind a small
JSON API; the CLI is a thin client of these endpoints.  Experiments run
synchronously inside the request (they are desk-scale sweeps).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .experiments import (
    EXPERIMENTS,
    FAMILIES,
    CorpusSpec,
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    run_experiment,
)
from .version import VERSION


class HealthResponse(BaseModel):
    status: str
    version: str


class ExperimentInfo(BaseModel):
    name: str
    family: str
    defaults: dict


class RunRequest(BaseModel):
    experiment: str
    params: dict = Field(default_factory=dict)
    corpus: CorpusSpec = Field(default_factory=CorpusSpec)
    seed: int = 0


class RunResponse(BaseModel):
    experiment: str
    seed: int
    version: str
    passed: bool
    wall_time_s: float
    rows: list[ReportRow]


def _family_of(name: str) -> str:
    for family, members in FAMILIES.items():
        if name in members:
            return family
    return "other"


def create_app() -> FastAPI:
    app = FastAPI(title="vqlab", version=VERSION,
                  description="q-variation laboratory experiment service")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=VERSION)

    @app.get("/experiments", response_model=list[ExperimentInfo])
    def list_experiments() -> list[ExperimentInfo]:
        return [
            ExperimentInfo(name=name, family=_family_of(name), defaults=defaults)
            for name, (defaults, _) in EXPERIMENTS.items()
        ]

    @app.post("/experiments/run", response_model=RunResponse)
    def run(request: RunRequest) -> RunResponse:
        config = ExperimentConfig(experiment=request.experiment,
                                  params=request.params,
                                  corpus=request.corpus,
                                  seed=request.seed)
        try:
            report: ExperimentReport = run_experiment(config)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return RunResponse(
            experiment=request.experiment,
            seed=report.seed,
            version=report.version,
            passed=report.passed,
            wall_time_s=report.wall_time_s or 0.0,
            rows=report.rows,
        )

    return app


app = create_app()
