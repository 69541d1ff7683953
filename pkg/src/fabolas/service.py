"""HTTP service exposing experiment execution, reporting, offline validation,
and surrogate generation."""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .benchmarks import make_svm_like_surrogate
from .config import ExperimentConfig, ObjectiveConfig, SpaceConfig
from .records import load_record, save_record
from .reporting import build_report, offline_validate, report_csv
from .runner import build_objective, run_experiment

app = FastAPI(title="fabolas", version="1.0")


class RunResponse(BaseModel):
    record_files: list[str]


class ReportRequest(BaseModel):
    record_files: list[str] = Field(min_length=1)
    grid: list[float] | None = None
    n_points: int = 30


class ReportResponse(BaseModel):
    rows: list[dict]
    csv: str


class ValidateRequest(BaseModel):
    record_files: list[str] = Field(min_length=1)
    objective: ObjectiveConfig = ObjectiveConfig()
    space: SpaceConfig | None = None
    validation_seed: int = 10**6


class ValidateResponse(BaseModel):
    record_files: list[str]


class SurrogateRequest(BaseModel):
    path: str
    seed: int = 0


class SurrogateResponse(BaseModel):
    path: str
    n_rows: int


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/experiments", response_model=RunResponse)
def run(config: ExperimentConfig) -> RunResponse:
    return RunResponse(record_files=run_experiment(config))


def _load_all(paths: list[str]):
    records = []
    for p in paths:
        if not os.path.exists(p):
            raise HTTPException(status_code=404, detail=f"record file not found: {p}")
        records.append(load_record(p))
    return records


@app.post("/report", response_model=ReportResponse)
def report(req: ReportRequest) -> ReportResponse:
    records = _load_all(req.record_files)
    try:
        rows = build_report(records, grid=req.grid, n_points=req.n_points)
    except ValueError as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    return ReportResponse(rows=rows, csv=report_csv(rows))


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    space = req.space or SpaceConfig(
        dimensions=[{"name": "x1", "lower": 0.0, "upper": 1.0}]
    )
    stub = ExperimentConfig(
        space=space,
        strategy="random",
        objective=req.objective,
        budget={"total_seconds": 1.0},
        seeds=[0],
    )
    objective = build_objective(stub)
    out = []
    for path in req.record_files:
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail=f"record file not found: {path}")
        record = load_record(path)
        validated = offline_validate(record, objective, req.validation_seed)
        validated.strategy = f"{record.strategy}_validated"
        out.append(save_record(validated, os.path.dirname(path) or "."))
    return ValidateResponse(record_files=out)


@app.post("/surrogate", response_model=SurrogateResponse)
def surrogate(req: SurrogateRequest) -> SurrogateResponse:
    table = make_svm_like_surrogate(req.seed)
    table.save(req.path)
    n = table.loss.size
    return SurrogateResponse(path=req.path, n_rows=n)
