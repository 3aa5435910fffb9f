"""HTTP service exposing the experiment operations.

The CLI is a thin client of this app.  Every operation takes the same
request shape: the raw text of a key=value config file plus a mapping
of overrides, and returns the structured rows together with the
canonical CSV rendering.  Failures carry a machine-readable kind —
``config``, ``infeasible``, or ``numeric`` — that clients map to exit
codes.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .config import ConfigError, ExperimentConfig, from_mapping, parse_config_text
from .experiments import (
    ExperimentResult,
    run_analyze,
    run_compare,
    run_optimize,
    run_simulate,
    run_sweep,
    run_table2,
)
from .planner import InfeasibleError, UnroutableTopologyError
from .sphere import NumericsError

app = FastAPI(title="leo-relay", version="0.1.0")


class ExperimentRequest(BaseModel):
    """Config file text plus key overrides (applied on top)."""

    model_config = ConfigDict(extra="forbid")

    config_text: str = ""
    overrides: dict[str, Any] = Field(default_factory=dict)


class ExperimentResponse(BaseModel):
    name: str
    columns: list[str]
    rows: list[list[Any]]
    csv: str


@app.exception_handler(ConfigError)
def _on_config_error(_request: Request, exc: ConfigError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"kind": "config", "detail": str(exc)})


@app.exception_handler(InfeasibleError)
def _on_infeasible(_request: Request, exc: InfeasibleError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"kind": "infeasible", "detail": str(exc)})


@app.exception_handler(UnroutableTopologyError)
def _on_unroutable(_request: Request, exc: UnroutableTopologyError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"kind": "infeasible", "detail": str(exc)})


@app.exception_handler(NumericsError)
def _on_numeric(_request: Request, exc: NumericsError) -> JSONResponse:
    return JSONResponse(status_code=500, content={"kind": "numeric", "detail": str(exc)})


def _build_config(request: ExperimentRequest) -> ExperimentConfig:
    values = parse_config_text(request.config_text)
    for key, value in request.overrides.items():
        values[key] = value
    return from_mapping(values)


def _respond(result: ExperimentResult) -> ExperimentResponse:
    return ExperimentResponse(
        name=result.name,
        columns=list(result.columns),
        rows=[list(row) for row in result.rows],
        csv=result.csv_text,
    )


@app.get("/v1/health")
def health() -> dict[str, str]:
    return {"status": "ok"}


@app.post("/v1/analyze", response_model=ExperimentResponse)
def analyze(request: ExperimentRequest) -> ExperimentResponse:
    return _respond(run_analyze(_build_config(request)))


@app.post("/v1/optimize", response_model=ExperimentResponse)
def optimize(request: ExperimentRequest) -> ExperimentResponse:
    return _respond(run_optimize(_build_config(request)))


@app.post("/v1/simulate", response_model=ExperimentResponse)
def simulate(request: ExperimentRequest) -> ExperimentResponse:
    return _respond(run_simulate(_build_config(request)))


@app.post("/v1/table2", response_model=ExperimentResponse)
def table2(request: ExperimentRequest) -> ExperimentResponse:
    return _respond(run_table2(_build_config(request)))


@app.post("/v1/sweep", response_model=ExperimentResponse)
def sweep(request: ExperimentRequest) -> ExperimentResponse:
    return _respond(run_sweep(_build_config(request)))


@app.post("/v1/compare", response_model=ExperimentResponse)
def compare(request: ExperimentRequest) -> ExperimentResponse:
    return _respond(run_compare(_build_config(request)))
