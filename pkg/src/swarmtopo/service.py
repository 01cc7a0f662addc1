"""Stub remote-annealer service.

Answers ``POST /solve`` with the local simulated annealer so the remote
adapter can be exercised end to end without hardware. Run with::

    uvicorn swarmtopo.service:app --port 8000
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .remote import solve_request
from .samplers import ProblemTooLargeError, SamplerConfigError

app = FastAPI(title="swarmtopo stub annealer")


class SAOptions(BaseModel):
    sweeps: int = 2000
    t_initial: float | None = None
    t_final: float | None = None
    restarts_per_sample: int = 1


class SolveRequest(BaseModel):
    dim: int = Field(ge=1)
    entries: list[tuple[int, int, float]]
    num_samples: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    sa: SAOptions = SAOptions()


class SolveResponse(BaseModel):
    topologies: list[list[int]]
    energies: list[float]
    wall_time_s: float


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest):
    try:
        return solve_request(req.model_dump())
    except (ValueError, SamplerConfigError, ProblemTooLargeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
