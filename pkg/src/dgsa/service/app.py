"""HTTP front end of the sensitivity-analysis toolkit.

Endpoints:

* ``GET  /health`` — liveness and version.
* ``POST /analyze`` — run the configured analyses, return the report document.
* ``POST /convergence`` — upper-bound estimates over a ladder of sample sizes.
* ``GET  /poincare?spec=...`` — spectral-gap constant of a marginal spec.

Domain errors are returned as a structured envelope ``{"error": {"kind",
"key", "message"}}``: configuration problems with status 400, degenerate
(zero-variance) analyses with status 422.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import parse_distribution
from ..distributions import poincare_constant
from ..errors import DegenerateVarianceError, DgsaError
from ..runner import run_analysis, run_convergence
from .schemas import (
    AnalyzeRequest,
    ConvergenceRequest,
    HealthResponse,
    PoincareResponse,
    request_to_config,
)


def create_app() -> FastAPI:
    app = FastAPI(title="dgsa", version=__version__)

    @app.exception_handler(DgsaError)
    async def dgsa_error_handler(_request: Request, exc: DgsaError) -> JSONResponse:
        if isinstance(exc, DegenerateVarianceError):
            status, kind, key = 422, "degenerate", None
        else:
            status, kind = 400, "config"
            key = getattr(exc, "key", None)
        message = getattr(exc, "message", None) or str(exc)
        return JSONResponse(
            status_code=status,
            content={"error": {"kind": kind, "key": key, "message": message}},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/analyze")
    def analyze(request: AnalyzeRequest) -> dict:
        return run_analysis(request_to_config(request))

    @app.post("/convergence")
    def convergence(request: ConvergenceRequest) -> dict:
        return run_convergence(request_to_config(request.config), request.n_list)

    @app.get("/poincare", response_model=PoincareResponse)
    def poincare(spec: str = Query(..., description="marginal spec, e.g. 'uniform 0 1'")) -> PoincareResponse:
        dist = parse_distribution(spec, key="spec")
        return PoincareResponse(spec=spec, kind=dist.kind, constant=poincare_constant(dist))

    return app


app = create_app()
