"""HTTP service wrapping the selection library.

One long-running process can serve many selection, benchmark and data
generation requests; the CLI is a thin client of these endpoints.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, SchemaMismatch, SourceSelectError
from . import ops, schemas


def create_app() -> FastAPI:
    app = FastAPI(title="sourceselect", version=__version__)

    @app.exception_handler(SourceSelectError)
    def _domain_error(request: Request, exc: SourceSelectError) -> JSONResponse:
        # 400 for malformed inputs, 409 for well-formed requests the run
        # could not satisfy; the error class name travels with the detail
        # so clients can map outcomes to exit codes.
        usage = isinstance(exc, (ConfigError, SchemaMismatch))
        return JSONResponse(
            status_code=400 if usage else 409,
            content={"detail": str(exc), "error": type(exc).__name__},
        )

    @app.exception_handler(FileExistsError)
    def _collision(request: Request, exc: FileExistsError) -> JSONResponse:
        return JSONResponse(
            status_code=409,
            content={"detail": str(exc), "error": "FileExistsError"},
        )

    @app.exception_handler(ValueError)
    def _contract_violation(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=409,
            content={"detail": str(exc), "error": "ValueError"},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/select", response_model=schemas.SelectResponse)
    def select(req: schemas.SelectRequest) -> schemas.SelectResponse:
        return ops.run_select(req)

    @app.post("/benchmark", response_model=schemas.BenchmarkResponse)
    def benchmark(req: schemas.BenchmarkRequest) -> schemas.BenchmarkResponse:
        return ops.run_benchmark(req)

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
        return ops.run_synth(req)

    @app.post("/ground-truth", response_model=schemas.GroundTruthResponse)
    def ground_truth(req: schemas.GroundTruthRequest) -> schemas.GroundTruthResponse:
        return ops.run_ground_truth(req)

    @app.post("/show", response_model=schemas.ShowResponse)
    def show(req: schemas.ShowRequest) -> schemas.ShowResponse:
        return ops.render_show(req)

    return app


app = create_app()
