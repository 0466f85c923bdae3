"""FastAPI application exposing the localization pipeline.

Domain errors map to HTTP 400 with the error class name in the payload so
clients can distinguish configuration, format, and evaluation failures.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import VlaseError
from . import handlers, models


def create_app() -> FastAPI:
    app = FastAPI(title="vlase", version=__version__)

    @app.exception_handler(VlaseError)
    async def vlase_error_handler(_request: Request, exc: VlaseError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/v1/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/synth", response_model=models.SynthResponse)
    def synth(req: models.SynthRequest) -> models.SynthResponse:
        return handlers.handle_synth(req)

    @app.post("/v1/train", response_model=models.TrainResponse)
    def train(req: models.TrainRequest) -> models.TrainResponse:
        return handlers.handle_train(req)

    @app.post("/v1/index", response_model=models.IndexResponse)
    def index(req: models.IndexRequest) -> models.IndexResponse:
        return handlers.handle_index(req)

    @app.post("/v1/query", response_model=models.QueryResponse)
    def query(req: models.QueryRequest) -> models.QueryResponse:
        return handlers.handle_query(req)

    @app.post("/v1/eval", response_model=models.EvalResponse)
    def evaluate(req: models.EvalRequest) -> models.EvalResponse:
        return handlers.handle_eval(req)

    @app.post("/v1/ablate", response_model=models.AblateResponse)
    def ablate(req: models.AblateRequest) -> models.AblateResponse:
        return handlers.handle_ablate(req)

    @app.post("/v1/localize", response_model=models.LocalizeResponse)
    def localize(req: models.LocalizeRequest) -> models.LocalizeResponse:
        return handlers.handle_localize(req)

    return app


app = create_app()
