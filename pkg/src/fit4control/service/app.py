"""FastAPI surface wrapping the pipeline runners.

Every endpoint takes one JSON config and returns one JSON report (the same
payloads the CLI writes to disk). Validation errors come back as 422 with the
offending field path; numerical failures as 500 with the reason.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import ConfigError, NumericalError
from ..pipeline import (
    run_blowup,
    run_certify,
    run_homotopy,
    run_scan,
    run_search,
    run_simulate,
    run_snake,
)
from .models import (
    BlowupRequest,
    CertifyRequest,
    HomotopyRequest,
    ScanRequest,
    SearchRequest,
    SimulateRequest,
    SnakeRequest,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="fit4control",
        version=__version__,
        description="Desk certification and Galerkin simulation for bilinear "
        "Schrodinger control systems",
    )

    def guarded(runner, request):
        try:
            report, series = runner(request)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except NumericalError as exc:
            raise HTTPException(status_code=500, detail=f"numerical failure: {exc}") from exc
        report["series"] = series
        return report

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/certify")
    def certify(request: CertifyRequest) -> dict:
        return guarded(run_certify, request)

    @app.post("/scan")
    def scan(request: ScanRequest) -> dict:
        return guarded(run_scan, request)

    @app.post("/snake")
    def snake(request: SnakeRequest) -> dict:
        return guarded(run_snake, request)

    @app.post("/homotopy")
    def homotopy(request: HomotopyRequest) -> dict:
        return guarded(run_homotopy, request)

    @app.post("/blowup")
    def blowup(request: BlowupRequest) -> dict:
        return guarded(run_blowup, request)

    @app.post("/simulate")
    def simulate(request: SimulateRequest) -> dict:
        return guarded(run_simulate, request)

    @app.post("/search")
    def search(request: SearchRequest) -> dict:
        return guarded(run_search, request)

    return app
