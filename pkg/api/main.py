"""Application factory for the FastAPI service."""

from __future__ import annotations

import logging

from fastapi import FastAPI

from core import TOOLKIT_VERSION
from models import ToolkitSettings

from .dependencies import get_settings
from .routers import runs as runs_router
from .routers import scoring as scoring_router

logger = logging.getLogger(__name__)


def create_app(settings: ToolkitSettings | None = None) -> FastAPI:
    """Create and configure the FastAPI application."""
    settings = settings or ToolkitSettings()

    app = FastAPI(title=settings.api_title, version=TOOLKIT_VERSION)
    app.state.settings = settings
    app.dependency_overrides[get_settings] = lambda: settings

    # Stored experiment runs (read-only)
    app.include_router(runs_router.router)
    # Stateless scoring of submitted forecasts
    app.include_router(scoring_router.router)

    @app.get("/health", tags=["meta"])
    async def healthcheck() -> dict[str, str]:
        return {"status": "ok"}

    return app


app = create_app()
