"""FastAPI service exposing the analysis runner over HTTP."""

from .app import app, create_app

__all__ = ["app", "create_app"]
