"""Process-level settings for the CLI and the HTTP service."""

from __future__ import annotations

from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()  # take environment variables


class ToolkitSettings(BaseSettings):
    """Configuration options read from ``FLUCAST_*`` environment variables."""

    model_config = SettingsConfigDict(env_prefix="FLUCAST_", case_sensitive=False)

    runs_dir: Path = Field(Path("./storage/runs"), description="Directory holding one sub-directory per experiment run.")
    default_jobs: int = Field(1, ge=1, description="Worker processes used when --jobs is not given.")
    log_level: str = Field("INFO", description="Root log level for the command-line entry point.")
    api_title: str = Field("Influenza Forecast Service", description="Title reported by the HTTP service.")
