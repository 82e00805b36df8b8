"""FastAPI service over stored flucast runs and forecast scoring."""

__all__: list[str] = []
