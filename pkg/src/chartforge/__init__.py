"""chartforge: turn raw CSV tables into multi-task chart-understanding data."""

__version__ = "0.1.0"
