"""Run summaries for crosscut."""

from crosscut.reporting.summary import RunSummary

__all__ = ["RunSummary"]
