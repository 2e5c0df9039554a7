"""Telemetry sinks: JSON lines file and console (stderr)."""

from .console import ConsoleExporter
from .jsonl import JSONLExporter

__all__ = ["ConsoleExporter", "JSONLExporter"]
