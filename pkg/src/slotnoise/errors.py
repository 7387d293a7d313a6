"""Shared exception types."""

from __future__ import annotations


class SlotNoiseError(Exception):
    """Base class for all package errors."""


class DataError(SlotNoiseError):
    """Invalid dataset content: bad spans, duplicate ids, malformed records."""


class ParseError(DataError):
    """Unreadable input file; message carries the offending line number."""


class ConfigError(SlotNoiseError):
    """Invalid or missing configuration: assets, templates, endpoints, flags."""


class ClientError(SlotNoiseError):
    """Model endpoint failure; carries the HTTP status when one was received."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class HarnessError(SlotNoiseError):
    """Experiment run failed beyond the configured per-example error budget."""
