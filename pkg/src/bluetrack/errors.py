"""Shared exception base for the tracking stack."""


class TrackingError(Exception):
    """Base class for all bluetrack errors."""
