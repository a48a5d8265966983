"""Shared exception base class."""


class TmkitError(Exception):
    """Base class for every error raised by this package."""
