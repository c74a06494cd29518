"""Toolkit for measuring preprocessing (decoder/resize) noise in image pipelines."""

__version__ = "0.1.0"
