"""Emulated HD-EMG acquisition, windowing, burst link, and compact CNN inference."""

__version__ = "0.1.0"
