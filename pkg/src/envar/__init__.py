"""Envariance, finegraining and count-sector amplitudes for entangled pure states."""

__version__ = "0.1.0"
