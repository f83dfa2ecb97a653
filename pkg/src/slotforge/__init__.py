"""Inverse design of cavity-backed slot antennas from reflection spectra."""

__version__ = "0.1.0"
