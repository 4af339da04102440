"""Numerical SU(2) monopoles: BPS fields, scattering data, Nahm transform."""

__version__ = "0.1.0"
