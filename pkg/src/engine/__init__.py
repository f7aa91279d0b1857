"""Numerical engine: materials, stack geometry, Floquet scattering, fluxes and indicators."""

__version__ = "0.1.0"
