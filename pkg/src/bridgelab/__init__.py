"""Bridge decomposition toolkit: lattice bridges, restriction-hull analytics and simulation."""

__version__ = "0.1.0"
