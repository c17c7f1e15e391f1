"""Figure generation from simulation run directories (read-only consumer)."""

__version__ = "0.1.0"
