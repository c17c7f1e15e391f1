"""Time-dependent coupled-cluster doubles with adaptive orbitals, plus MCTDHF."""

__version__ = "0.1.0"

HBAR = 1.0   # atomic units throughout
