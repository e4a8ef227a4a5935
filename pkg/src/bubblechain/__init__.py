"""Simulation and qudit-compilation toolkit for SU(2) plaquette-chain string breaking."""
from __future__ import annotations

__version__ = "0.1.0"
