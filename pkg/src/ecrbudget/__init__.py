"""Pulse-level simulation, calibration and error budgeting of echoed cross-resonance gates."""

from __future__ import annotations

__version__ = "0.1.0"
