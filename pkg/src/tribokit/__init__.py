"""Bearing diagnostics and prognostics behind a swappable plug-in framework."""

__version__ = "0.1.0"

from .core import (
    AssetRecord,
    BearingGeometry,
    FaultFrequencies,
    MetaParameters,
    VibrationRecord,
    compute_fault_frequencies,
)
from .framework import Registry, analyze_condition, config_audit, default_registry

__all__ = [
    "AssetRecord",
    "BearingGeometry",
    "FaultFrequencies",
    "MetaParameters",
    "Registry",
    "VibrationRecord",
    "analyze_condition",
    "compute_fault_frequencies",
    "config_audit",
    "default_registry",
]
