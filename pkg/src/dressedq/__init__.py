"""Hybrid classifier: a variational quantum circuit dressed in linear layers,
trained on precomputed image features via exact statevector simulation.
"""
from __future__ import annotations

import importlib

__version__ = "0.1.0"

# Loaded lazily so the CLI can cap numeric-library thread pools before the
# first numpy import.
_SUBMODULES = ("statevector", "circuit", "gradients", "dressed", "metrics",
               "data", "training", "plotting", "cli")

__all__ = list(_SUBMODULES)


def __getattr__(name: str):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
