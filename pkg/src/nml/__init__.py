"""Inference kernels for six classic ML models with a fork-join parallel
engine, an emulated IEEE-754 binary32 backend, and op-count speedup
analysis."""

from .backend import Backend
from .errors import NmlError

__all__ = ["Backend", "NmlError"]
__version__ = "0.1.0"
