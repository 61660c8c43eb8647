"""Multi-asymptotic analysis along families of linear submanifolds."""

from .errors import MultiAsymError
from .expr import parse, render
from .family import IndexFamily, extremal, structure, validate_family

__all__ = ["IndexFamily", "MultiAsymError", "extremal", "parse", "render", "structure",
           "validate_family"]
__version__ = "0.1.0"
