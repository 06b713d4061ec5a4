"""Coset intersection complexes of group pairs, computed on finite balls.

Backends cover free groups (Stallings graphs and automata), right-angled
Artin groups, free abelian lattices, BS(1,k) and direct products.
"""

__version__ = "0.1.0"

from .errors import CapabilityError, ConfigError, CosetcError, MalformedWordError, PreconditionError, ResourceError
from .words import RAAG, Alphabet, DefiningGraph, FreeGroup

__all__ = [
    "Alphabet", "CapabilityError", "ConfigError", "CosetcError", "DefiningGraph", "FreeGroup",
    "MalformedWordError", "PreconditionError", "RAAG", "ResourceError", "__version__",
]
