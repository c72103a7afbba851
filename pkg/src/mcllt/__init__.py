"""Exact local limit machinery for finite-state inhomogeneous Markov chains."""

from .chain_core import Chain, Functional, MarginalSet, validate_chain
from .errors import InvariantBreach, MCLLTError, SizeGuardError, ValidationError

__all__ = [
    "Chain",
    "Functional",
    "MarginalSet",
    "validate_chain",
    "MCLLTError",
    "ValidationError",
    "SizeGuardError",
    "InvariantBreach",
]

__version__ = "0.1.0"
