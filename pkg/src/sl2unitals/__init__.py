"""Affine SL(2,q)-unitals of even order: construction, verification,
automorphisms, O'Nan configurations, closures and exhaustive search."""

from .gf2e import GF2e
from .sl2q import SL2, AutMap, sl2_context

__all__ = [
    "GF2e",
    "SL2",
    "AutMap",
    "sl2_context",
]
