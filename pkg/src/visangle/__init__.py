"""Convex bodies, their visual angle, Crofton-type integrals and isotopic curves."""
from .support import FourierSupport, disc, metrics, perturbed, quarter_symmetric

__all__ = ["FourierSupport", "disc", "metrics", "perturbed", "quarter_symmetric"]
__version__ = "0.1.0"
