"""Mean escape times and eigenvalue shifts for small absorbing arcs on the unit disk."""
from .geometry import BoundaryArc, TargetConfiguration, validate
from .potential import Potential

__version__ = "0.1.0"

__all__ = ["BoundaryArc", "TargetConfiguration", "validate", "Potential", "__version__"]
