"""Numerical toolkit for power-of-Gauss-curvature flows of convex bodies.

Bodies are represented by support functions sampled on a pole-free sphere
grid; geometry, identities, the flow, shrinker tools and scalar inequality
scans are built on top of that representation.
"""
from .grid import SphereGrid, build_grid
from .support import ConvexityError, SupportField, embed, radii_matrix, shrinker_residual
from .geometry import GeometryBundle, build_bundle, bundle_from_support
from .flow import FlowConfig, run

__all__ = ["SphereGrid", "build_grid", "ConvexityError", "SupportField", "embed",
           "radii_matrix", "shrinker_residual", "GeometryBundle", "build_bundle",
           "bundle_from_support", "FlowConfig", "run"]
__version__ = "0.1.0"
