"""Intrinsic volumes of Riemannian manifolds from chart-level metric data.

The package evaluates curvature integrals over chart atlases, collapses the
fibers of Riemannian submersions, and validates the results against closed
forms and a Monte-Carlo tube-volume oracle.
"""

__version__ = "0.1.0"
