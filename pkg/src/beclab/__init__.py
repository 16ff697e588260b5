"""Numerical laboratory for the 3D-to-2D dimensional reduction of confined
bosonic dynamics: Hermite spectral machinery, scaled pair interactions, the
admissible-limit geometry, 2D/3D cubic NLS solvers, a few-body truth engine,
and hierarchy-residual diagnostics."""

from . import hermite, hierarchy, lab, manybody, nls2d, nls3d, potential, scaling

__version__ = "0.1.0"

__all__ = [
    "hermite",
    "potential",
    "scaling",
    "nls2d",
    "nls3d",
    "manybody",
    "hierarchy",
    "lab",
    "__version__",
]
