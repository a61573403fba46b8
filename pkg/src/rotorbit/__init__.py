"""Rotation sets of homeomorphisms of closed hyperbolic surfaces.

Modules, bottom-up: ``hyperbolic`` (disk and half-plane isometries),
``group`` (surface groups and their fundamental polygons), ``curves``
(closed geodesics, intersections and the filling test), ``zoo`` (explicit
equivariant lifts), ``rotation`` (rotation vectors and rotation-set
estimates), ``realization`` (exact certificates and periodic points) and
``cli`` (the batch driver).
"""

__version__ = "0.1.0"
