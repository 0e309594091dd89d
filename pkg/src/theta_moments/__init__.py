"""Lattice counting, Bergman kernels and local Weil orbits for sup-norm moment bounds."""

__version__ = "0.1.0"

from .halfplane import Point, mu, point_matrix, u_invariant  # noqa: E402
from .lattice import CountProfile, CountQuery, OrderSpec, count_norm_ball, count_profile  # noqa: E402

__all__ = ["__version__", "Point", "mu", "point_matrix", "u_invariant", "CountProfile", "CountQuery",
           "OrderSpec", "count_norm_ball", "count_profile"]
