"""Lattice points, exponential sums and discrete maximal functions on arithmetic k-spheres."""

__version__ = "0.1.0"
