"""Numerical laboratory for glancing waves near a convex boundary: Airy
functions, the Friedlander model spectrum, billiard maps, eikonal jets,
the profile operator calculus, cusp parametrices and norm scalings."""

__version__ = "0.1.0"
