"""Contour dynamics for the alpha-patch equations, in physical and self-similar variables."""
