"""Numerical core: graph algebra, simplex lattices, schemes and their duals."""
