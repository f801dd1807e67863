"""Enriched P1 finite elements for the singularly perturbed heat equation.

Solves u_t - eps*Laplace(u) = f with homogeneous Dirichlet data on the unit
interval and the unit disk, on quasi-uniform meshes.  The standard Galerkin
space can be supplemented with boundary-layer profiles so that the sharp
transition of width ~sqrt(eps) near the boundary is captured without any
mesh refinement.
"""

__version__ = "0.1.0"
