"""Curvature operators of canonical variations on principal bundles.

Subpackages by layer: ``lie`` (structure constants), ``geometry`` (base
models), ``bundle`` (connections and curvature forms), ``engine`` (block
curvature operator, eigenvalues, t-sweeps), ``oracle`` (finite-difference
ground truth), ``topology`` (Gysin cohomology) and ``cli``.
"""
__version__ = "0.1.0"
