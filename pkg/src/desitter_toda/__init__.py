"""Doubly periodic harmonic maps into S^{2n}_1 built from affine Toda fields.

Modules
-------
mink       Minkowski linear algebra in R^{2n,1} and so(2n,1).
rootsys    Root data, Coxeter grading and exact checks.
lattice    Period lattices and spectral calculus on torus grids.
seq        Harmonic maps, isotropy order and the harmonic sequence.
toda       Cyclic elements, the Toda equation, vacua and 1-D reductions.
frame      Primitive connections, frame integration and certificates.
willmore   Tori in S^3, conformal Gauss maps and Willmore energy.
catalog    Closed-form doubly periodic test maps.
pipelines  Configured end-to-end runs.
report     Verification bundles and their export.
io         Grid containers on disk.
cli        Command-line entry point.
"""
from .lattice import Lattice
from .report import Check, VerificationBundle
from .seq import TorusMap

__all__ = ["Lattice", "TorusMap", "Check", "VerificationBundle"]
__version__ = "0.1.0"
