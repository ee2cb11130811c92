"""Numerical laboratory for square-function inequalities on moment-curve
and Taylor-cone geometries: block/sector constructions, discrete Fourier
test ensembles, pruning and high-low analysis, and induction-closure
arithmetic checks."""

__version__ = "0.1.0"
