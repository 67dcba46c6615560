"""Finite-dimensional cyclic/bar calculus, heat-semigroup Chern characters
and index pairings, with numeric verification suites."""

__version__ = "0.1.0"
