"""Numerical laboratory for symplectic capacity sequences of ellipsoids.

Two independent pipelines compute the capacity sequence of an ellipsoid
E(a_1, ..., a_n): spectral eigencounting of the action functional's sublevel
sets, and periodic-orbit enumeration with degree-action matching through a
filtered Morse complex.  Both are expected to reproduce the sorted multiset
{m * a_i}, and the `verify` entry point checks that they agree.
"""

__version__ = "0.1.0"
