"""Finite-sample analysis of random-design least squares and ridge regression.

The package pairs estimators with the explicit non-asymptotic excess-loss
bounds that govern them, verifies the underlying exact decompositions and
tail inequalities by Monte Carlo, and provides a rotation-plus-subsampling
fast least squares solver whose guarantee is certified through the same
bounds.
"""

from . import (  # noqa: F401
    bounds,
    diagnostics,
    estimators,
    experiment,
    matcore,
    population,
    rngstream,
    sketch,
    tails,
)
from .errors import RandesignError  # noqa: F401

__version__ = "0.1.0"
