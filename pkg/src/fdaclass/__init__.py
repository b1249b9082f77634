"""Minimax-optimal classifiers for Gaussian-process functional data.

Oracle Bayes rule, functional QDA (FQDA / sFQDA) and sparse ReLU network
classifiers (FDNN / sFDNN), plus a Monte Carlo harness reproducing the
simulation tables.
"""

__version__ = "0.1.0"

from .errors import DataError, FdaError, NumericalError

__all__ = ["DataError", "FdaError", "NumericalError", "__version__"]
