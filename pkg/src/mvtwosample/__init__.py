"""Nonparametric multivariate two-sample tests with permutation p-values."""

from . import _backend
from .core import (
    DistanceMatrix,
    InputError,
    MethodError,
    PMethod,
    PooledSample,
    Sample,
    SeededRng,
    TestResult,
    distance_matrix,
    pool,
    read_points_csv,
)
from .methods import CONTINUOUS_METHODS, DISCRETE_METHODS, Support
from .permutation import PermutationPlan, combine_tests, permutation_test

__all__ = [
    "CONTINUOUS_METHODS",
    "DISCRETE_METHODS",
    "DistanceMatrix",
    "InputError",
    "MethodError",
    "PMethod",
    "PermutationPlan",
    "PooledSample",
    "Sample",
    "SeededRng",
    "Support",
    "TestResult",
    "backend",
    "combine_tests",
    "distance_matrix",
    "permutation_test",
    "pool",
    "read_points_csv",
]

__version__ = "0.1.0"


def backend() -> str:
    """Name of the active kernel backend, ``"cython"`` or ``"python"``."""
    return _backend.name()
