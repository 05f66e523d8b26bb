"""Hypercube locality-sensitive hashing.

Submodules
----------
asymptotics
    Closed-form and root-finding collision bases, LSH exponents.
largedev
    Rate functions and the independent collision-base route.
rotations
    Random rotations, hash codes, hyperplane and hypercube hashes.
montecarlo
    Reproducible collision-probability estimates and fits.
index
    Multi-table LSH index, parameter tuning and recall experiments.
sieve
    Sieve time exponents and an LSH-accelerated lattice sieve.
"""

from . import asymptotics, index, largedev, montecarlo, rotations, sieve
from ._backend import BACKEND
from .asymptotics import (Model, collision_base, hypercube_collision_base,
                          hyperplane_collision, rho, rho_random)
from .errors import (BoxTooSmallError, ConvergenceError, DegenerateError, DomainError,
                     InsufficientDataError, RankDeficiencyError)

__version__ = "0.1.0"

__all__ = [
    "asymptotics", "index", "largedev", "montecarlo", "rotations", "sieve", "BACKEND",
    "Model", "collision_base", "hypercube_collision_base", "hyperplane_collision", "rho",
    "rho_random", "BoxTooSmallError", "ConvergenceError", "DegenerateError", "DomainError",
    "InsufficientDataError", "RankDeficiencyError",
]
