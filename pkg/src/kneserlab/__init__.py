"""kneserlab: intersecting-family removal diagnostics and sparse EKR thresholds.

Modules
-------
families   k-uniform set families as bit vectors; dp, degrees, (alpha, beta) stats
spectral   Kneser eigenvalues; constant + affine + residual decomposition
removal    nearest union of stars; removal-bound and centre-set checks
mis        exact maximum-independent-set machinery (bitset branch and bound)
graphs     Kneser graphs, EKR verification, spectra, Baranyai partitions
threshold  random subgraphs K_p(n,k): superstars, EKR probability, analytic bounds
cli        single executable exposing everything as subcommands
"""

SCHEMA_VERSION = 1

from .errors import DomainError, GuardError, SearchBudgetExceeded
from .families import (
    GroundParams,
    SetFamily,
    FamilyStats,
    build_family,
    disjoint_pairs,
    sym_diff_size,
    degree_profile,
    family_stats,
)

__all__ = [
    "SCHEMA_VERSION",
    "DomainError",
    "GuardError",
    "SearchBudgetExceeded",
    "GroundParams",
    "SetFamily",
    "FamilyStats",
    "build_family",
    "disjoint_pairs",
    "sym_diff_size",
    "degree_profile",
    "family_stats",
]
