"""Dyadic geometric measure theory toolkit.

Builds gauge-capped measures on cell sets, extracts sparse supports with
scale certificates, witnesses the holes that obstruct rectifiability, and
computes flatness coefficients (L2 and content based) plus spherical
two-sided deficiency coefficients.
"""

from gmtkit.errors import DepthBudgetError, GmtError, InvalidInputError, VerificationError
from gmtkit.gauge import Gauge, parse_gauge, power_exp_gauge, power_gauge, vanishing_gauge
from gmtkit.lattice import CellSet, DyadicCube
from gmtkit.frostman import CellMeasure, build_frostman, verify_frostman
from gmtkit.content import content, dyadic_cover_cost, measure_profile
from gmtkit.sparsify import (
    AffinePlane,
    SparseMeasure,
    SparsityCertificate,
    build_sparse_construction,
    build_sparse_measure,
    check_sparse,
    estimate_c0,
    find_hole,
    min_sparsity_parameter,
    witness_unrectifiability,
)
from gmtkit.beta import beta2, best_affine_fit, content_beta, square_function
from gmtkit.carleson import DomainPair, epsilon_n, epsilon_square_function
from gmtkit.corpus import GeneratorSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AffinePlane",
    "CellMeasure",
    "CellSet",
    "DepthBudgetError",
    "DomainPair",
    "DyadicCube",
    "Gauge",
    "GeneratorSpec",
    "GmtError",
    "InvalidInputError",
    "SparseMeasure",
    "SparsityCertificate",
    "VerificationError",
    "best_affine_fit",
    "beta2",
    "build_frostman",
    "build_sparse_construction",
    "build_sparse_measure",
    "check_sparse",
    "content",
    "content_beta",
    "dyadic_cover_cost",
    "epsilon_n",
    "epsilon_square_function",
    "estimate_c0",
    "find_hole",
    "generate",
    "measure_profile",
    "min_sparsity_parameter",
    "parse_gauge",
    "power_exp_gauge",
    "power_gauge",
    "square_function",
    "vanishing_gauge",
    "verify_frostman",
    "witness_unrectifiability",
    "__version__",
]
