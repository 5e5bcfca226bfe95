"""Closed-form and quadrature-based evaluation of the stochastic-geometry model."""
from .association import (
    ServingDistance, association_integral, case_probabilities, case_probability, serving_distance_pdf,
    tier_assoc_probability, ul_assoc_probability,
)
from .corollaries import COROLLARY_MODE, corollary_coverage
from .coverage import CoverageCurve, conditional_coverage, coverage_curve, network_sir_coverage, sir_coverage
from .laplace import DEFAULT_MODE, LaplaceExponent, LimitMode, laplace_exponent, laplace_exponent_derivs
from .rate import (
    LoadModel, SirCoverageTable, load_pmf, load_pmf_values, network_rate_coverage, rate_coverage, rate_curve,
)
