"""Uplink coverage and rate of two-tier networks with decoupled DL/UL access.

Two engines share one scenario model: ``dudehet.analytic`` evaluates the
stochastic-geometry expressions, ``dudehet.simulator`` estimates the same
quantities by Monte Carlo.
"""
from .errors import (
    AssociationError, ConfigError, ContractError, DomainError, DudehetError, HypergeometricError,
    IntegrationError, NumericalError,
)
from .model import (
    AssociationCase, AssociationMode, NetworkConfig, Tier, TierConfig, classify, config_from_mapping,
    format_config, load_config, parse_config_text, resolve_law,
)
from .analytic import (
    LimitMode, case_probabilities, case_probability, corollary_coverage, coverage_curve, load_pmf,
    network_rate_coverage, network_sir_coverage, rate_coverage, sir_coverage, tier_assoc_probability,
)
from .simulator import estimate, realize, run_drop
from .presets import PRESETS, get_preset

__version__ = "0.1.0"
