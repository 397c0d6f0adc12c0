"""Spectrum-sharing capacity of a cognitive secondary network under a primary PPP.

Closed-form outage and intensity limits (:mod:`cogcap.analytic`), literal
deployments with nulling beamformers and cancelation combiners
(:mod:`cogcap.sir`), and a seeded Monte Carlo harness
(:mod:`cogcap.montecarlo`) that checks one against the other.
"""

__version__ = "0.1.0"

from .analytic import (baseline_outage, c1, crossover_delta, fit_scaling_exponent,  # noqa: E402
                       lambda_star_siso, scaling_bounds, transmission_capacity)
from .errors import (CogcapError, DegreesOfFreedomError, InfeasibleError,  # noqa: E402
                     MonotonicityError, ParameterError)
from .montecarlo import (TrialPlan, empirical_C_distribution, estimate_outage,  # noqa: E402
                         max_intensity_search, validate_superposition)
from .sir import Regime, ScenarioConfig, realize, sir_primary, sir_secondary  # noqa: E402

__all__ = [
    "__version__", "baseline_outage", "c1", "crossover_delta", "fit_scaling_exponent",
    "lambda_star_siso", "scaling_bounds", "transmission_capacity", "CogcapError",
    "DegreesOfFreedomError", "InfeasibleError", "MonotonicityError", "ParameterError",
    "TrialPlan", "empirical_C_distribution", "estimate_outage", "max_intensity_search",
    "validate_superposition", "Regime", "ScenarioConfig", "realize", "sir_primary",
    "sir_secondary",
]
