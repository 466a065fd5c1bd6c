"""Estimating per-router ECN marking rates from end-to-end mark counters."""
from .model import (MarkDistribution, MarkingRates, MarkProbabilities, NoCongestionObserved, SigmaVector,
                    forward_bruteforce, forward_recursion, probabilities_from_distribution,
                    probabilities_from_sigmas, sigmas_from_probabilities, sigmas_from_rates)
from .solver import (NoFullSolutionBand, RateEstimate, RootAreas, SolvingPolynomial, build_polynomial,
                     estimate_rates, extract_root_areas)
from .convergence import ConvergenceTrace, ThresholdReport, detect_thresholds, stream_estimate

__version__ = "0.1.0"
