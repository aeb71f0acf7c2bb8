"""Optimal probe states for covariant quantum phase estimation."""

__version__ = "0.1.0"

from .cost_model import (CostSpec, FourierCoefficients, NumericalError, ToeplitzCostMatrix,
                         cost_matrix, expected_cost, fourier_coefficients, holevo_check,
                         mixture_expected_cost, optimize_state, toeplitz_from_coeffs)
from .estimation import (CostReport, ExperimentConfig, cost_report, m_invariance_check,
                         monte_carlo_cost, scaling_sweep, semi_analytic_cost)
from .estimator import ProbeStateOptimizer
from .simulator import (GeneralCircuitSpec, PolynomialClaimViolation, StateVector,
                        fit_amplitude_polynomials, run_general_circuit, run_procedure1)
from .states import (OutcomeDistribution, ProbeState, estimate_from_outcome,
                     outcome_distribution, sine_state, uniform_state)

__all__ = [
    "CostReport", "CostSpec", "ExperimentConfig", "FourierCoefficients", "GeneralCircuitSpec",
    "NumericalError", "OutcomeDistribution", "PolynomialClaimViolation", "ProbeState",
    "ProbeStateOptimizer", "StateVector", "ToeplitzCostMatrix", "cost_matrix", "cost_report",
    "estimate_from_outcome", "expected_cost", "fit_amplitude_polynomials",
    "fourier_coefficients", "holevo_check", "m_invariance_check", "mixture_expected_cost",
    "monte_carlo_cost", "optimize_state", "outcome_distribution", "run_general_circuit",
    "run_procedure1", "scaling_sweep", "semi_analytic_cost", "sine_state",
    "toeplitz_from_coeffs", "uniform_state",
]
