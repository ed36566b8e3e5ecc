"""Ground-truth solvers: direct boundary integrals, characteristic values, Monte Carlo."""
from __future__ import annotations

from ..asymptotics import drift_single_target
from .direct import DirectSolution, boundary_residual, circle_mean, solve_direct
from .eigen import CharacteristicOperator, default_window, eigen_direct
from .montecarlo import McEstimate, bias_step, escape_times, fit_sqrt_bias, mc_escape, summarize


def drift_corrector_field(config, potential, x, solution=None):
    """``u(x)`` from the direct solve minus the leading constant of the drift expansion."""
    if solution is None:
        solution = solve_direct(config, potential)
    leading = drift_single_target(config, potential).leading_constant
    return float(solution(x)) - leading


__all__ = [
    "DirectSolution", "solve_direct", "boundary_residual", "circle_mean",
    "CharacteristicOperator", "default_window", "eigen_direct",
    "McEstimate", "bias_step", "escape_times", "mc_escape", "summarize", "fit_sqrt_bias", "drift_corrector_field",
]
