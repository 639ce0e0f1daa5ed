"""Trembling-hand perfect equilibria of strategic-form games via division-free fixed points."""
from thpe.circuit import Circuit, CircuitBuilder, deserialize, eval_exact, eval_float, serialize
from thpe.compiler import (FixpInstance, batcher_network, compile_eps_star, compile_f_eps,
                           compute_threshold, emit_fixp_instance, reference_f_eps)
from thpe.extfloat import ExtFloat
from thpe.game import (Game, MixedProfile, expected_payoff, is_approx_nash, is_eps_pe,
                       parse_game, pure_response_payoffs)
from thpe.solver import SolveConfig, approximate_pe, grid_oracle, residual, solve_fixed_point
from thpe.verifier import check_certificate, check_delta_nearness

__version__ = "0.1.0"

__all__ = [
    "Circuit", "CircuitBuilder", "ExtFloat", "FixpInstance", "Game", "MixedProfile",
    "SolveConfig", "approximate_pe", "batcher_network", "check_certificate",
    "check_delta_nearness", "compile_eps_star", "compile_f_eps", "compute_threshold",
    "deserialize", "emit_fixp_instance", "eval_exact", "eval_float", "expected_payoff",
    "grid_oracle", "is_approx_nash", "is_eps_pe", "parse_game", "pure_response_payoffs",
    "reference_f_eps", "residual", "serialize", "solve_fixed_point",
]
