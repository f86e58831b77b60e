"""Per-round joint optimization of compute deadline, energy, slots and bits."""
from .baselines import baseline_equal_energy, baseline_equal_slots, baseline_fixed_bits
from .kkt import KKTReport, kkt_residuals, slot_from_price
from .lambertw import lambert_w0
from .oracle import OracleResult, grid_oracle, integer_oracle
from .search import golden_section
from .solver import (DEFAULT_B_CAP, Multipliers, RoundAllocation, RoundProblem, allocate_bits,
                     constraint_slacks, cpu_frequencies, integer_bits, is_feasible,
                     round_and_resolve, solve_fixed_bits, solve_round, solve_round_continuous)

__all__ = [
    "DEFAULT_B_CAP", "KKTReport", "Multipliers", "OracleResult", "RoundAllocation", "RoundProblem",
    "allocate_bits", "baseline_equal_energy", "baseline_equal_slots", "baseline_fixed_bits",
    "constraint_slacks", "cpu_frequencies", "golden_section", "grid_oracle", "integer_bits",
    "integer_oracle", "is_feasible", "kkt_residuals", "lambert_w0", "round_and_resolve",
    "slot_from_price", "solve_fixed_bits", "solve_round", "solve_round_continuous",
]
