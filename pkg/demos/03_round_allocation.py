# %% [markdown]
# # One round of joint time, energy and bit allocation
#
# Ten users with the default physics.  The optimizer picks the shared compute
# deadline, the clocks, the transmit energies, the slots and the bit widths
# that minimize the round latency under the quantization-error budget.

# %%
import numpy as np

from wqfl.roundopt import (baseline_equal_energy, baseline_equal_slots, baseline_fixed_bits,
                           constraint_slacks, grid_oracle, integer_oracle, kkt_residuals,
                           solve_round)
from wqfl.scenario import random_problem

problem = random_problem(10, seed=3, epsilon=0.01)
alloc, cont, mult = solve_round(problem)
print("continuous latency:", cont.round_latency)
print("integer latency   :", alloc.round_latency)
print("bits per user     :", alloc.B)
print("deadline / a1     :", alloc.l_c / problem.a1)

# %% [markdown]
# At the continuous optimum the rate, energy and error constraints are all
# met with equality, and the multipliers satisfy the stationarity identities.

# %%
s = constraint_slacks(cont, problem)
print({k: float(np.max(np.abs(v))) for k, v in s.items() if k in ("rate", "energy", "error")})
print("largest KKT residual:", kkt_residuals(cont, mult, problem).max)

# %% [markdown]
# The three reference schemes are feasible points of the same problem, so
# none of them can be faster.

# %%
for name, base in [("fixed 16 bits", baseline_fixed_bits(problem, 16)),
                   ("equal slots", baseline_equal_slots(problem, alloc.B)),
                   ("equal energy", baseline_equal_energy(problem))]:
    print(f"{name:14s} {base.round_latency:.4f} s")

# %% [markdown]
# Looser tolerances buy shorter rounds.

# %%
for eps in (0.01, 0.1, 1.0, 5.0):
    a, _, _ = solve_round(random_problem(10, seed=3, epsilon=eps))
    print(f"eps = {eps:5.2f}: latency {a.round_latency:.4f} s, mean bits {a.B.mean():.1f}")

# %% [markdown]
# On two users the answer can be checked by brute force.

# %%
small = random_problem(2, seed=7)
a2, c2, _ = solve_round(small)
print("continuous:", c2.round_latency, "grid oracle:", grid_oracle(small).latency)
print("integer   :", a2.round_latency, "integer oracle:", integer_oracle(small, b_max=20).latency)
