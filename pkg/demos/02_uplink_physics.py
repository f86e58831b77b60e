# %% [markdown]
# # Uplink and compute physics
#
# A user's slot of length l with energy E carries l W log2(1 + gE/(l W N0))
# bits.  More time always helps, but only up to the capacity cap gE/(N0 ln 2).

# %%
import numpy as np

from wqfl.channel import (PhysicsConfig, capacity_cap, compute_energy, compute_time,
                          min_uplink_time, uplink_bits)
from wqfl.errors import Infeasible
from wqfl.scenario import draw_profiles

cfg = PhysicsConfig()
g = 1000.0 ** -cfg.pathloss_exponent      # cell edge, unit fading
E = 0.2

# %%
for l in (1e-3, 1e-2, 0.1, 1.0, 10.0):
    print(f"l = {l:6.3f} s -> {uplink_bits(l, E, g, cfg):14.1f} bits")
print("cap:", capacity_cap(E, g, cfg))

# %% [markdown]
# Inverting the rate: the shortest slot for a 16-bit model upload, and what
# happens when the payload reaches the cap.

# %%
S = 23860 * 17 + 64
print("slot for 16-bit payload:", min_uplink_time(S, E, g, cfg))
try:
    min_uplink_time(capacity_cap(E, g, cfg), E, g, cfg)
except Infeasible as exc:
    print("infeasible:", exc)

# %% [markdown]
# Computing faster shortens the local phase but costs energy quadratically in
# the clock, which leaves less energy for the uplink.

# %%
user = draw_profiles(1, np.random.default_rng(1))[0]
for f in (0.5e9, 1.0e9, 1.5e9):
    print(f"f = {f / 1e9:.1f} GHz: {compute_time(user, f, cfg) * 1e3:6.2f} ms, "
          f"{compute_energy(user, f, cfg):.4f} J")
