# %% [markdown]
# # The convergence bound and where quantization error enters
#
# The bound has a term that shrinks like 1/(gamma + T) and a gap term fed by
# the per-round quantization error.  Errors in early rounds are discounted
# by the later rounds, so spending bits late is cheaper.

# %%
import numpy as np

from wqfl.bound import BoundConstants, bound_terms, discount_weights

k = BoundConstants(L=4.0, mu=1.0, G2=2.0, sigma2=(1.0,) * 10, Gamma=0.5, tau=2,
                   gamma=10.0, Delta0=1.0)
p = np.full(10, 0.1)
T = 200

# %%
w = discount_weights(T, k.gamma)
print("weight of round 0  :", w[0])
print("weight of round T-1:", w[-1])

# %% [markdown]
# Same total error, spent two ways: constant, or large early and small late.

# %%
constant = np.full((T, 10), 0.01)
decay = np.outer(0.1 * (0.01 / 0.1) ** (np.arange(T) / (T - 1)), np.ones(10))
decay *= constant.sum() / decay.sum()
for name, J in (("constant", constant), ("decaying", decay)):
    t = bound_terms(T, k, J, p)
    print(f"{name:9s} first {t.first:.4f}  gap {t.gap:.5f}  total {t.total:.4f}")
