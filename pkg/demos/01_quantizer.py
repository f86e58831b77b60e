# %% [markdown]
# # Stochastic quantization of a weight differential
#
# Each user sends the magnitude range, one sign bit per entry and a B-bit
# level index per entry.  Rounding between neighbouring levels is random,
# which keeps the reconstruction unbiased.

# %%
import numpy as np

from wqfl.quant import dequantize, error_scale, payload_bits, quantize, variance_bound

rng = np.random.default_rng(0)
delta_w = rng.normal(scale=0.01, size=1000)

# %% [markdown]
# A single quantization, and the worst-case error per element.

# %%
for bits in (1, 2, 4, 8):
    q = quantize(delta_w, bits, rng)
    rec = dequantize(q)
    step = (q.w_max - q.w_min) / (2 ** bits - 1)
    print(f"B={bits}: payload {q.payload_bits:6d} bits, "
          f"max |error| {np.abs(rec - delta_w).max():.2e} (step {step:.2e})")

# %% [markdown]
# Averaging many independent quantizations recovers the input, and the mean
# squared error stays under the range-based bound.

# %%
bits = 2
draws = np.array([dequantize(quantize(delta_w, bits, rng)) for _ in range(5000)])
mags = np.abs(delta_w)
print("largest bias of the average:", np.abs(draws.mean(0) - delta_w).max())
print("empirical MSE :", np.mean(np.sum((draws - delta_w) ** 2, axis=1)))
print("bound         :", variance_bound(delta_w.size, mags.min(), mags.max(), bits))
print("delta^2/(2^B-1)^2 :", error_scale(delta_w) ** 2 / (2 ** bits - 1) ** 2)

# %% [markdown]
# Payload of the full 784-30-10 model at a few widths.

# %%
for bits in (1, 4, 16, 32):
    print(bits, payload_bits(23860, bits, 64))
