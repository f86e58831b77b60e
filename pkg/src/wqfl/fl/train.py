"""Local training, weight differentials, aggregation and evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import TrainingDiverged
from ..quant import QuantizedUpdate, dequantize, error_scale
from .data import Dataset
from .model import MLP


@dataclass(frozen=True)
class TrainerConfig:
    """Local optimizer settings.

    ``lr_schedule='diminishing'`` uses ``2 / (mu * (gamma + t))`` with ``t``
    the global round, the rate under which the convergence bound holds.
    """

    tau: int = 2
    batch_size: int = 50
    optimizer: str = "adam"
    learning_rate: float = 1e-2
    lr_schedule: str = "constant"
    mu: float = 1.0
    gamma: float = 10.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.tau < 1 or self.batch_size < 1:
            raise ValueError("tau and batch_size must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.lr_schedule not in ("constant", "diminishing"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")

    def rate(self, round_index: int) -> float:
        if self.lr_schedule == "diminishing":
            return 2.0 / (self.mu * (self.gamma + round_index))
        return self.learning_rate


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def local_update(w: np.ndarray, shard: Dataset, model: MLP, cfg: TrainerConfig,
                 rng: np.random.Generator, state: AdamState | None = None,
                 round_index: int = 0):
    """Run ``tau`` optimizer steps from ``w``.

    Returns ``(delta_w, delta, state)`` where ``delta`` is the range scale of
    ``delta_w`` fed to the error constraint.  Adam moments carry over between
    rounds through ``state``.
    """
    if not np.all(np.isfinite(w)):
        raise TrainingDiverged("global model is not finite")
    if cfg.batch_size > len(shard):
        raise ValueError(f"batch {cfg.batch_size} larger than shard {len(shard)}")
    lr = cfg.rate(round_index)
    if cfg.optimizer == "adam" and state is None:
        state = AdamState(np.zeros_like(w), np.zeros_like(w))
    cur = w.copy()
    for _ in range(cfg.tau):
        idx = rng.choice(len(shard), size=cfg.batch_size, replace=False)
        loss, g = model.loss_and_grad(cur, shard.inputs[idx], shard.labels[idx])
        if not (np.isfinite(loss) and np.all(np.isfinite(g))):
            raise TrainingDiverged(f"non-finite loss or gradient (loss={loss})")
        if cfg.optimizer == "sgd":
            cur -= lr * g
        else:
            state.t += 1
            state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
            state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
            m_hat = state.m / (1.0 - cfg.beta1 ** state.t)
            v_hat = state.v / (1.0 - cfg.beta2 ** state.t)
            cur -= lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    diff = cur - w
    return diff, error_scale(diff), state


def aggregate(w: np.ndarray, updates: Sequence[QuantizedUpdate | np.ndarray], p) -> np.ndarray:
    """``w + sum_n p_n * update_n``; raw arrays are taken as exact (unquantized) updates."""
    p = np.asarray(p, dtype=float)
    if len(updates) != len(p):
        raise ValueError("one weight per update required")
    out = w.astype(float, copy=True)
    for u, pn in zip(updates, p):
        vec = dequantize(u) if isinstance(u, QuantizedUpdate) else np.asarray(u, dtype=float)
        if vec.shape != w.shape:
            raise ValueError(f"update length {vec.size} does not match model length {w.size}")
        out += pn * vec
    return out


def evaluate(model: MLP, w: np.ndarray, data: Dataset) -> tuple[float, float]:
    """Mean cross-entropy and top-1 accuracy."""
    z = model.logits(w, data.inputs)
    acc = float(np.mean(np.argmax(z, axis=1) == data.labels))
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(data)), data.labels].mean()), acc
