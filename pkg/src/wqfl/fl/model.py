"""Fully connected softmax classifier over a flat parameter vector."""
from __future__ import annotations

import numpy as np


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class MLP:
    """Sigmoid hidden layers, softmax output, mean cross-entropy loss.

    Parameters live in one flat vector laid out layer by layer as
    ``W (in x out)`` followed by ``b (out,)``.  ``MLP((2, 2))`` is plain
    multinomial logistic regression.
    """

    def __init__(self, sizes=(784, 30, 10)):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.shapes = [(a, b) for a, b in zip(self.sizes[:-1], self.sizes[1:])]
        self.dim = sum(a * b + b for a, b in self.shapes)

    def init(self, rng: np.random.Generator) -> np.ndarray:
        """Glorot-uniform weights, zero biases."""
        parts = []
        for a, b in self.shapes:
            lim = np.sqrt(6.0 / (a + b))
            parts += [rng.uniform(-lim, lim, a * b), np.zeros(b)]
        return np.concatenate(parts)

    def unpack(self, w):
        layers, i = [], 0
        for a, b in self.shapes:
            W = w[i:i + a * b].reshape(a, b)
            i += a * b
            layers.append((W, w[i:i + b]))
            i += b
        return layers

    def logits(self, w, X):
        h = X
        layers = self.unpack(w)
        for W, b in layers[:-1]:
            h = _sigmoid(h @ W + b)
        W, b = layers[-1]
        return h @ W + b

    def predict(self, w, X):
        return np.argmax(self.logits(w, X), axis=1)

    def loss(self, w, X, y) -> float:
        z = self.logits(w, X)
        z = z - z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return float(-logp[np.arange(len(y)), y].mean())

    def loss_and_grad(self, w, X, y):
        layers = self.unpack(w)
        acts = [X]
        for W, b in layers[:-1]:
            acts.append(_sigmoid(acts[-1] @ W + b))
        W, b = layers[-1]
        z = acts[-1] @ W + b
        z = z - z.max(axis=1, keepdims=True)
        ez = np.exp(z)
        prob = ez / ez.sum(axis=1, keepdims=True)
        n = len(y)
        loss = float(-np.log(prob[np.arange(n), y]).mean())

        dz = prob
        dz[np.arange(n), y] -= 1.0
        dz /= n
        grads = []
        for li in range(len(layers) - 1, -1, -1):
            W, _ = layers[li]
            h = acts[li]
            grads.append((h.T @ dz).ravel())
            grads.append(dz.sum(axis=0))
            if li:
                dz = (dz @ W.T) * h * (1.0 - h)
        # grads were collected last layer first, as (W, b) pairs in reverse order
        pairs = [(grads[i], grads[i + 1]) for i in range(0, len(grads), 2)][::-1]
        return loss, np.concatenate([g for pair in pairs for g in pair])
