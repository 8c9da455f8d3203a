"""Single-hidden-layer perceptron trained by full-batch gradient descent.

Architecture: inputs -> hidden (sigmoid) -> 1 output (sigmoid), trained
against binary cross-entropy.  Weights initialize uniformly in
[-0.5, 0.5) from the seeded generator (hidden layer drawn first, then
output layer); biases start at zero.  ``forward``, ``loss`` and
``gradients`` are module-level so the backpropagation math can be
checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MlpState:
    w1: np.ndarray   # (d, hidden)
    b1: np.ndarray   # (hidden,)
    w2: np.ndarray   # (hidden, 1)
    b2: np.ndarray   # (1,)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def init_state(n_inputs: int, hidden_units: int, seed: int) -> MlpState:
    rng = np.random.Generator(np.random.PCG64(seed))
    w1 = rng.uniform(-0.5, 0.5, size=(n_inputs, hidden_units))
    w2 = rng.uniform(-0.5, 0.5, size=(hidden_units, 1))
    return MlpState(w1, np.zeros(hidden_units), w2, np.zeros(1))


def forward(state: MlpState, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hidden activations (n, hidden) and output probabilities (n,)."""
    hidden = _sigmoid(x @ state.w1 + state.b1)
    output = _sigmoid(hidden @ state.w2 + state.b2.reshape(1, 1)).ravel()
    return hidden, output


def loss(state: MlpState, x: np.ndarray, y: np.ndarray) -> float:
    _, out = forward(state, x)
    out = np.clip(out, 1e-12, 1.0 - 1e-12)
    y = y.astype(np.float64)
    return float(-(y * np.log(out) + (1.0 - y) * np.log(1.0 - out)).mean())


def gradients(state: MlpState, x: np.ndarray, y: np.ndarray):
    """Mean-BCE gradients for (w1, b1, w2, b2)."""
    hidden, out = forward(state, x)
    n = len(y)
    delta_out = (out - y.astype(np.float64)) / n            # d(loss)/d(z2)
    gw2 = hidden.T @ delta_out[:, None]
    gb2 = np.array([delta_out.sum()])
    delta_hidden = delta_out[:, None] * state.w2.ravel()[None, :] \
        * hidden * (1.0 - hidden)
    gw1 = x.T @ delta_hidden
    gb1 = delta_hidden.sum(axis=0)
    return gw1, gb1, gw2, gb2


def fit(x: np.ndarray, y: np.ndarray, hyperparams) -> MlpState:
    state = init_state(x.shape[1], hyperparams.hidden_units, hyperparams.seed)
    lr = hyperparams.learning_rate
    for _ in range(hyperparams.epochs):
        gw1, gb1, gw2, gb2 = gradients(state, x, y)
        state.w1 -= lr * gw1
        state.b1 -= lr * gb1
        state.w2 -= lr * gw2
        state.b2 -= lr * gb2
    return state


def scores(state: MlpState, queries: np.ndarray) -> np.ndarray:
    return forward(state, queries)[1]
