"""Linear soft-margin SVM via deterministic full-batch subgradient descent.

Primal hinge-loss objective with regularization strength
``lambda = 1 / (C * n)`` and step size ``1 / (lambda * t)`` at iteration
t (from 1).  The bias is unregularized.  Scores map the signed decision
value through a sigmoid so the 0.5 threshold coincides with the margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SvmState:
    weights: np.ndarray   # (d,)
    bias: float


def fit(x: np.ndarray, y: np.ndarray, hyperparams) -> SvmState:
    n = len(y)
    y_pm = y.astype(np.float64) * 2.0 - 1.0   # {0,1} -> {-1,+1}
    lam = 1.0 / (hyperparams.c * n)
    w = np.zeros(x.shape[1])
    b = 0.0
    for t in range(1, hyperparams.iterations + 1):
        margins = y_pm * (x @ w + b)
        active = np.where(margins < 1.0, y_pm, 0.0)
        grad_w = lam * w - (x.T @ active) / n
        grad_b = -active.sum() / n
        eta = 1.0 / (lam * t)
        w = w - eta * grad_w
        b = b - eta * grad_b
    return SvmState(w, float(b))


def decision(state: SvmState, queries: np.ndarray) -> np.ndarray:
    return queries @ state.weights + state.bias


def scores(state: SvmState, queries: np.ndarray) -> np.ndarray:
    z = np.clip(decision(state, queries), -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-z))
