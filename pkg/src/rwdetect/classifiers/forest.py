"""Random forest over the gain-ratio trees.

Per-tree randomness comes from independent generators spawned off the
forest seed, consumed in tree order: first the bootstrap draw (when
enabled), then the per-node feature subsets.  The ensemble score is the
unweighted mean of the tree leaf scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tree


@dataclass
class ForestState:
    trees: list[list[tree.TreeNode]]
    features_used: list[tuple[int, ...]]  # per tree, ascending


def fit(x: np.ndarray, y: np.ndarray, hyperparams) -> ForestState:
    n = len(y)
    subset = hyperparams.features_per_split
    if subset >= x.shape[1]:
        subset = None  # full feature set: identical to a plain tree build
    children = np.random.SeedSequence(hyperparams.seed).spawn(hyperparams.trees)
    trees = []
    used = []
    for child in children:
        rng = np.random.Generator(np.random.PCG64(child))
        if hyperparams.bootstrap:
            picks = rng.integers(0, n, size=n)
            xb, yb = x[picks], y[picks]
        else:
            xb, yb = x, y
        nodes = tree.build(xb, yb, min_leaf=hyperparams.min_leaf,
                           rng=rng, features_per_split=subset)
        trees.append(nodes)
        used.append(tree.features_used(nodes))
    return ForestState(trees, used)


def scores(state: ForestState, queries: np.ndarray) -> np.ndarray:
    total = np.zeros(len(queries))
    for nodes in state.trees:
        total += tree.scores(nodes, queries)
    return total / len(state.trees)
