"""Shared classifier surface: kinds, hyperparameters, train and predict.

Every family trains on a labeled dataset and predicts from a 13-value
feature vector.  Distance- and gradient-based families (KNN, MLP, SVM)
get min-max scaling fitted on the training set and replayed at predict
time; tree and Bayes families consume raw features.  A score is the
positive-class degree of confidence in [0, 1]; the decision rule is
everywhere ``score >= 0.5 -> ransomware`` so exact ties fail safe.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import (
    DimensionMismatch,
    EmptyDataset,
    InvalidHyperparams,
    NonFiniteFeature,
    SingleClassDataset,
)
from ..features import (
    ADDRESS_FEATURE_INDICES,
    N_FEATURES,
    Dataset,
    Label,
    ScalingParams,
    apply_scaler,
    dataset_fingerprint,
    fit_scaler,
    zero_address_columns,
)
from . import bayes, forest, knn, mlp, svm, tree


class ClassifierKind(enum.Enum):
    KNN = "KNearestNeighbor"
    MLP = "MultilayerPerceptron"
    J48 = "DecisionTreeJ48"
    RANDOM_FOREST = "RandomForest"
    SVM = "SupportVectorMachine"
    BAYES = "BayesNetwork"


#: Canonical ordering used by reports and the CLI.
ALL_KINDS: tuple[ClassifierKind, ...] = (
    ClassifierKind.KNN,
    ClassifierKind.MLP,
    ClassifierKind.J48,
    ClassifierKind.RANDOM_FOREST,
    ClassifierKind.SVM,
    ClassifierKind.BAYES,
)

#: Families whose geometry is distance- or gradient-based.
SCALED_KINDS = frozenset(
    {ClassifierKind.KNN, ClassifierKind.MLP, ClassifierKind.SVM}
)

KIND_ALIASES = {
    "knn": ClassifierKind.KNN,
    "mlp": ClassifierKind.MLP,
    "j48": ClassifierKind.J48,
    "forest": ClassifierKind.RANDOM_FOREST,
    "svm": ClassifierKind.SVM,
    "bayes": ClassifierKind.BAYES,
}


def kind_from_name(text: str) -> ClassifierKind:
    """Resolve a canonical kind name or short alias."""
    if text in KIND_ALIASES:
        return KIND_ALIASES[text]
    for kind in ClassifierKind:
        if kind.value == text:
            return kind
    raise InvalidHyperparams(f"unknown classifier kind: {text!r}")


_MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class KnnParams:
    k: int = 5
    seed: int = 42


@dataclass(frozen=True)
class MlpParams:
    hidden_units: int = 16
    learning_rate: float = 0.1
    epochs: int = 500
    seed: int = 42


@dataclass(frozen=True)
class TreeParams:
    min_leaf: int = 2
    seed: int = 42


@dataclass(frozen=True)
class ForestParams:
    trees: int = 100
    bootstrap: bool = True
    features_per_split: int = 4   # ceil(sqrt(13))
    min_leaf: int = 2
    seed: int = 42


@dataclass(frozen=True)
class SvmParams:
    c: float = 1.0
    iterations: int = 100_000
    seed: int = 42


@dataclass(frozen=True)
class BayesParams:
    var_smoothing: float = 1e-9
    seed: int = 42


Hyperparams = Union[KnnParams, MlpParams, TreeParams, ForestParams,
                    SvmParams, BayesParams]

HYPERPARAM_TYPES: dict[ClassifierKind, type] = {
    ClassifierKind.KNN: KnnParams,
    ClassifierKind.MLP: MlpParams,
    ClassifierKind.J48: TreeParams,
    ClassifierKind.RANDOM_FOREST: ForestParams,
    ClassifierKind.SVM: SvmParams,
    ClassifierKind.BAYES: BayesParams,
}


def default_hyperparams(kind: ClassifierKind, seed: int = 42) -> Hyperparams:
    return HYPERPARAM_TYPES[kind](seed=seed)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidHyperparams(message)


def validate_hyperparams(kind: ClassifierKind, hp: Hyperparams) -> None:
    expected = HYPERPARAM_TYPES[kind]
    if type(hp) is not expected:
        raise InvalidHyperparams(
            f"{kind.value} expects {expected.__name__}, got {type(hp).__name__}"
        )
    _require(0 <= hp.seed <= _MAX_SEED, "seed must fit an unsigned 64-bit int")
    if isinstance(hp, KnnParams):
        _require(hp.k >= 1, "k must be at least 1")
    elif isinstance(hp, MlpParams):
        _require(hp.hidden_units >= 1, "hidden_units must be at least 1")
        _require(hp.learning_rate > 0, "learning_rate must be positive")
        _require(hp.epochs >= 1, "epochs must be at least 1")
    elif isinstance(hp, TreeParams):
        _require(hp.min_leaf >= 1, "min_leaf must be at least 1")
    elif isinstance(hp, ForestParams):
        _require(hp.trees >= 1, "trees must be at least 1")
        _require(1 <= hp.features_per_split <= N_FEATURES,
                 "features_per_split must be in [1, 13]")
        _require(hp.min_leaf >= 1, "min_leaf must be at least 1")
    elif isinstance(hp, SvmParams):
        _require(hp.c > 0, "c must be positive")
        _require(hp.iterations >= 1, "iterations must be at least 1")
    elif isinstance(hp, BayesParams):
        _require(hp.var_smoothing >= 0, "var_smoothing must be non-negative")


@dataclass(frozen=True)
class Prediction:
    label: Label
    score: float


@dataclass
class TrainedModel:
    kind: ClassifierKind
    hyperparams: Hyperparams
    state: object
    scaler: ScalingParams | None
    training_time: float            # seconds; excluded from serialization
    train_fingerprint: str
    zero_addresses: bool = False


_FITTERS = {
    ClassifierKind.KNN: knn.fit,
    ClassifierKind.MLP: mlp.fit,
    ClassifierKind.J48: lambda x, y, hp: tree.build(x, y, min_leaf=hp.min_leaf),
    ClassifierKind.RANDOM_FOREST: forest.fit,
    ClassifierKind.SVM: svm.fit,
    ClassifierKind.BAYES: bayes.fit,
}


def train(kind: ClassifierKind, dataset: Dataset,
          hyperparams: Hyperparams | None = None, *,
          zero_addresses: bool = False) -> TrainedModel:
    """Fit one classifier family on a labeled dataset.

    ``training_time`` covers only the fit itself, not scaling or
    validation, so repeated runs differ only in that field.
    """
    hp = hyperparams if hyperparams is not None else default_hyperparams(kind)
    validate_hyperparams(kind, hp)
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    fingerprint = dataset_fingerprint(dataset)
    if zero_addresses:
        dataset = zero_address_columns(dataset)
    x = dataset.matrix()
    if not np.isfinite(x).all():
        raise NonFiniteFeature("training features must be finite")
    y = dataset.labels01()
    positives, negatives = dataset.class_counts()
    if positives == 0 or negatives == 0:
        raise SingleClassDataset(
            f"need both classes, got {positives} positive / {negatives} negative"
        )
    if kind is ClassifierKind.KNN and hp.k > len(dataset):
        raise InvalidHyperparams("k cannot exceed the training-set size")

    scaler = None
    if kind in SCALED_KINDS:
        scaler = fit_scaler(dataset)
        x = apply_scaler(scaler, x)

    started = time.perf_counter()
    state = _FITTERS[kind](x, y, hp)
    elapsed = time.perf_counter() - started
    return TrainedModel(kind=kind, hyperparams=hp, state=state, scaler=scaler,
                        training_time=elapsed, train_fingerprint=fingerprint,
                        zero_addresses=zero_addresses)


def _score_queries(model: TrainedModel, queries: np.ndarray) -> np.ndarray:
    kind = model.kind
    if kind is ClassifierKind.KNN:
        return knn.scores(model.state, model.hyperparams.k, queries)
    if kind is ClassifierKind.MLP:
        return mlp.scores(model.state, queries)
    if kind is ClassifierKind.J48:
        return tree.scores(model.state, queries)
    if kind is ClassifierKind.RANDOM_FOREST:
        return forest.scores(model.state, queries)
    if kind is ClassifierKind.SVM:
        return svm.scores(model.state, queries)
    return bayes.scores(model.state, queries)


def predict_many(model: TrainedModel,
                 vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Score a (n, 13) batch; returns (labels01 uint8, scores float64)."""
    queries = np.asarray(vectors, dtype=np.float64)
    if queries.ndim != 2 or queries.shape[1] != N_FEATURES:
        raise DimensionMismatch(
            f"expected (n, {N_FEATURES}) queries, got {queries.shape}"
        )
    if not np.isfinite(queries).all():
        raise NonFiniteFeature("query features must be finite")
    if model.zero_addresses:
        queries = queries.copy()
        queries[:, list(ADDRESS_FEATURE_INDICES)] = 0.0
    if model.scaler is not None:
        queries = apply_scaler(model.scaler, queries)
    scores = _score_queries(model, queries)
    labels01 = (scores >= 0.5).astype(np.uint8)
    return labels01, scores


def predict(model: TrainedModel, vector: np.ndarray) -> Prediction:
    """Classify one 13-value feature vector."""
    arr = np.asarray(vector, dtype=np.float64)
    if arr.shape != (N_FEATURES,):
        raise DimensionMismatch(
            f"expected a ({N_FEATURES},) vector, got {arr.shape}"
        )
    labels01, scores = predict_many(model, arr.reshape(1, -1))
    label = Label.RANSOMWARE if labels01[0] else Label.BENIGN
    return Prediction(label=label, score=float(scores[0]))
