"""Classifier families, training, prediction and model files."""

from .base import (
    ALL_KINDS,
    KIND_ALIASES,
    SCALED_KINDS,
    BayesParams,
    ClassifierKind,
    ForestParams,
    Hyperparams,
    KnnParams,
    MlpParams,
    Prediction,
    SvmParams,
    TrainedModel,
    TreeParams,
    default_hyperparams,
    kind_from_name,
    predict,
    predict_many,
    train,
    validate_hyperparams,
)
from .model_io import (
    MODEL_FORMAT_VERSION,
    MODEL_MAGIC,
    load_model,
    model_fingerprint,
    read_model,
    save_model,
    write_model,
)

__all__ = [
    "ALL_KINDS",
    "KIND_ALIASES",
    "MODEL_FORMAT_VERSION",
    "MODEL_MAGIC",
    "SCALED_KINDS",
    "BayesParams",
    "ClassifierKind",
    "ForestParams",
    "Hyperparams",
    "KnnParams",
    "MlpParams",
    "Prediction",
    "SvmParams",
    "TrainedModel",
    "TreeParams",
    "default_hyperparams",
    "kind_from_name",
    "load_model",
    "model_fingerprint",
    "predict",
    "predict_many",
    "read_model",
    "save_model",
    "train",
    "validate_hyperparams",
    "write_model",
]
