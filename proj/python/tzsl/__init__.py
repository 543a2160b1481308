"""Transductive zero-shot learning with pseudo-label triplets."""

from ._tzsl import (
    Checkpoint,
    Dataset,
    IoError,
    NumericError,
    SynthConfig,
    TzslError,
    ValidationError,
    adjusted_skewness,
    evaluate,
    generate_synthetic,
    harmonic_mean,
    hubness,
    load_checkpoint,
    load_dataset,
    monte_carlo_cv,
    qfsl,
    train_both,
    train_inductive,
    train_transductive,
)

__all__ = [
    "Checkpoint",
    "Dataset",
    "IoError",
    "NumericError",
    "SynthConfig",
    "TzslError",
    "ValidationError",
    "adjusted_skewness",
    "evaluate",
    "generate_synthetic",
    "harmonic_mean",
    "hubness",
    "load_checkpoint",
    "load_dataset",
    "monte_carlo_cv",
    "qfsl",
    "train_both",
    "train_inductive",
    "train_transductive",
]
