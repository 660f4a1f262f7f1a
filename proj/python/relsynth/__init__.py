"""Relational synthetic data generation.

Thin re-export of the compiled extension. The heavy lifting (graph encoding,
VAE training, evaluation) lives in the C++ core; this package just makes it
importable.
"""

from _relsynth import (
    EpochLoss,
    EvalReport,
    McResult,
    PipelineOutcome,
    PrivacyResult,
    TrainConfig,
    TrainOutcome,
    ValidateOutcome,
    evaluate,
    generate,
    load_train_config,
    pipeline,
    train,
    validate,
)

__all__ = [
    "EpochLoss",
    "EvalReport",
    "McResult",
    "PipelineOutcome",
    "PrivacyResult",
    "TrainConfig",
    "TrainOutcome",
    "ValidateOutcome",
    "evaluate",
    "generate",
    "load_train_config",
    "pipeline",
    "train",
    "validate",
]
