"""Training, checkpoints, evaluation and the command-line surface."""

from .checkpoint import Checkpoint
from .config import RunConfig, load_config, parse_config
from .model import AffinityModel, ligand_entity, protein_entity
from .training import (
    EpochLog,
    TrainResult,
    evaluate_checkpoint,
    explain_kg,
    explain_sample,
    mean_triple_score,
    predict,
    predict_values,
    train,
)

__all__ = [
    "AffinityModel",
    "Checkpoint",
    "EpochLog",
    "RunConfig",
    "TrainResult",
    "evaluate_checkpoint",
    "explain_kg",
    "explain_sample",
    "ligand_entity",
    "load_config",
    "mean_triple_score",
    "parse_config",
    "predict",
    "predict_values",
    "protein_entity",
    "train",
]
