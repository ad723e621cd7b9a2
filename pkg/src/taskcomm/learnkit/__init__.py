"""Shared learning substrate: parameters, optimizer, replay, seeding, checkpoints."""

from taskcomm.learnkit.checkpoint import (
    CheckpointError,
    CheckpointFormatError,
    CheckpointManifestError,
    CheckpointTruncationError,
    load_checkpoint,
    save_checkpoint,
)
from taskcomm.learnkit.optim import OptimizerState, init_optimizer, optimizer_step
from taskcomm.learnkit.params import ParamSet
from taskcomm.learnkit.replay import SequenceReplay, SequenceSample, sample_sequences
from taskcomm.learnkit.rng import derive_seed, generator

__all__ = [
    "CheckpointError",
    "CheckpointFormatError",
    "CheckpointManifestError",
    "CheckpointTruncationError",
    "OptimizerState",
    "ParamSet",
    "SequenceReplay",
    "SequenceSample",
    "derive_seed",
    "generator",
    "init_optimizer",
    "load_checkpoint",
    "optimizer_step",
    "sample_sequences",
    "save_checkpoint",
]
