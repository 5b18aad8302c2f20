"""Pool-based active learning: uncertainty sampling, query-by-committee,
simulated and human-in-the-loop label acquisition, and learning-curve
benchmarking."""

from .classifier import ModelParams, PosteriorMatrix, TrainConfig
from .committee import Committee, DisagreementKind, DisagreementStrategy
from .dataset import Dataset, Example, SyntheticSpec, generate_synthetic, load_csv, write_csv
from .engine import (
    LearningCurve,
    LoopConfig,
    LoopSession,
    LoopState,
    OracleResponse,
    baseline_noisy_pool,
    baseline_supervised,
    run_loop,
    simulated_oracle,
)
from .uncertainty import UncertaintyKind, UncertaintyStrategy

__version__ = "0.1.0"

__all__ = [
    "Committee",
    "Dataset",
    "DisagreementKind",
    "DisagreementStrategy",
    "Example",
    "LearningCurve",
    "LoopConfig",
    "LoopSession",
    "LoopState",
    "ModelParams",
    "OracleResponse",
    "PosteriorMatrix",
    "SyntheticSpec",
    "TrainConfig",
    "UncertaintyKind",
    "UncertaintyStrategy",
    "baseline_noisy_pool",
    "baseline_supervised",
    "generate_synthetic",
    "load_csv",
    "run_loop",
    "simulated_oracle",
    "write_csv",
]
