"""Temporal-shift video anomaly detection: windowing, losses, models, metrics
and experiment runners backed by the C++ core."""

from ._core import (
    ConfigError,
    DataError,
    MetricError,
    Model,
    ShiftedPair,
    TrainingError,
    build_model,
    compare_fusion,
    compare_losses,
    config_hash,
    enumerate_pairs,
    frame_coverage,
    generate_synthetic,
    masked_loss,
    no_skill_pr,
    pr_auc,
    roc_auc,
    run,
    score,
    sweep,
    temporal_shift_loss,
)

__version__ = "0.1.0"
