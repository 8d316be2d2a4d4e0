"""Relaxed F-measure losses for binary dense prediction, with the evaluation
protocol (MaxF, MeanF, MAE) and a toy training bench."""

from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    DomainError,
    FlossError,
    FormatError,
    SaturationError,
    UnsupportedFormatError,
)
from .losses import (
    DEFAULT_BETA2,
    EPS,
    LossResult,
    RelaxedCounts,
    balanced_celoss,
    celoss,
    finite_difference_grad,
    floss,
    log_floss,
    loss_surface_grid,
    relaxed_counts,
    relaxed_f,
)
from .maps import BinaryMap, GradientMap, SaliencyMap, binarize, new_binary_map, new_saliency_map, shape_compatible
from .metrics import (
    DiscreteCounts,
    EvalSummary,
    SweepCurve,
    dataset_eval,
    discrete_counts,
    f_at_threshold,
    mae,
    mean_f,
    optimal_threshold,
    sweep,
    threshold_stats,
)

__version__ = "0.1.0"
