"""Frame-level SpecAugment for log Mel filterbank corpora."""

__version__ = "0.1.0"

from .errors import (
    FormatError,
    DataError,
    PolicyError,
    NumericError,
    SingularSystemError,
)
from .rng import Rng, batch_rng, uniform_int
from .feature_store import (
    FeatureMatrix,
    GlobalStats,
    read_corpus,
    write_corpus,
    compute_global_stats,
    normalize,
    gen_synthetic,
)
from .windowing import ContextWindow, WindowBatch, extract_windows, batch_windows
from .policy import AugmentPolicy, validate_policy
from .augment import (
    SampledTransform,
    warp_start_candidates,
    sample_transform,
    apply_freq_mask,
    apply_time_mask,
    apply_time_warp,
    apply_transform,
    augment_batch,
    utterance_specaugment,
)
from .reference_net import SeluParams, selu, selfnorm_check

__all__ = [
    "FormatError",
    "DataError",
    "PolicyError",
    "NumericError",
    "SingularSystemError",
    "Rng",
    "batch_rng",
    "uniform_int",
    "FeatureMatrix",
    "GlobalStats",
    "read_corpus",
    "write_corpus",
    "compute_global_stats",
    "normalize",
    "gen_synthetic",
    "ContextWindow",
    "WindowBatch",
    "extract_windows",
    "batch_windows",
    "AugmentPolicy",
    "validate_policy",
    "SampledTransform",
    "warp_start_candidates",
    "sample_transform",
    "apply_freq_mask",
    "apply_time_mask",
    "apply_time_warp",
    "apply_transform",
    "augment_batch",
    "utterance_specaugment",
    "SeluParams",
    "selu",
    "selfnorm_check",
]
