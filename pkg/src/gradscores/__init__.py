"""Teacher-selection toolkit: gradient-distribution scores for distillation.

Computes cross-validated whitened gradient norms, spectral-entropy diversity,
and companion baselines from per-sample projected student gradients, and
evaluates how well each score predicts post-distillation student performance.
"""

from .baselines import ScoreReport, gram_logdet, influence, same_prompt_pairwise, scalar_score
from .evaluation import (
    AlphaReport,
    PerformanceTable,
    alpha_check,
    evaluate,
    regret,
    spearman,
)
from .features import (
    FeatureFormatError,
    GradientFeatureSet,
    ProcessedGradients,
    materialize,
    read_features,
    write_features,
)
from .moments import MomentBundle, eig_sym, moment_bundle, second_moment, smooth, spectral_entropy
from .projection import ProjectionSpec, entry, project
from .scores import GraceResult, PartitionScheme, g_norm, g_vendi, grace, grace_loo, partition
from .synth import SynthSpec, generate, generate_pair

__all__ = [
    "AlphaReport",
    "FeatureFormatError",
    "GradientFeatureSet",
    "GraceResult",
    "MomentBundle",
    "PartitionScheme",
    "PerformanceTable",
    "ProcessedGradients",
    "ProjectionSpec",
    "ScoreReport",
    "SynthSpec",
    "alpha_check",
    "eig_sym",
    "entry",
    "evaluate",
    "g_norm",
    "g_vendi",
    "generate",
    "generate_pair",
    "grace",
    "grace_loo",
    "gram_logdet",
    "influence",
    "materialize",
    "moment_bundle",
    "partition",
    "project",
    "read_features",
    "regret",
    "same_prompt_pairwise",
    "scalar_score",
    "second_moment",
    "smooth",
    "spearman",
    "spectral_entropy",
    "write_features",
]

__version__ = "0.1.0"
