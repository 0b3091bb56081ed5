"""Diverse latent sampling and batch-diversity evaluation."""

from .tensors import (
    LatentShape,
    LatentTensor,
    SeededStream,
    avg_pool,
    generate_gaussian_latent,
    l2_distance,
    min_distance,
)
from .samplers import (
    BudgetExhaustedError,
    SampleTrace,
    SamplerConfig,
    SlotRecord,
    preset_config,
    sample,
)
from .colors import (
    ChannelMeans,
    ColorBatchStats,
    avg_k,
    batch_color_stats,
    c2_k,
    c3_k,
    dominant_color,
    n_dominant_colors,
)
from .metrics import (
    ImprovementScore,
    LabeledBatchSet,
    MeanWithCI,
    ProportionCI,
    avg_pairwise,
    avg_pairwise_across_batches,
    coverage_all_pairs,
    coverage_at_least,
    multiplicative_improvement,
    proportion_ci,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
