"""Color-dominance metrics over image batches.

An image is "dominantly red" at coefficient K when its mean red channel
strictly exceeds K times the larger of the other two channel means (and
analogously for green and blue).  Batch-level metrics count how many of the
three colors appear as dominant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

RED = "red"
GREEN = "green"
BLUE = "blue"
COLORS = (RED, GREEN, BLUE)

DEFAULT_K_LIST = (1.0, 1.1, 1.2)


@dataclass(frozen=True)
class ChannelMeans:
    """Per-channel pixel means on the native 0-255 scale."""

    r: float
    g: float
    b: float

    def __post_init__(self) -> None:
        for name in ("r", "g", "b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 255.0:
                raise ValueError(f"channel mean {name}={v} outside [0, 255]")


def dominant_color(means: ChannelMeans, k: float) -> Optional[str]:
    """Dominant color at coefficient K, or None.

    Strict inequalities; K >= 1 guarantees at most one color can win.
    """
    if k < 1.0:
        raise ValueError(f"K must be >= 1, got {k}")
    if means.r > k * max(means.g, means.b):
        return RED
    if means.g > k * max(means.r, means.b):
        return GREEN
    if means.b > k * max(means.g, means.r):
        return BLUE
    return None


def n_dominant_colors(batch: Sequence[Optional[str]]) -> int:
    """Number of distinct colors attained as dominant by at least one image."""
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    return len({c for c in batch if c is not None})


def avg_k(batch_counts: Sequence[int]) -> float:
    """Mean dominant-color count over batches."""
    if len(batch_counts) == 0:
        raise ValueError("batch set must be nonempty")
    return sum(batch_counts) / len(batch_counts)


def c3_k(batch_counts: Sequence[int]) -> float:
    """Fraction of batches where all three colors are dominant somewhere."""
    if len(batch_counts) == 0:
        raise ValueError("batch set must be nonempty")
    return sum(1 for n in batch_counts if n == 3) / len(batch_counts)


def c2_k(batch_counts: Sequence[int]) -> float:
    """Fraction of batches with at least two distinct dominant colors."""
    if len(batch_counts) == 0:
        raise ValueError("batch set must be nonempty")
    return sum(1 for n in batch_counts if n >= 2) / len(batch_counts)


@dataclass(frozen=True)
class ColorBatchStats:
    """Per-batch dominance assignments and color counts for each configured K."""

    dominant: dict[float, tuple[Optional[str], ...]]
    n_k: dict[float, int]


def batch_color_stats(
    image_means: Sequence[ChannelMeans], k_list: Iterable[float] = DEFAULT_K_LIST
) -> ColorBatchStats:
    if len(image_means) == 0:
        raise ValueError("batch must be nonempty")
    dominant = {}
    n_k = {}
    for k in k_list:
        assignments = tuple(dominant_color(m, k) for m in image_means)
        dominant[k] = assignments
        n_k[k] = n_dominant_colors(assignments)
    return ColorBatchStats(dominant=dominant, n_k=n_k)
