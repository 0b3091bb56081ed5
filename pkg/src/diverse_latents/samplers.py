"""Diversity sampling strategies over the Gaussian latent space.

Strategies:
  baseline     unfiltered draws
  cap          rejection sampling with a minimum pairwise distance d_min
  max          per-slot maximin selection over n_max candidates
  pooling_cap / pooling_max
               same procedures with distances taken after 8x8 average pooling

The pooling strategies draw each candidate's block means first and expand
the admitted candidates to full resolution afterwards (the per-block
construction ``x_i = m + e_i - mean(e)`` with fresh residual normals ``e``
yields exactly i.i.d. standard normals), which keeps rejection sampling at
tight thresholds cheap.  Every sample() call is a pure function of its
config.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .tensors import (
    LatentShape,
    LatentTensor,
    SeededStream,
    avg_pool_array,
    sq_dists_to,
)

STRATEGIES = ("baseline", "cap", "max", "pooling_cap", "pooling_max")
PRESET_NAMES = ("standard", "long")

# Per-strategy parameters of the two published experiment settings.
_PRESETS = {
    "standard": {
        "cap": {"d_min": 182.0},
        "pooling_cap": {"d_min": 3.1},
        "max": {"n_max": 100},
        "pooling_max": {"n_max": 100},
        "baseline": {},
    },
    "long": {
        "cap": {"d_min": 183.0},
        "pooling_cap": {"d_min": 3.1},
        "max": {"n_max": 10000},
        "pooling_max": {"n_max": 10000},
        "baseline": {},
    },
}

DEFAULT_ATTEMPT_BUDGET = 10_000_000


@dataclass(frozen=True)
class SamplerConfig:
    strategy: str
    batch_size: int
    seed: int
    d_min: float = 0.0
    n_max: int = 1
    pool_kernel: int = 8
    attempt_budget: int = DEFAULT_ATTEMPT_BUDGET
    shape: LatentShape = field(default_factory=LatentShape)

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.d_min < 0:
            raise ValueError(f"d_min must be nonnegative, got {self.d_min}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.pool_kernel < 1:
            raise ValueError(f"pool_kernel must be >= 1, got {self.pool_kernel}")
        if self.attempt_budget < self.batch_size:
            raise ValueError(
                f"attempt_budget ({self.attempt_budget}) must be >= batch_size ({self.batch_size})"
            )
        if self.strategy in ("pooling_cap", "pooling_max"):
            self.shape.pooled(self.pool_kernel)  # validates divisibility

    @property
    def pooled_metric(self) -> bool:
        return self.strategy in ("pooling_cap", "pooling_max")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = [self.shape.channels, self.shape.height, self.shape.width]
        return d

    def fingerprint(self) -> bytes:
        """32-byte digest of the canonical config; embedded in latent files."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).digest()


def preset_config(
    name: str,
    strategy: str,
    batch_size: int,
    seed: int,
    shape: LatentShape | None = None,
) -> SamplerConfig:
    """Config populated with the published standard/long experiment parameters."""
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    params = _PRESETS[name][strategy]
    return SamplerConfig(
        strategy=strategy,
        batch_size=batch_size,
        seed=seed,
        shape=shape if shape is not None else LatentShape(),
        **params,
    )


@dataclass(frozen=True)
class SlotRecord:
    """One selected vector: candidates consumed and its winning min-distance."""

    attempts: int
    min_distance: float


@dataclass(frozen=True)
class SampleTrace:
    slots: tuple[SlotRecord, ...]
    total_candidates: int


class BudgetExhaustedError(RuntimeError):
    """Raised when cap sampling runs out of attempts before filling the batch.

    Signals that d_min is infeasible for this batch size at this
    dimensionality; `trace` holds the partial progress.
    """

    def __init__(self, config: SamplerConfig, trace: SampleTrace) -> None:
        self.config = config
        self.trace = trace
        super().__init__(
            f"attempt budget {config.attempt_budget} exhausted after admitting "
            f"{len(trace.slots)}/{config.batch_size} vectors "
            f"(strategy={config.strategy}, d_min={config.d_min})"
        )


def _expand_pooled(
    means: np.ndarray, kernel: int, residual_stream: SeededStream, shape: LatentShape
) -> np.ndarray:
    """Full-resolution tensor whose block means match `means`.

    Draws one fresh residual tensor and recenters each kernel x kernel block
    onto the requested mean; the result is marginally i.i.d. N(0, 1).
    """
    c, hp, wp = means.shape
    e = residual_stream.draw(shape).astype(np.float64)
    blocks = e.reshape(c, hp, kernel, wp, kernel)
    block_means = blocks.mean(axis=(2, 4), keepdims=True)
    centered = blocks - block_means + means.astype(np.float64)[:, :, None, :, None]
    return centered.reshape(shape.channels, shape.height, shape.width).astype(np.float32)


def _candidate_block(
    stream: SeededStream, count: int, config: SamplerConfig
) -> np.ndarray:
    """Next `count` candidate representations, (count, c, h, w) float32.

    For pooled strategies the representation is the candidate's block-mean
    tensor (standard normals scaled by 1/kernel); otherwise the full tensor.
    """
    if config.pooled_metric:
        pooled_shape = config.shape.pooled(config.pool_kernel)
        block = stream.draw_block(count, pooled_shape)
        return block * np.float32(1.0 / config.pool_kernel)
    return stream.draw_block(count, config.shape)


def _exact_repr(tensor_array: np.ndarray, config: SamplerConfig) -> np.ndarray:
    """Float64 flat representation under the strategy metric, as tests recompute it."""
    if config.pooled_metric:
        return avg_pool_array(tensor_array, config.pool_kernel).astype(np.float64).reshape(-1)
    return tensor_array.astype(np.float64).reshape(-1)


def _sample_baseline(config: SamplerConfig) -> tuple[list[LatentTensor], SampleTrace]:
    stream = SeededStream(config.seed)
    block = stream.draw_block(config.batch_size, config.shape)
    reprs = block.reshape(config.batch_size, -1).astype(np.float64)
    slots = []
    for i in range(config.batch_size):
        if i == 0:
            d = math.inf
        else:
            d = float(np.sqrt(sq_dists_to(reprs[i], reprs[:i]).min()))
        slots.append(SlotRecord(attempts=1, min_distance=d))
    tensors = [LatentTensor(block[i]) for i in range(config.batch_size)]
    return tensors, SampleTrace(tuple(slots), config.batch_size)


def _sample_cap(config: SamplerConfig) -> tuple[list[LatentTensor], SampleTrace]:
    pooled = config.pooled_metric
    cand_stream = SeededStream(config.seed, lane=0)
    res_stream = SeededStream(config.seed, lane=1) if pooled else None

    outputs: list[LatentTensor] = []
    admitted: list[np.ndarray] = []  # exact float64 metric representations
    slots: list[SlotRecord] = []
    consumed = 0
    attempts = 0
    chunk = 2048 if pooled else 128

    while len(outputs) < config.batch_size:
        remaining = config.attempt_budget - consumed
        if remaining <= 0:
            raise BudgetExhaustedError(config, SampleTrace(tuple(slots), consumed))
        m = min(chunk, remaining)
        raw = _candidate_block(cand_stream, m, config)
        flat = raw.reshape(m, -1).astype(np.float64)
        sq = np.full(m, np.inf)
        for r in admitted:
            np.minimum(sq, sq_dists_to(r, flat), out=sq)
        dist = np.sqrt(sq)

        i = 0
        while i < m and len(outputs) < config.batch_size:
            ok = dist[i:] >= config.d_min
            j = int(np.argmax(ok))
            if not ok[j]:
                attempts += m - i
                i = m
                break
            idx = i + j
            attempts += j + 1
            i = idx + 1
            if pooled:
                full = _expand_pooled(raw[idx], config.pool_kernel, res_stream, config.shape)
                exact = _exact_repr(full, config)
                if admitted:
                    exact_d = np.sqrt(sq_dists_to(exact, np.stack(admitted)))
                    # Re-verify with the float32-pooled values the batch will
                    # actually carry; a borderline candidate can lose ~1e-6.
                    if exact_d.min() < config.d_min:
                        continue
                    winning = float(exact_d.min())
                else:
                    winning = math.inf
            else:
                full = raw[idx].copy()
                exact = flat[idx].copy()
                winning = float(dist[idx]) if admitted else math.inf
            outputs.append(LatentTensor(full))
            admitted.append(exact)
            slots.append(SlotRecord(attempts=attempts, min_distance=winning))
            attempts = 0
            if len(outputs) < config.batch_size and i < m:
                np.minimum(sq[i:], sq_dists_to(exact, flat[i:]), out=sq[i:])
                dist[i:] = np.sqrt(sq[i:])
        consumed += i if len(outputs) == config.batch_size else m

    return outputs, SampleTrace(tuple(slots), consumed)


def _sample_max(config: SamplerConfig) -> tuple[list[LatentTensor], SampleTrace]:
    pooled = config.pooled_metric
    cand_stream = SeededStream(config.seed, lane=0)
    res_stream = SeededStream(config.seed, lane=1) if pooled else None

    outputs: list[LatentTensor] = []
    selected: list[np.ndarray] = []
    slots: list[SlotRecord] = []
    chunk = 4096 if pooled else 128

    for _ in range(config.batch_size):
        best_val = -math.inf
        best_raw: np.ndarray | None = None
        remaining = config.n_max
        while remaining:
            m = min(chunk, remaining)
            raw = _candidate_block(cand_stream, m, config)
            if selected:
                flat = raw.reshape(m, -1).astype(np.float64)
                sq = np.full(m, np.inf)
                for r in selected:
                    np.minimum(sq, sq_dists_to(r, flat), out=sq)
                dist = np.sqrt(sq)
            else:
                dist = np.full(m, np.inf)
            j = int(np.argmax(dist))  # first occurrence: earliest candidate wins ties
            if best_raw is None or dist[j] > best_val:
                best_val = float(dist[j])
                best_raw = raw[j].copy()
            remaining -= m
        if pooled:
            full = _expand_pooled(best_raw, config.pool_kernel, res_stream, config.shape)
        else:
            full = best_raw
        outputs.append(LatentTensor(full))
        selected.append(_exact_repr(full, config))
        slots.append(SlotRecord(attempts=config.n_max, min_distance=best_val))

    return outputs, SampleTrace(tuple(slots), config.batch_size * config.n_max)


def sample(config: SamplerConfig) -> tuple[list[LatentTensor], SampleTrace]:
    """Draw a diverse batch per the configured strategy.

    Deterministic: identical config yields bit-identical tensors and trace.
    Cap strategies raise BudgetExhaustedError when the attempt budget runs
    out before the batch is full.
    """
    if config.strategy == "baseline":
        return _sample_baseline(config)
    if config.strategy in ("cap", "pooling_cap"):
        return _sample_cap(config)
    return _sample_max(config)
