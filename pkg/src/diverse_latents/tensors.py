"""Latent tensors, deterministic Gaussian streams, distances and pooling.

All tensors are float32 with shape (channels, height, width); distance
accumulation happens in float64 so that 16384-term sums are order-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_TWO_PI = np.float32(2.0 * math.pi)


@dataclass(frozen=True)
class LatentShape:
    """Shape of one latent tensor; defaults to the 4x64x64 diffusion grid."""

    channels: int = 4
    height: int = 64
    width: int = 64

    def __post_init__(self) -> None:
        for name in ("channels", "height", "width"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def size(self) -> int:
        return self.channels * self.height * self.width

    def pooled(self, kernel: int) -> "LatentShape":
        """Shape after non-overlapping kernel x kernel average pooling."""
        if kernel < 1:
            raise ValueError(f"kernel must be positive, got {kernel}")
        if self.height % kernel or self.width % kernel:
            raise ValueError(
                f"height/width ({self.height}x{self.width}) not divisible by kernel {kernel}"
            )
        return LatentShape(self.channels, self.height // kernel, self.width // kernel)


@dataclass(frozen=True)
class LatentTensor:
    """Immutable float32 tensor of shape (channels, height, width)."""

    array: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.array, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"expected 3-d array, got ndim={arr.ndim}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("latent values must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @property
    def shape(self) -> LatentShape:
        c, h, w = self.array.shape
        return LatentShape(c, h, w)

    @property
    def flat(self) -> np.ndarray:
        return self.array.reshape(-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatentTensor):
            return NotImplemented
        return self.array.shape == other.array.shape and bool(
            np.array_equal(self.array, other.array)
        )


def _normal_rows(gen: np.random.Generator, rows: int, n_values: int) -> np.ndarray:
    """Draw `rows` independent rows of `n_values` standard normals.

    Box-Muller over float32 uniforms from `gen`.  Each row consumes exactly
    2*ceil(n_values/2) uniforms and both outputs of every transformed pair
    are kept, so the raw draw position is a pure function of the number of
    rows generated.  Drawing rows in chunks is bit-identical to drawing them
    one at a time.
    """
    pairs = (n_values + 1) // 2
    u = gen.random((rows, 2 * pairs), dtype=np.float32)
    u1 = u[:, :pairs]
    u2 = u[:, pairs:]
    radius = np.sqrt(np.float32(-2.0) * np.log1p(-u1))
    angle = _TWO_PI * u2
    out = np.empty((rows, 2 * pairs), dtype=np.float32)
    np.multiply(radius, np.cos(angle), out=out[:, :pairs])
    np.multiply(radius, np.sin(angle), out=out[:, pairs:])
    if n_values < 2 * pairs:
        out = np.ascontiguousarray(out[:, :n_values])
    return out


class SeededStream:
    """Deterministic stream of Gaussian latents.

    One PCG64 generator per (seed, lane); `counter` counts tensors drawn so
    far.  Lane 0 is the default candidate stream; samplers reserve other
    lanes for auxiliary draws.
    """

    def __init__(self, seed: int, lane: int = 0) -> None:
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = int(seed)
        self.lane = int(lane)
        self.counter = 0
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.lane,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def draw_block(self, count: int, shape: LatentShape) -> np.ndarray:
        """Draw `count` tensors at once; returns (count, C, H, W) float32."""
        if count < 1:
            raise ValueError(f"count must be positive, got {count}")
        rows = _normal_rows(self._gen, count, shape.size)
        self.counter += count
        return rows.reshape(count, shape.channels, shape.height, shape.width)

    def draw(self, shape: LatentShape) -> np.ndarray:
        return self.draw_block(1, shape)[0]


def generate_gaussian_latent(stream: SeededStream, shape: LatentShape) -> LatentTensor:
    """Next i.i.d. standard-normal tensor from the stream."""
    return LatentTensor(stream.draw(shape))


def sq_dists_to(point: np.ndarray, chunk: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from each row of `chunk` to `point` (float64)."""
    diff = chunk - point
    return np.sum(diff * diff, axis=-1)


def l2_distance(a: LatentTensor, b: LatentTensor) -> float:
    """Euclidean distance over the flattened tensors, accumulated in float64."""
    if a.array.shape != b.array.shape:
        raise ValueError(f"shape mismatch: {a.array.shape} vs {b.array.shape}")
    af = a.flat.astype(np.float64)
    bf = b.flat.astype(np.float64)
    return float(np.sqrt(sq_dists_to(bf, af[np.newaxis, :])[0]))


def avg_pool_array(arr: np.ndarray, kernel: int) -> np.ndarray:
    """Average-pool the trailing (H, W) axes with non-overlapping blocks.

    Means are accumulated in float64; result is float32 at the pooled shape.
    """
    *lead, c, h, w = arr.shape
    if h % kernel or w % kernel:
        raise ValueError(f"dimensions {h}x{w} not divisible by kernel {kernel}")
    blocks = arr.reshape(*lead, c, h // kernel, kernel, w // kernel, kernel)
    pooled = blocks.astype(np.float64).mean(axis=(-3, -1))
    return pooled.astype(np.float32)


def avg_pool(t: LatentTensor, kernel: int) -> LatentTensor:
    """Replace each kernel x kernel block by its arithmetic mean, per channel."""
    if kernel < 1:
        raise ValueError(f"kernel must be positive, got {kernel}")
    return LatentTensor(avg_pool_array(t.array, kernel))


def min_distance(
    v: LatentTensor, tensors: "list[LatentTensor] | tuple[LatentTensor, ...]",
    kernel: "int | None" = None,
) -> float:
    """Minimum distance from `v` to the set; +inf for the empty set.

    With `kernel` set, distances are taken between average-pooled tensors.
    """
    if not tensors:
        return math.inf
    if kernel is not None:
        v = avg_pool(v, kernel)
        tensors = [avg_pool(t, kernel) for t in tensors]
    return min(l2_distance(v, t) for t in tensors)
