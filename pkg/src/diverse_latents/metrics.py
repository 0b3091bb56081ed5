"""Pairwise-distance aggregation, label coverage and improvement scores.

The pairwise protocol works against any symmetric distance provider; the
perceptual-network metric stays outside this package and is plugged in via
a file-based subprocess contract (see ExternalCommandProvider).
"""

from __future__ import annotations

import itertools
import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

GENDERS = ("male", "female")
ETHNICITIES = ("Black", "Asian", "Hispanic", "White-or-MiddleEastern")

PairwiseDistanceProvider = Callable[[str, str], float]


class ProviderError(RuntimeError):
    """External or wrapped distance provider misbehaved."""


def checked_provider(
    provider: PairwiseDistanceProvider, tol: float = 0.0
) -> PairwiseDistanceProvider:
    """Wrap a provider with symmetry / nonnegativity checks on every queried pair."""

    def wrapped(a: str, b: str) -> float:
        d_ab = float(provider(a, b))
        d_ba = float(provider(b, a))
        if abs(d_ab - d_ba) > tol:
            raise ProviderError(f"asymmetric provider: d({a},{b})={d_ab} != d({b},{a})={d_ba}")
        if d_ab < 0:
            raise ProviderError(f"negative distance d({a},{b})={d_ab}")
        if a == b and d_ab != 0:
            raise ProviderError(f"nonzero self-distance d({a},{a})={d_ab}")
        return d_ab

    return wrapped


def avg_pairwise(batch: Sequence[str], d: PairwiseDistanceProvider) -> float:
    """Mean distance over all unordered pairs of the batch."""
    if len(batch) < 2:
        raise ValueError(f"batch must have at least 2 items, got {len(batch)}")
    pairs = list(itertools.combinations(batch, 2))
    return sum(d(a, b) for a, b in pairs) / len(pairs)


@dataclass(frozen=True)
class MeanWithCI:
    """Sample mean with a normal-approximation 95% half-width over n units."""

    mean: float
    half_width: float
    n: int


def mean_with_ci(values: Sequence[float]) -> MeanWithCI:
    if len(values) == 0:
        raise ValueError("values must be nonempty")
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) == 1:
        return MeanWithCI(mean=float(arr[0]), half_width=0.0, n=1)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr)))
    return MeanWithCI(mean=float(arr.mean()), half_width=1.96 * se, n=len(arr))


def avg_pairwise_across_batches(
    batches: Sequence[Sequence[str]], d: PairwiseDistanceProvider
) -> MeanWithCI:
    """Mean of per-batch pairwise means, with a 95% interval over batches."""
    eligible = [b for b in batches if len(b) >= 2]
    if not eligible:
        raise ValueError("no batch of size >= 2")
    return mean_with_ci([avg_pairwise(b, d) for b in eligible])


@dataclass(frozen=True)
class LabeledBatchSet:
    """Gender/ethnicity labels per image, grouped into batches."""

    batches: dict[str, list[tuple[str, str]]]  # batch id -> [(gender, ethnicity)]

    def __post_init__(self) -> None:
        for bid, labels in self.batches.items():
            for gender, ethnicity in labels:
                if gender not in GENDERS:
                    raise ValueError(f"batch {bid!r}: unknown gender {gender!r}")
                if ethnicity not in ETHNICITIES:
                    raise ValueError(f"batch {bid!r}: unknown ethnicity {ethnicity!r}")


def coverage_all_pairs(labels: LabeledBatchSet) -> float:
    """Fraction of batches containing every gender x ethnicity combination."""
    if not labels.batches:
        raise ValueError("label set must be nonempty")
    wanted = {(g, e) for g in GENDERS for e in ETHNICITIES}
    hits = sum(1 for b in labels.batches.values() if wanted <= set(b))
    return hits / len(labels.batches)


def coverage_at_least(labels: LabeledBatchSet, m: int) -> float:
    """Fraction of batches whose distinct-ethnicity count is at least m."""
    if not labels.batches:
        raise ValueError("label set must be nonempty")
    if not 1 <= m <= len(ETHNICITIES):
        raise ValueError(f"m must be in 1..{len(ETHNICITIES)}, got {m}")
    hits = sum(
        1 for b in labels.batches.values() if len({e for _, e in b}) >= m
    )
    return hits / len(labels.batches)


def coverage_all_genders(labels: LabeledBatchSet) -> float:
    """Fraction of batches where both genders appear (looser coverage reading)."""
    if not labels.batches:
        raise ValueError("label set must be nonempty")
    hits = sum(1 for b in labels.batches.values() if {g for g, _ in b} == set(GENDERS))
    return hits / len(labels.batches)


@dataclass(frozen=True)
class ImprovementScore:
    method_fraction: float
    baseline_fraction: float
    ratio: Optional[float]  # None when the baseline fraction is zero


def multiplicative_improvement(
    method_fraction: float, baseline_fraction: float
) -> ImprovementScore:
    """Ratio of the method's batch fraction to the baseline's."""
    for name, v in (("method", method_fraction), ("baseline", baseline_fraction)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} fraction {v} outside [0, 1]")
    ratio = method_fraction / baseline_fraction if baseline_fraction > 0 else None
    return ImprovementScore(method_fraction, baseline_fraction, ratio)


@dataclass(frozen=True)
class ProportionCI:
    p: float
    n: int
    half_width: float  # 1.96 * sqrt(p(1-p)/n)


def proportion_ci(p: float, n: int) -> ProportionCI:
    """Normal-approximation 95% interval half-width for a proportion."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"proportion {p} outside [0, 1]")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return ProportionCI(p=p, n=n, half_width=1.96 * math.sqrt(p * (1.0 - p) / n))


class ExternalCommandProvider:
    """Distance provider backed by an external command with a file contract.

    The command is invoked as ``<command> <request_path> <response_path>``.
    The request file holds one tab-separated id pair per line; the response
    must hold one decimal distance per line, same order.
    """

    def __init__(self, command: str) -> None:
        if not command.strip():
            raise ValueError("provider command must be nonempty")
        self.command = command

    def compute(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        with tempfile.TemporaryDirectory(prefix="divlat-provider-") as tmp:
            request = Path(tmp) / "pairs.tsv"
            response = Path(tmp) / "distances.txt"
            request.write_text("".join(f"{a}\t{b}\n" for a, b in pairs))
            proc = subprocess.run(
                shlex.split(self.command) + [str(request), str(response)],
                capture_output=True,
                text=True,
            )
            if proc.returncode != 0:
                raise ProviderError(
                    f"provider command failed with exit {proc.returncode}: {proc.stderr.strip()}"
                )
            if not response.exists():
                raise ProviderError("provider produced no response file")
            lines = response.read_text().splitlines()
        if len(lines) != len(pairs):
            raise ProviderError(
                f"provider returned {len(lines)} distances for {len(pairs)} pairs"
            )
        try:
            values = [float(line) for line in lines]
        except ValueError as exc:
            raise ProviderError(f"non-numeric distance in provider response: {exc}") from exc
        return values

    def table(
        self, pairs: Iterable[tuple[str, str]], check_symmetry: int = 8
    ) -> PairwiseDistanceProvider:
        """Precompute a lookup provider for the given pairs in one invocation.

        Up to `check_symmetry` swapped pairs are appended to the request and
        verified equal to their forward direction.
        """
        unique = list(dict.fromkeys(tuple(p) for p in pairs))
        swapped = [(b, a) for a, b in unique[:check_symmetry]]
        values = self.compute(unique + swapped)
        lookup: dict[tuple[str, str], float] = {}
        for (a, b), v in zip(unique, values[: len(unique)]):
            if v < 0:
                raise ProviderError(f"negative distance d({a},{b})={v}")
            lookup[(a, b)] = v
            lookup[(b, a)] = v
        for (b, a), v in zip(swapped, values[len(unique):]):
            if v != lookup[(a, b)]:
                raise ProviderError(
                    f"asymmetric provider: d({a},{b})={lookup[(a, b)]} != d({b},{a})={v}"
                )

        def provider(a: str, b: str) -> float:
            if a == b:
                return 0.0
            return lookup[(a, b)]

        return provider
