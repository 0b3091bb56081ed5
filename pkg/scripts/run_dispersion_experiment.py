#!/usr/bin/env python3
"""Desk-scale dispersion comparison of the sampling strategies.

For each strategy, runs the standard preset over many seeds and reports the
batch-minimum and batch-mean pairwise distance (pooled metric), plus the
candidate counts the strategy consumed.
"""

import argparse
import itertools
import statistics
import time

from diverse_latents.samplers import preset_config, sample
from diverse_latents.tensors import avg_pool, l2_distance


def batch_distances(tensors, kernel=8):
    pooled = [avg_pool(t, kernel) for t in tensors]
    return [l2_distance(a, b) for a, b in itertools.combinations(pooled, 2)]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch-size", "-B", type=int, default=5)
    parser.add_argument("--seeds", type=int, default=50)
    parser.add_argument("--preset", choices=("standard", "long"), default="standard")
    args = parser.parse_args()

    print(f"preset={args.preset} B={args.batch_size} seeds={args.seeds}")
    print(f"{'strategy':>12} {'min pooled d':>14} {'mean pooled d':>14} {'candidates':>12} {'sec/run':>9}")
    for strategy in ("baseline", "cap", "max", "pooling_cap", "pooling_max"):
        mins, means, candidates = [], [], []
        t0 = time.perf_counter()
        for seed in range(args.seeds):
            config = preset_config(args.preset, strategy, args.batch_size, seed=seed)
            tensors, trace = sample(config)
            dists = batch_distances(tensors)
            mins.append(min(dists))
            means.append(statistics.mean(dists))
            candidates.append(trace.total_candidates)
        per_run = (time.perf_counter() - t0) / args.seeds
        print(
            f"{strategy:>12} {statistics.mean(mins):>14.4f} {statistics.mean(means):>14.4f} "
            f"{statistics.mean(candidates):>12.1f} {per_run:>9.3f}"
        )


if __name__ == "__main__":
    main()
