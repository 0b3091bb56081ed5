"""Command-line workflow: generate diverse latents and score image batches.

Exit codes: 0 success, 2 input error, 3 provider or attempt-budget failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import colors, io_formats, metrics, samplers
from .samplers import BudgetExhaustedError, SamplerConfig, preset_config
from .tensors import LatentShape

PROVIDER_ENV = "DIVLAT_PROVIDER_CMD"
DEFAULT_BATCH_SIZES = (3, 5, 10, 50)


def _parse_k_list(text: str) -> list[float]:
    try:
        ks = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValueError(f"bad K list {text!r}: {exc}") from exc
    if not ks:
        raise ValueError("K list must be nonempty")
    return ks


def _fmt_k(k: float) -> str:
    return f"{k:g}"


def _build_config(args: argparse.Namespace) -> SamplerConfig:
    shape = LatentShape(*args.shape)
    strategy = args.strategy
    if strategy is None:
        if args.batch_size > 50:
            # Rejection sampling at tight thresholds gets very slow for big
            # batches; maximin with pooling is the recommended default there.
            print(
                f"note: batch size {args.batch_size} > 50; defaulting to pooling_max "
                "(pass --strategy to override)",
                file=sys.stderr,
            )
            strategy = "pooling_max"
        else:
            strategy = "baseline"
    if args.preset:
        config = preset_config(args.preset, strategy, args.batch_size, args.seed, shape=shape)
        overrides = {}
        if args.d_min is not None:
            overrides["d_min"] = args.d_min
        if args.n_max is not None:
            overrides["n_max"] = args.n_max
        if overrides:
            d = config.to_dict()
            d["shape"] = shape
            d.update(overrides)
            config = SamplerConfig(**d)
        return config
    return SamplerConfig(
        strategy=strategy,
        batch_size=args.batch_size,
        seed=args.seed,
        d_min=args.d_min if args.d_min is not None else 0.0,
        n_max=args.n_max if args.n_max is not None else 1,
        pool_kernel=args.pool_kernel,
        attempt_budget=args.attempt_budget,
        shape=shape,
    )


def cmd_sample(args: argparse.Namespace) -> int:
    config = _build_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tensors, trace = samplers.sample(config)
    latent_path = out_dir / "latents.dlt"
    io_formats.write_latents(latent_path, tensors, fingerprint=config.fingerprint())
    trace_doc = {
        "config": config.to_dict(),
        "total_candidates": trace.total_candidates,
        "slots": [
            {"attempts": s.attempts, "min_distance": s.min_distance} for s in trace.slots
        ],
    }
    (out_dir / "trace.json").write_text(json.dumps(trace_doc, sort_keys=True, indent=2) + "\n")
    print(f"wrote {len(tensors)} latents to {latent_path} (+ .npy sidecar)")
    print(
        f"strategy={config.strategy} candidates={trace.total_candidates} "
        f"min_distances={[round(s.min_distance, 4) for s in trace.slots[1:]]}"
    )
    return 0


def _color_report(manifest: io_formats.BatchManifest, k_list: list[float], config: dict):
    per_k_counts: dict[float, list[int]] = {k: [] for k in k_list}
    for batch in manifest.batches:
        means = [io_formats.image_channel_means(p) for p in batch.items]
        stats = colors.batch_color_stats(means, k_list)
        for k in k_list:
            per_k_counts[k].append(stats.n_k[k])
    n = len(manifest.batches)
    out: dict[str, dict] = {}
    for k in k_list:
        counts = per_k_counts[k]
        tag = _fmt_k(k)
        avg = colors.avg_k(counts)
        avg_ci = metrics.mean_with_ci(counts)
        out[f"avg_K={tag}"] = {"value": avg, "half_width": avg_ci.half_width, "n": n}
        for name, value in (("c3", colors.c3_k(counts)), ("c2", colors.c2_k(counts))):
            ci = metrics.proportion_ci(value, n)
            out[f"{name}_K={tag}"] = {"value": value, "half_width": ci.half_width, "n": n}
    return io_formats.DiversityReport(config=config, metrics=out)


def cmd_analyze_color(args: argparse.Namespace) -> int:
    manifest = io_formats.load_manifest(args.manifest)
    k_list = _parse_k_list(args.k_list)
    config = {"command": "analyze-color", "manifest": str(args.manifest), "k_list": k_list}
    report = _color_report(manifest, k_list, config)
    _emit_report(report, args.out)
    return 0


def cmd_pairwise(args: argparse.Namespace) -> int:
    manifest = io_formats.load_manifest(args.manifest)
    eligible = [b for b in manifest.batches if len(b.items) >= 2]
    if not eligible:
        raise ValueError("no batch of size >= 2 in manifest")
    command = args.provider_cmd or os.environ.get(PROVIDER_ENV)
    if command:
        pairs = []
        for batch in eligible:
            for i, a in enumerate(batch.items):
                for b in batch.items[i + 1:]:
                    pairs.append((a, b))
        provider = metrics.ExternalCommandProvider(command).table(pairs)
    else:
        provider = io_formats.pixel_l2_provider()
    out: dict[str, dict] = {}
    per_batch = []
    for batch in eligible:
        value = metrics.avg_pairwise(list(batch.items), provider)
        per_batch.append(value)
        out[f"pairwise[{batch.id}]"] = {"value": value, "n": len(batch.items)}
    overall = metrics.mean_with_ci(per_batch)
    out["pairwise_mean"] = {
        "value": overall.mean,
        "half_width": overall.half_width,
        "n": overall.n,
    }
    config = {
        "command": "pairwise",
        "manifest": str(args.manifest),
        "provider": command or "builtin-pixel-l2",
    }
    _emit_report(io_formats.DiversityReport(config=config, metrics=out), args.out)
    return 0


def cmd_coverage(args: argparse.Namespace) -> int:
    labels = io_formats.load_labels_csv(args.labels)
    n = len(labels.batches)
    out: dict[str, dict] = {}

    def add(name: str, value: float) -> None:
        ci = metrics.proportion_ci(value, n)
        out[name] = {"value": value, "half_width": ci.half_width, "n": n}

    add("coverage_all_pairs", metrics.coverage_all_pairs(labels))
    add("coverage_all_genders", metrics.coverage_all_genders(labels))
    for m in range(1, len(metrics.ETHNICITIES) + 1):
        add(f"coverage_eth_at_least_{m}", metrics.coverage_at_least(labels, m))
    config = {"command": "coverage", "labels": str(args.labels)}
    _emit_report(io_formats.DiversityReport(config=config, metrics=out), args.out)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    method = io_formats.read_report(args.method)
    baseline = io_formats.read_report(args.baseline)
    mk, bk = set(method.metrics), set(baseline.metrics)
    if mk != bk:
        raise ValueError(
            f"metric keys differ; only in method: {sorted(mk - bk)}; "
            f"only in baseline: {sorted(bk - mk)}"
        )
    for field in ("command", "k_list", "shape"):
        mv, bv = method.config.get(field), baseline.config.get(field)
        if mv is not None and bv is not None and mv != bv and not args.force:
            raise ValueError(
                f"report configs disagree on {field!r} ({mv!r} vs {bv!r}); pass --force to compare anyway"
            )
    out: dict[str, dict] = {}
    rows = []
    for name in sorted(mk):
        score = metrics.multiplicative_improvement(
            method.metric_value(name), baseline.metric_value(name)
        )
        out[f"improvement[{name}]"] = {
            "value": score.ratio,
            "method": score.method_fraction,
            "baseline": score.baseline_fraction,
        }
        rendered = "n/a" if score.ratio is None else f"{score.ratio:.4f}"
        rows.append(f"{name}\t{score.baseline_fraction:.6g}\t{score.method_fraction:.6g}\t{rendered}")
    print("metric\tbaseline\tmethod\tratio")
    print("\n".join(rows))
    config = {"command": "compare", "method": str(args.method), "baseline": str(args.baseline)}
    _emit_report(io_formats.DiversityReport(config=config, metrics=out), args.out)
    return 0


def _emit_report(report: io_formats.DiversityReport, out: "str | None") -> None:
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        io_formats.write_report(report, path)
        io_formats.write_report_csv(report, path.with_suffix(".csv"))
        print(f"wrote {path} and {path.with_suffix('.csv')}")
    else:
        print(json.dumps({"metrics": report.metrics}, sort_keys=True, indent=2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divlat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="generate a diverse latent batch")
    p.add_argument("--strategy", choices=samplers.STRATEGIES, default=None)
    p.add_argument("--preset", choices=samplers.PRESET_NAMES, default=None)
    p.add_argument("-B", "--batch-size", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-min", type=float, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--pool-kernel", type=int, default=8)
    p.add_argument("--attempt-budget", type=int, default=samplers.DEFAULT_ATTEMPT_BUDGET)
    p.add_argument("--shape", type=int, nargs=3, metavar=("C", "H", "W"), default=(4, 64, 64))
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("analyze-color", help="color-dominance metrics over an image manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k-list", default="1,1.1,1.2")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze_color)

    p = sub.add_parser("pairwise", help="pairwise-distance metrics over an image manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--provider-cmd",
        default=None,
        help=f"external distance command (default: ${PROVIDER_ENV} or the builtin pixel metric)",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pairwise)

    p = sub.add_parser("coverage", help="gender/ethnicity coverage from a labels CSV")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("compare", help="multiplicative improvement of one report over another")
    p.add_argument("--method", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExhaustedError, metrics.ProviderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
