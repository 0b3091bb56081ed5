"""File formats: latent batches, image statistics, manifests and reports.

Latent batches persist in a small private container (magic ``DLT1``) that
carries the config fingerprint, plus an optional ``.npy`` sidecar in the
standard array-interchange layout for direct pipeline consumption.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .colors import ChannelMeans
from .metrics import LabeledBatchSet
from .tensors import LatentShape, LatentTensor

MAGIC = b"DLT1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sH3IQ32s")  # magic, version, C/H/W, element count, fingerprint


class LatentFormatError(ValueError):
    """Base class for latent-file parse failures."""


class BadMagicError(LatentFormatError):
    pass


class TruncatedFileError(LatentFormatError):
    pass


class CountMismatchError(LatentFormatError):
    pass


@dataclass(frozen=True)
class LatentFileHeader:
    shape: LatentShape
    count: int  # total payload elements across the batch
    fingerprint: bytes = b"\x00" * 32
    version: int = FORMAT_VERSION

    @property
    def batch_size(self) -> int:
        return self.count // self.shape.size


def write_latents(
    path: "str | Path",
    tensors: Sequence[LatentTensor],
    fingerprint: bytes = b"\x00" * 32,
    sidecar: bool = True,
) -> Path:
    """Write a latent batch; optionally emits a `.npy` sidecar of shape (B, C, H, W)."""
    path = Path(path)
    if not tensors:
        raise ValueError("cannot write an empty latent batch")
    if len(fingerprint) != 32:
        raise ValueError(f"fingerprint must be 32 bytes, got {len(fingerprint)}")
    shape = tensors[0].shape
    for t in tensors:
        if t.shape != shape:
            raise ValueError(f"mixed shapes in batch: {t.shape} vs {shape}")
    stacked = np.stack([t.array for t in tensors]).astype("<f4")
    count = stacked.size
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, shape.channels, shape.height, shape.width, count, fingerprint
    )
    path.write_bytes(header + stacked.tobytes())
    if sidecar:
        np.save(path.with_suffix(".npy"), stacked)
    return path


def read_latents(path: "str | Path") -> tuple[LatentFileHeader, list[LatentTensor]]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedFileError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, c, h, w, count, fingerprint = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    shape = LatentShape(c, h, w)
    if count % shape.size:
        raise CountMismatchError(
            f"{path}: element count {count} not a multiple of tensor size {shape.size}"
        )
    expected = _HEADER.size + 4 * count
    if len(data) < expected:
        raise TruncatedFileError(f"{path}: payload truncated ({len(data)} < {expected} bytes)")
    if len(data) > expected:
        raise CountMismatchError(f"{path}: trailing bytes after payload ({len(data)} > {expected})")
    values = np.frombuffer(data, dtype="<f4", count=count, offset=_HEADER.size)
    batch = values.reshape(-1, c, h, w)
    header = LatentFileHeader(shape=shape, count=count, fingerprint=fingerprint, version=version)
    return header, [LatentTensor(a) for a in batch]


def image_channel_means(path: "str | Path") -> ChannelMeans:
    """Per-channel pixel means at stored resolution; alpha dropped, grayscale broadcast."""
    try:
        with Image.open(path) as img:
            if img.mode not in ("RGB", "RGBA", "L"):
                img = img.convert("RGB")
            arr = np.asarray(img)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot decode image {path}: {exc}") from exc
    if arr.ndim == 2:  # grayscale: r = g = b
        mean = float(arr.astype(np.float64).mean())
        return ChannelMeans(mean, mean, mean)
    rgb = arr[..., :3].astype(np.float64)
    r, g, b = rgb.reshape(-1, 3).mean(axis=0)
    return ChannelMeans(float(r), float(g), float(b))


def pixel_l2_provider(grid: int = 8):
    """Self-contained image distance: L2 between box-downscaled pixel grids.

    Stands in for the external perceptual provider in tests and as the CLI
    default.  Images are downscaled to ``grid x grid`` RGB with a box filter
    and compared on the 0-1 scale.
    """

    def provider(a: str, b: str) -> float:
        vecs = []
        for p in (a, b):
            with Image.open(p) as img:
                small = img.convert("RGB").resize((grid, grid), Image.BOX)
            vecs.append(np.asarray(small, dtype=np.float64).reshape(-1) / 255.0)
        return float(np.sqrt(np.sum((vecs[0] - vecs[1]) ** 2)))

    return provider


@dataclass(frozen=True)
class Batch:
    id: str
    items: tuple[str, ...]
    prompt: Optional[str] = None
    strategy: Optional[str] = None


@dataclass(frozen=True)
class BatchManifest:
    batches: tuple[Batch, ...]


def load_manifest(path: "str | Path", check_files: bool = True) -> BatchManifest:
    """Load a JSON manifest; validates unique batch ids and referenced paths."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from exc
    raw_batches = doc.get("batches")
    if not raw_batches:
        raise ValueError(f"{path}: manifest has no batches")
    batches = []
    seen = set()
    missing = []
    base = path.parent
    for entry in raw_batches:
        bid = entry.get("id")
        items = entry.get("items")
        if not bid or not isinstance(items, list) or not items:
            raise ValueError(f"{path}: each batch needs an 'id' and nonempty 'items'")
        if bid in seen:
            raise ValueError(f"{path}: duplicate batch id {bid!r}")
        seen.add(bid)
        resolved = []
        for item in items:
            p = Path(item)
            if not p.is_absolute():
                p = base / p
            if check_files and not p.exists():
                missing.append(str(p))
            resolved.append(str(p))
        batches.append(
            Batch(id=bid, items=tuple(resolved), prompt=entry.get("prompt"), strategy=entry.get("strategy"))
        )
    if missing:
        raise ValueError(f"{path}: missing files: {', '.join(missing)}")
    return BatchManifest(batches=tuple(batches))


@dataclass(frozen=True)
class DiversityReport:
    """Aggregated metric values keyed by name, plus the producing config."""

    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)  # name -> {value, half_width?, n?}

    def metric_value(self, name: str) -> float:
        return float(self.metrics[name]["value"])


def write_report(report: DiversityReport, path: "str | Path") -> Path:
    path = Path(path)
    path.write_text(json.dumps(asdict(report), sort_keys=True, indent=2) + "\n")
    return path


def read_report(path: "str | Path") -> DiversityReport:
    doc = json.loads(Path(path).read_text())
    return DiversityReport(config=doc.get("config", {}), metrics=doc.get("metrics", {}))


REPORT_CSV_COLUMNS = ("metric", "value", "half_width", "n")


def write_report_csv(report: DiversityReport, path: "str | Path") -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_CSV_COLUMNS)
        for name in sorted(report.metrics):
            entry = report.metrics[name]
            writer.writerow(
                [name, entry.get("value"), entry.get("half_width", ""), entry.get("n", "")]
            )
    return path


def load_labels_csv(path: "str | Path") -> LabeledBatchSet:
    """Read `batch_id,image_id,gender,ethnicity` rows into a LabeledBatchSet."""
    path = Path(path)
    batches: dict[str, list[tuple[str, str]]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"batch_id", "image_id", "gender", "ethnicity"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                probe = LabeledBatchSet(
                    batches={row["batch_id"]: [(row["gender"], row["ethnicity"])]}
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            del probe
            batches.setdefault(row["batch_id"], []).append((row["gender"], row["ethnicity"]))
    if not batches:
        raise ValueError(f"{path}: no label rows")
    return LabeledBatchSet(batches=batches)
