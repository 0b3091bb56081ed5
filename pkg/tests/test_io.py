import json

import numpy as np
import pytest
from PIL import Image

from diverse_latents.io_formats import (
    BadMagicError,
    CountMismatchError,
    DiversityReport,
    TruncatedFileError,
    image_channel_means,
    load_labels_csv,
    load_manifest,
    pixel_l2_provider,
    read_latents,
    read_report,
    write_latents,
    write_report,
    write_report_csv,
)
from diverse_latents.tensors import LatentShape, LatentTensor, SeededStream


def random_batch(seed, count=3, shape=LatentShape(2, 4, 4)):
    stream = SeededStream(seed)
    return [LatentTensor(stream.draw(shape)) for _ in range(count)]


class TestLatentFiles:
    def test_round_trip_is_bit_identical(self, tmp_path):
        batch = random_batch(0)
        fingerprint = bytes(range(32))
        path = write_latents(tmp_path / "batch.dlt", batch, fingerprint=fingerprint)
        header, loaded = read_latents(path)
        assert header.fingerprint == fingerprint
        assert header.batch_size == 3
        assert header.shape == LatentShape(2, 4, 4)
        for a, b in zip(batch, loaded):
            assert np.array_equal(a.array, b.array)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.dlt"
        good = write_latents(tmp_path / "good.dlt", random_batch(1), sidecar=False)
        path.write_bytes(b"NOPE" + good.read_bytes()[4:])
        with pytest.raises(BadMagicError):
            read_latents(path)

    def test_truncated_payload(self, tmp_path):
        good = write_latents(tmp_path / "good.dlt", random_batch(2), sidecar=False)
        data = good.read_bytes()
        (tmp_path / "trunc.dlt").write_bytes(data[:-5])
        with pytest.raises(TruncatedFileError):
            read_latents(tmp_path / "trunc.dlt")

    def test_truncated_header(self, tmp_path):
        (tmp_path / "stub.dlt").write_bytes(b"DLT1\x01")
        with pytest.raises(TruncatedFileError):
            read_latents(tmp_path / "stub.dlt")

    def test_trailing_bytes(self, tmp_path):
        good = write_latents(tmp_path / "good.dlt", random_batch(3), sidecar=False)
        (tmp_path / "fat.dlt").write_bytes(good.read_bytes() + b"\x00\x00")
        with pytest.raises(CountMismatchError):
            read_latents(tmp_path / "fat.dlt")

    def test_sidecar_interchange_layout(self, tmp_path):
        batch = random_batch(4, count=2, shape=LatentShape(4, 64, 64))
        path = write_latents(tmp_path / "batch.dlt", batch)
        sidecar = path.with_suffix(".npy")
        raw = sidecar.read_bytes()
        assert raw[:8] == b"\x93NUMPY\x01\x00"
        header_len = int.from_bytes(raw[8:10], "little")
        header = raw[10:10 + header_len].decode("latin1")
        assert "'descr': '<f4'" in header
        assert "(2, 4, 64, 64)" in header
        payload = raw[10 + header_len:]
        assert len(payload) == 131072  # 2*4*64*64 float32 values
        arr = np.load(sidecar)
        assert np.array_equal(arr, np.stack([t.array for t in batch]))


def solid_image(path, color, size=(16, 16)):
    Image.new("RGB", size, color).save(path)
    return str(path)


class TestImageChannelMeans:
    def test_solid_red(self, tmp_path):
        means = image_channel_means(solid_image(tmp_path / "red.png", (255, 0, 0)))
        assert (means.r, means.g, means.b) == (255.0, 0.0, 0.0)

    def test_two_pixel_average(self, tmp_path):
        img = Image.new("RGB", (2, 1))
        img.putpixel((0, 0), (255, 0, 0))
        img.putpixel((1, 0), (0, 0, 255))
        img.save(tmp_path / "mix.png")
        means = image_channel_means(tmp_path / "mix.png")
        assert (means.r, means.g, means.b) == (127.5, 0.0, 127.5)

    def test_alpha_ignored(self, tmp_path):
        Image.new("RGBA", (4, 4), (10, 20, 30, 5)).save(tmp_path / "rgba.png")
        means = image_channel_means(tmp_path / "rgba.png")
        assert (means.r, means.g, means.b) == (10.0, 20.0, 30.0)

    def test_grayscale_broadcast(self, tmp_path):
        Image.new("L", (4, 4), 77).save(tmp_path / "gray.png")
        means = image_channel_means(tmp_path / "gray.png")
        assert means.r == means.g == means.b == 77.0

    def test_matches_pixel_loop_oracle(self, tmp_path):
        rng = np.random.default_rng(5)
        arr = rng.integers(0, 256, size=(7, 5, 3), dtype=np.uint8)
        Image.fromarray(arr, "RGB").save(tmp_path / "rand.png")
        totals = [0, 0, 0]
        for y in range(arr.shape[0]):
            for x in range(arr.shape[1]):
                for ch in range(3):
                    totals[ch] += int(arr[y, x, ch])
        n = arr.shape[0] * arr.shape[1]
        means = image_channel_means(tmp_path / "rand.png")
        assert means.r == pytest.approx(totals[0] / n, abs=1e-12)
        assert means.g == pytest.approx(totals[1] / n, abs=1e-12)
        assert means.b == pytest.approx(totals[2] / n, abs=1e-12)

    def test_undecodable_file(self, tmp_path):
        (tmp_path / "junk.png").write_bytes(b"not an image")
        with pytest.raises(ValueError, match="cannot decode"):
            image_channel_means(tmp_path / "junk.png")


class TestPixelProvider:
    def test_identical_images_give_zero(self, tmp_path):
        a = solid_image(tmp_path / "a.png", (10, 200, 30))
        b = solid_image(tmp_path / "b.png", (10, 200, 30))
        assert pixel_l2_provider()(a, b) == 0.0

    def test_symmetric_and_positive(self, tmp_path):
        a = solid_image(tmp_path / "a.png", (255, 0, 0))
        b = solid_image(tmp_path / "b.png", (0, 0, 255))
        d = pixel_l2_provider()
        assert d(a, b) == d(b, a) > 0


class TestManifest:
    def write_manifest(self, tmp_path, doc):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        return path

    def test_round_trip(self, tmp_path):
        files = [solid_image(tmp_path / f"{i}.png", (i, i, i)) for i in range(4)]
        doc = {
            "batches": [
                {"id": "b1", "items": files[:2], "prompt": "rose"},
                {"id": "b2", "items": files[2:], "strategy": "cap"},
            ]
        }
        manifest = load_manifest(self.write_manifest(tmp_path, doc))
        assert [b.id for b in manifest.batches] == ["b1", "b2"]
        assert manifest.batches[0].prompt == "rose"
        assert manifest.batches[1].strategy == "cap"

    def test_empty_manifest_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="no batches"):
            load_manifest(self.write_manifest(tmp_path, {"batches": []}))

    def test_duplicate_ids_rejected(self, tmp_path):
        f = solid_image(tmp_path / "x.png", (1, 2, 3))
        doc = {"batches": [{"id": "b", "items": [f]}, {"id": "b", "items": [f]}]}
        with pytest.raises(ValueError, match="duplicate"):
            load_manifest(self.write_manifest(tmp_path, doc))

    def test_missing_file_named(self, tmp_path):
        doc = {"batches": [{"id": "b", "items": ["does-not-exist.png"]}]}
        with pytest.raises(ValueError, match="does-not-exist.png"):
            load_manifest(self.write_manifest(tmp_path, doc))

    def test_relative_paths_resolve_against_manifest(self, tmp_path):
        solid_image(tmp_path / "rel.png", (0, 0, 0))
        doc = {"batches": [{"id": "b", "items": ["rel.png"]}]}
        manifest = load_manifest(self.write_manifest(tmp_path, doc))
        assert manifest.batches[0].items[0] == str(tmp_path / "rel.png")


class TestReports:
    def test_json_round_trip(self, tmp_path):
        report = DiversityReport(
            config={"command": "analyze-color", "k_list": [1.0, 1.1]},
            metrics={"avg_K=1": {"value": 2.0, "half_width": 0.1, "n": 10}},
        )
        path = write_report(report, tmp_path / "report.json")
        assert read_report(path) == report

    def test_json_keys_sorted(self, tmp_path):
        report = DiversityReport(metrics={"z": {"value": 1}, "a": {"value": 2}})
        text = write_report(report, tmp_path / "r.json").read_text()
        assert text.index('"a"') < text.index('"z"')

    def test_csv_columns(self, tmp_path):
        report = DiversityReport(metrics={"m": {"value": 0.5, "half_width": 0.01, "n": 4}})
        lines = write_report_csv(report, tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "metric,value,half_width,n"
        assert lines[1] == "m,0.5,0.01,4"


class TestLabelsCsv:
    def test_valid_file(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text(
            "batch_id,image_id,gender,ethnicity\n"
            "b1,i1,male,Black\n"
            "b1,i2,female,Asian\n"
            "b2,i3,male,Hispanic\n"
        )
        labels = load_labels_csv(path)
        assert set(labels.batches) == {"b1", "b2"}
        assert labels.batches["b1"] == [("male", "Black"), ("female", "Asian")]

    def test_unknown_value_names_row(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text(
            "batch_id,image_id,gender,ethnicity\n"
            "b1,i1,male,Black\n"
            "b1,i2,male,Klingon\n"
        )
        with pytest.raises(ValueError, match=r"labels\.csv:3"):
            load_labels_csv(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            load_labels_csv(path)
