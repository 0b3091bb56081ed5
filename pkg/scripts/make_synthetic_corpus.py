#!/usr/bin/env python3
"""Generate a synthetic image corpus, manifest and labels CSV for CLI demos.

Writes solid-color PNG batches plus a `manifest.json` and a `labels.csv`
under the output directory, so `divlat analyze-color`, `divlat pairwise`
and `divlat coverage` can run end to end without any external data.
"""

import argparse
import json
import random
from pathlib import Path

from PIL import Image


GENDERS = ("male", "female")
ETHNICITIES = ("Black", "Asian", "Hispanic", "White-or-MiddleEastern")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--batches", type=int, default=20)
    parser.add_argument("--batch-size", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)

    batches = []
    label_rows = ["batch_id,image_id,gender,ethnicity"]
    for b in range(args.batches):
        items = []
        for i in range(args.batch_size):
            color = tuple(rng.randrange(256) for _ in range(3))
            path = out / "images" / f"b{b}_i{i}.png"
            Image.new("RGB", (32, 32), color).save(path)
            items.append(str(path.relative_to(out)))
            label_rows.append(
                f"b{b},b{b}_i{i},{rng.choice(GENDERS)},{rng.choice(ETHNICITIES)}"
            )
        batches.append({"id": f"b{b}", "items": items, "prompt": "synthetic"})

    (out / "manifest.json").write_text(json.dumps({"batches": batches}, indent=2))
    (out / "labels.csv").write_text("\n".join(label_rows) + "\n")
    print(f"wrote {args.batches} batches under {out}")


if __name__ == "__main__":
    main()
