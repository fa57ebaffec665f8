#!/usr/bin/env python3
"""Export the 8x8 handwritten digits set into the raw-tensor dataset container.

Writes <out>/train and <out>/test, each holding `manifest`, `images`
(little-endian float32, N x 1 x 8 x 8, scaled to [0, 1]) and `labels` (uint8).
"""
import argparse
import json
import pathlib

import numpy as np
from sklearn.datasets import load_digits


def write_split(root, images, labels, name):
    root.mkdir(parents=True, exist_ok=True)
    images.astype("<f4").tofile(root / "images")
    labels.astype(np.uint8).tofile(root / "labels")
    manifest = {
        "format": "xbarsim-dataset",
        "version": 1,
        "name": name,
        "count": int(images.shape[0]),
        "sample_shape": list(images.shape[1:]),
        "num_classes": 10,
    }
    (root / "manifest").write_text(json.dumps(manifest, indent=2) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/digits")
    ap.add_argument("--train", type=int, default=1437)
    args = ap.parse_args()
    digits = load_digits()
    x = (digits.images / 16.0).reshape(-1, 1, 8, 8)
    y = digits.target
    out = pathlib.Path(args.out)
    write_split(out / "train", x[: args.train], y[: args.train], "digits8x8-train")
    write_split(out / "test", x[args.train :], y[args.train :], "digits8x8-test")


if __name__ == "__main__":
    main()
