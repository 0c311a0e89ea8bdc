#!/usr/bin/env python3
"""Convert the digit dumps shipped in the npm `mnist` package (v1.1.0) to IDX.

The package bundles 10,000 MNIST digits as per-class JSON arrays of
pixel/255 values rounded to three decimals. This script restores the
byte values, splits every class 80/20 into train/test, shuffles each split
with a fixed seed and writes gzip-compressed IDX files.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 scripts/mnist_from_npm.py package/src/digits data/mnist
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path

ROWS = COLS = 28


def write_idx(out_dir, prefix, items):
    n = len(items)
    img = bytearray(struct.pack(">IIII", 0x00000803, n, ROWS, COLS))
    lbl = bytearray(struct.pack(">II", 0x00000801, n))
    for pixels, label in items:
        img.extend(pixels)
        lbl.append(label)
    with gzip.GzipFile(out_dir / f"{prefix}-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(img)
    with gzip.GzipFile(out_dir / f"{prefix}-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(lbl)


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    train, test = [], []
    for label in range(10):
        raw = json.loads((src / f"{label}.json").read_text())["data"]
        size = ROWS * COLS
        digits = [
            bytes(min(255, max(0, round(v * 255))) for v in raw[i : i + size])
            for i in range(0, len(raw), size)
        ]
        cut = int(len(digits) * 0.8)
        train += [(d, label) for d in digits[:cut]]
        test += [(d, label) for d in digits[cut:]]
    rng = random.Random(20240101)
    rng.shuffle(train)
    rng.shuffle(test)
    write_idx(out, "train", train)
    write_idx(out, "t10k", test)
    print(f"train={len(train)} test={len(test)}")


if __name__ == "__main__":
    main()
