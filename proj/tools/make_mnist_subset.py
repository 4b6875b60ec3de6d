#!/usr/bin/env python3
"""Write a small MNIST subset as uncompressed IDX files.

The full MNIST archives are large and gzip-compressed. For desk-scale runs
this script extracts the 5,000-image MNIST sample (500 per digit) that ships
inside the mlxtend wheel and writes it as

    <out>/train-images-idx3-ubyte
    <out>/train-labels-idx1-ubyte

If you already have the official files, just gunzip them into a directory
and point --data-dir at it instead.

Usage:
    pip download --no-deps mlxtend -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist-5k
"""

import argparse
import gzip
import io
import pathlib
import struct
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel", type=pathlib.Path)
    ap.add_argument("out", type=pathlib.Path)
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as zf:
        raw = gzip.decompress(zf.read(MEMBER)).decode("ascii")

    images = bytearray()
    labels = bytearray()
    for line in io.StringIO(raw):
        fields = line.strip().split(",")
        if len(fields) != 785:
            continue
        images.extend(int(float(v)) for v in fields[:784])
        labels.append(int(float(fields[784])))

    count = len(labels)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "train-images-idx3-ubyte").write_bytes(
        struct.pack(">IIII", 0x803, count, 28, 28) + bytes(images))
    (args.out / "train-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x801, count) + bytes(labels))
    print(f"wrote {count} images to {args.out}")


if __name__ == "__main__":
    main()
