#!/usr/bin/env python3
"""Convert a changedetection.net sequence or category to the netpbm layout
read by `prost`.

    input/in000001.jpg        -> input/in000001.ppm
    groundtruth/gt000001.png  -> groundtruth/gt000001.pgm
    temporalROI.txt           -> copied

Usage: convert_cdnet.py SRC DST

SRC may be a single sequence (containing input/) or a category whose
subdirectories are sequences. Requires Pillow.
"""

import argparse
import shutil
import sys
from pathlib import Path

from PIL import Image


def convert_dir(src: Path, dst: Path, mode: str, suffix: str) -> int:
    dst.mkdir(parents=True, exist_ok=True)
    count = 0
    for path in sorted(src.iterdir()):
        if path.suffix.lower() not in {".jpg", ".jpeg", ".png", ".bmp"}:
            continue
        with Image.open(path) as im:
            im.convert(mode).save(dst / (path.stem + suffix))
        count += 1
    return count


def convert_sequence(src: Path, dst: Path) -> None:
    frames = convert_dir(src / "input", dst / "input", "RGB", ".ppm")
    truths = 0
    if (src / "groundtruth").is_dir():
        truths = convert_dir(src / "groundtruth", dst / "groundtruth", "L", ".pgm")
    roi = src / "temporalROI.txt"
    if roi.is_file():
        shutil.copy(roi, dst / roi.name)
    print(f"{src.name}: {frames} frames, {truths} ground-truth masks", file=sys.stderr)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("src", type=Path)
    parser.add_argument("dst", type=Path)
    args = parser.parse_args()

    if (args.src / "input").is_dir():
        convert_sequence(args.src, args.dst)
        return 0
    sequences = [d for d in sorted(args.src.iterdir()) if (d / "input").is_dir()]
    if not sequences:
        print(f"error: no sequences under {args.src}", file=sys.stderr)
        return 1
    for seq in sequences:
        convert_sequence(seq, args.dst / seq.name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
