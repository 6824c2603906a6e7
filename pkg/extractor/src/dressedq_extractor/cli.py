"""Command-line wrapper: walk an image tree, write features.csv + manifest.json.

Exit codes follow the dressedq CLI conventions: 0 success, 2 usage error,
1 runtime error, with failures printed to stderr as ``error [stage]: msg``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dressedq-extract",
        description="Extract CNN features from a class-labeled image tree "
                    "into the dressedq feature-file format.")
    parser.add_argument("--images", required=True,
                        help="directory holding one subfolder per class")
    parser.add_argument("--backbone", required=True,
                        help="resnet18/34/50/101/152 or inception_v3")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--batch", type=int, default=16,
                        help="inference batch size")
    parser.add_argument("--device", default="auto",
                        choices=("auto", "cpu", "cuda"))
    parser.add_argument("--no-pretrained", action="store_true",
                        help="use seeded random backbone weights instead of "
                             "downloading pretrained ones (offline runs)")
    parser.add_argument("--seed", type=int, default=0,
                        help="weight seed for --no-pretrained")
    return parser


def run(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    from .extract import ExtractorConfig, extract_features, write_outputs

    try:
        config = ExtractorConfig(image_root=args.images,
                                 backbone=args.backbone,
                                 batch_size=args.batch, device=args.device,
                                 pretrained=not args.no_pretrained,
                                 seed=args.seed)
    except ValueError as e:
        print(f"error [usage]: {e}", file=sys.stderr)
        return 2
    try:
        manifest, records, rejects = extract_features(config)
    except (ValueError, OSError, RuntimeError) as e:
        print(f"error [extract]: {e}", file=sys.stderr)
        return 1
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_outputs(manifest, records, out / "features.csv",
                      out / "manifest.json")
    except (ValueError, OSError) as e:
        print(f"error [write]: {e}", file=sys.stderr)
        return 1
    suffix = f" ({len(rejects)} rejected)" if rejects else ""
    print(f"wrote {len(records)} records of dimension "
          f"{manifest['feature_dim']} to {out}{suffix}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
