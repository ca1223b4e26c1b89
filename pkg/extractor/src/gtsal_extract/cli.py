"""CLI: export dense feature tensors and object-proposal masks."""

from __future__ import annotations

import argparse
import sys

from .features import MODELS, ExportJob, ModelLoadError, export_features
from .proposals import export_proposals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtsal-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    feat = sub.add_parser("features", help="export FTNS feature tensors")
    feat.add_argument("images", nargs="+")
    feat.add_argument("--out-dir", required=True)
    feat.add_argument("--model", choices=MODELS, default="vgg16-conv5")
    feat.add_argument("--weights", help="local VGG16 state-dict path")

    prop = sub.add_parser("proposals", help="export object-proposal masks")
    prop.add_argument("images", nargs="+")
    prop.add_argument("--out-dir", required=True)
    prop.add_argument("--max-count", type=int, default=64)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "features":
            job = ExportJob(
                images=tuple(args.images),
                out_dir=args.out_dir,
                model=args.model,
                weights=args.weights,
            )
            for path in export_features(job):
                print(path)
        else:
            for manifest in export_proposals(args.images, args.out_dir, args.max_count):
                print(manifest)
        return 0
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
