"""Command-line entry point mirroring the alignment CLI's flag names.

Exit codes: 0 success, 1 input error, 2 numerical failure."""

from __future__ import annotations

import argparse
import sys

from .jobs import ExtractJob, extract_clip_embeddings, extract_diagram_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embexport",
                                     description="Export backbone features to .emb tables")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagrams", help="one vector per manifest diagram")
    p.add_argument("--manifest", required=True)
    p.add_argument("--media-root", required=True)
    p.add_argument("--backbone", default="resnet50")
    p.add_argument("--weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--out", required=True)

    p = sub.add_parser("clips", help="one vector per listed clip window")
    p.add_argument("--manifest", required=True)
    p.add_argument("--media-root", required=True)
    p.add_argument("--windows", required=True, help="JSON list of clip windows")
    p.add_argument("--backbone", default="twopath")
    p.add_argument("--weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractJob(
        manifest=args.manifest,
        media_root=args.media_root,
        modality="diagram" if args.command == "diagrams" else "clip",
        backbone=args.backbone,
        out=args.out,
        windows=getattr(args, "windows", None),
        weights=args.weights,
        seed=args.seed,
        batch_size=getattr(args, "batch_size", 8),
    )
    try:
        if job.modality == "diagram":
            entries = extract_diagram_embeddings(job)
        else:
            entries = extract_clip_embeddings(job)
    except (FileNotFoundError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FloatingPointError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    print(f"wrote {len(entries)} vectors to {job.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
