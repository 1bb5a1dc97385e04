"""Command-line entry point.

Exit codes: 0 success, 2 bad invocation, 3 extraction failure.
"""

import argparse
import sys
from pathlib import Path

from .errors import ExtractionError
from .extract import (
    ExtractionJob,
    export_position_table,
    filename_tag,
    load_encoder,
    run_extraction,
)


def _parse_layers(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise ExtractionError(f"--layers must be comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jabberprobe-extract",
        description=(
            "Export per-layer hidden states of a pretrained encoder over a "
            "CoNLL-U corpus as JEMB files plus subword alignment records, "
            "and/or its absolute-position embedding table."
        ),
    )
    parser.add_argument("--model", required=True, help="checkpoint directory or hub id")
    parser.add_argument("--output-dir", required=True)
    parser.add_argument("--corpus", help="CoNLL-U file to embed")
    parser.add_argument("--split", help="split tag used in output file names")
    parser.add_argument(
        "--layers",
        default="",
        help="comma-separated hidden layers; default: every fourth, always with 0",
    )
    parser.add_argument(
        "--positions",
        action="store_true",
        help="also export the absolute-position embedding table",
    )
    parser.add_argument("--name", default="", help="file tag override for the model")
    parser.add_argument("--batch-size", type=int, default=8)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not args.corpus and not args.positions:
        print("error: nothing to do: pass --corpus and/or --positions", file=sys.stderr)
        return 2
    if args.corpus and not args.split:
        print("error: --corpus requires --split", file=sys.stderr)
        return 2
    try:
        layers = _parse_layers(args.layers)
        tokenizer, model = load_encoder(args.model)
        if args.corpus:
            job = ExtractionJob(
                model_ref=args.model,
                corpus=Path(args.corpus),
                split=args.split,
                output_dir=Path(args.output_dir),
                layers=layers,
                name=args.name,
                batch_size=args.batch_size,
            )
            result = run_extraction(job, tokenizer, model)
            for path in result.jemb_paths:
                print(f"wrote {path}")
            print(
                f"wrote {result.alignment_path} "
                f"({result.n_ok} sentences, {result.n_removed} removed)"
            )
        if args.positions:
            tag = args.name or filename_tag(args.model)
            path = export_position_table(model, tag, Path(args.output_dir))
            print(f"wrote {path}")
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
