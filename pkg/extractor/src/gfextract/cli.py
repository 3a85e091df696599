"""CLI: extract projected gradient features from a model checkpoint."""

from __future__ import annotations

import argparse
import sys

from .extract import extract, load_samples_jsonl
from .model import load_model
from .projection import ProjectionSpec


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gfextract")
    parser.add_argument("--model", required=True, help="torch checkpoint path")
    parser.add_argument("--samples", required=True, help="JSONL of prompt/response records")
    parser.add_argument("--seed", type=int, default=0, help="projection seed")
    parser.add_argument("--dim", type=int, default=64, help="projected dimension d")
    parser.add_argument("--out", required=True, help="output .gfs path")
    args = parser.parse_args(argv)
    try:
        model = load_model(args.model)
        samples = load_samples_jsonl(args.samples)
        spec = ProjectionSpec(
            seed=args.seed, source_dim=model.num_parameters(), target_dim=args.dim
        )
        extract(model, samples, spec, args.out)
        print(args.out)
        return 0
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
