"""hear-bridge command line front-end."""

from __future__ import annotations

import argparse
import sys

from .export import BridgeConfig, BridgeError, export_task


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hear-bridge",
        description="Export embeddings from a challenge-API model to .hemb files.",
    )
    parser.add_argument("--model", required=True,
                        help="Importable module exposing the challenge API.")
    parser.add_argument("--weights", default=None, help="Model weights path.")
    parser.add_argument("--task", required=True, help="Task directory.")
    parser.add_argument("--sr", type=int, required=True,
                        help="Sample rate to read (must be declared by the task).")
    parser.add_argument("--out", required=True, help="Output directory.")
    parser.add_argument("--device", default=None, help="Device hint for the model.")
    parser.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = BridgeConfig(
        model_module=args.model,
        weights_path=args.weights,
        task_dir=args.task,
        sample_rate=args.sr,
        out_dir=args.out,
        device=args.device,
        batch_size=args.batch_size,
    )
    try:
        manifest = export_task(cfg)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{manifest['task']}: wrote manifest with {len(manifest['entries'])} entries")
    return 0


if __name__ == "__main__":
    sys.exit(main())
