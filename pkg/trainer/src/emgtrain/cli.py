"""Command line: train on a directory of recording CSVs and write NEMW."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import build_dataset
from .export import export_weights
from .train import TrainConfig, train_model


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="emgtrain", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    t = sub.add_parser("train", help="train the gesture classifier and export weights")
    t.add_argument("--data", type=Path, required=True, help="directory of recording CSVs")
    t.add_argument("--out", type=Path, required=True, help="output NEMW path")
    t.add_argument("--epochs", type=int, default=25)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--val-fraction", type=float, default=0.2)
    args = ap.parse_args(argv)

    paths = sorted(args.data.glob("*.csv"))
    if not paths:
        print(f"no .csv recordings in {args.data}", file=sys.stderr)
        return 2
    cfg = TrainConfig(
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        val_fraction=args.val_fraction,
    )
    ds = build_dataset(paths, cfg)
    print(f"{len(paths)} recordings -> {len(ds)} windows "
          f"({len(ds.train_idx)} train / {len(ds.val_idx)} val)")
    result = train_model(ds, cfg)
    export_weights(result, args.out)
    meta = {
        "recordings": [p.name for p in paths],
        "windows": len(ds),
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "batch_size": cfg.batch_size,
        "learning_rate": cfg.learning_rate,
        "val_fraction": cfg.val_fraction,
        "val_accuracy": result.val_accuracy,
        "final_loss": result.final_loss,
    }
    meta_path = args.out.with_suffix(".json")
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    print(f"val accuracy {result.val_accuracy:.4f}")
    print(f"wrote {args.out} (+ {meta_path.name})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
