#!/usr/bin/env python3
"""Quantize a float model to int8 and report scales, file sizes, and
float-vs-int8 argmax agreement on synthetic windows."""

import argparse
import sys
import tempfile
from pathlib import Path

import numpy as np

from emgpipe.nn import (
    infer,
    infer_quant,
    load_model,
    quantize_model,
    random_reference_model,
    save_model,
)

WINDOW = 20


def _windows(n: int, seed: int, label_seed: int):
    from emgpipe.emulator import synth_block

    labels = np.random.default_rng(label_seed).integers(0, 7, size=n * WINDOW)
    frames = synth_block(labels, 0, seed=seed)
    return [frames[WINDOW * i : WINDOW * (i + 1)] for i in range(n)]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", type=Path, default=None, help="float NEMW file (default: random weights)")
    ap.add_argument("--calib", type=int, default=100, help="calibration window count")
    ap.add_argument("--test", type=int, default=1000, help="test window count")
    ap.add_argument("--seed", type=int, default=77)
    ap.add_argument("--out", type=Path, default=None, help="where to write the int8 NEMW file")
    args = ap.parse_args(argv)

    model = load_model(args.model) if args.model else random_reference_model(3)
    windows = _windows(args.calib + args.test, seed=args.seed, label_seed=2026)
    qmodel = quantize_model(model, windows[: args.calib])

    print(f"{'layer':<10} {'w_scale':>12} {'in_scale':>12} {'out_scale':>12}")
    for layer in qmodel.layers:
        if hasattr(layer, "w_scale"):
            print(f"{type(layer).__name__:<10} {layer.w_scale:>12.6g} "
                  f"{layer.in_scale:>12.6g} {layer.out_scale:>12.6g}")

    with tempfile.TemporaryDirectory() as tmp:
        f32 = Path(tmp) / "f32.nemw"
        i8 = args.out if args.out else Path(tmp) / "i8.nemw"
        save_model(model, f32)
        save_model(qmodel, i8)
        print(f"\nfloat container  {f32.stat().st_size:6d} bytes")
        print(f"int8 container   {i8.stat().st_size:6d} bytes")
        if args.out:
            print(f"int8 model written to {args.out}")

    test = windows[args.calib :]
    agree = sum(infer(model, w).label == infer_quant(qmodel, w).label for w in test)
    print(f"\nargmax agreement {agree}/{len(test)} = {agree / len(test):.4f} "
          f"(calibration on {args.calib} windows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
