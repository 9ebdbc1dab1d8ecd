#!/usr/bin/env python3
"""Measure pipeline latency and throughput across hops and link transports.

Each cell is one paced run against the emulator at 512 Hz / 192 channels.
Use --duration 60 to reproduce the full-length realtime numbers."""

import argparse
import sys
import tempfile
from pathlib import Path

from emgpipe.bridge import BridgeConfig
from emgpipe.emulator import EmulatorConfig, EmulatorServer
from emgpipe.nn import random_reference_model, save_model
from emgpipe.runtime import PipelineConfig, run_pipeline


def _one_run(model_path: str, hop: int, transport: str, duration: float, seed: int):
    script = [(k % 7, 1.0) for k in range(int(duration) + 6)]
    with EmulatorServer(
        EmulatorConfig(listen=("127.0.0.1", 0), seed=seed), script=script
    ) as srv:
        cfg = PipelineConfig(
            bridge=BridgeConfig(endpoint=srv.endpoint, hop=hop),
            model_path=model_path,
            transport=transport,
            duration_s=duration,
        )
        _, report = run_pipeline(cfg)
    return report


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=10.0, help="seconds per run")
    ap.add_argument("--hops", type=int, nargs="+", default=[10, 20])
    ap.add_argument("--transports", nargs="+", default=["inproc", "socket"])
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    print(f"{'hop':>4} {'transport':>9} {'windows':>8} {'thr/s':>7} {'drops':>6} "
          f"{'fill p95':>9} {'xfer p95':>9} {'infer p95':>10} {'e2e p95':>9}")
    with tempfile.TemporaryDirectory() as tmp:
        model_path = str(Path(tmp) / "ref.nemw")
        save_model(random_reference_model(args.seed), model_path)
        for hop in args.hops:
            for transport in args.transports:
                r = _one_run(model_path, hop, transport, args.duration, args.seed)

                def p95(stats, width):
                    return f"{stats.p95_ms:{width}.2f}" if stats.count else "n/a".rjust(width)

                print(f"{hop:>4} {transport:>9} {r.window_count:>8} "
                      f"{r.throughput_wps:>7.2f} {r.drop_count:>6} "
                      f"{p95(r.fill, 9)} {p95(r.transfer, 9)} "
                      f"{p95(r.inference, 10)} {p95(r.end_to_end, 9)}")
    print("\ne2e is capture-to-prediction; the socket transport does not carry "
          "capture timestamps, so fill and e2e are n/a there.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
