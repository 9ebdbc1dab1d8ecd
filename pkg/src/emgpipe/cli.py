"""Command-line front end.

Subcommands: emulate (serve a synthetic or replayed stream), record (write a
labeled session CSV), run (stream -> windows -> inference, with log/report),
quantize (float NEMW -> int8 NEMW), evaluate (log vs cue schedule), bench
(pretty-print a latency report).
"""

from __future__ import annotations

import argparse
import json
import os
import time

from .bridge import BridgeConfig
from .emulator import (
    EmulatorConfig,
    EmulatorServer,
    load_recording,
    load_script,
    write_recording,
)
from .evaluate import DEFAULT_OFFSET_S, evaluate, load_schedule
from .nn import load_model, quantize_model, save_model
from .runtime import PipelineConfig, bench_report, load_log, load_report, run_pipeline


def _endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from None


def cmd_emulate(args) -> int:
    cfg = EmulatorConfig(
        listen=args.listen,
        source="replay" if args.replay else "synthetic",
        seed=args.seed,
        pacing="unpaced" if args.unpaced else "realtime",
    )
    script = load_script(args.script) if args.script else None
    recording = load_recording(args.replay) if args.replay else None
    with EmulatorServer(cfg, script=script, recording=recording) as server:
        host, port = server.endpoint
        print(f"listening on {host}:{port}", flush=True)
        try:
            while True:
                time.sleep(1.0)
        except KeyboardInterrupt:
            pass
    return 0


def cmd_record(args) -> int:
    rec = write_recording(args.out, load_script(args.script), args.seed)
    dur = len(rec) / rec.sample_rate_hz
    print(f"wrote {args.out}: {len(rec)} frames, {dur:.2f} s at {rec.sample_rate_hz} Hz")
    return 0


def cmd_run(args) -> int:
    bridge = BridgeConfig(endpoint=args.endpoint, hop=args.hop)
    cfg = PipelineConfig(
        bridge=bridge,
        model_path=args.model,
        mode="int8" if args.int8 else "float",
        transport=args.transport,
        duration_s=args.duration,
        log_path=args.log,
        report_path=args.report,
    )
    _, report = run_pipeline(cfg)
    print(bench_report(report))
    return 0


def cmd_quantize(args) -> int:
    model = load_model(args.model)
    rec = load_recording(args.calib)
    window_len = model.input_len // rec.channel_count
    n = len(rec) // window_len
    if n == 0:
        raise SystemExit("calibration recording is shorter than one window")
    windows = [rec.samples[i * window_len : (i + 1) * window_len] for i in range(n)]
    save_model(quantize_model(model, windows), args.out)
    print(
        f"quantized {args.model} ({os.path.getsize(args.model)} B) -> "
        f"{args.out} ({os.path.getsize(args.out)} B), calibrated on {n} windows"
    )
    return 0


def cmd_evaluate(args) -> int:
    result = evaluate(load_log(args.log), load_schedule(args.schedule, offset_s=args.offset))
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def cmd_bench(args) -> int:
    print(bench_report(load_report(args.report)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emgpipe", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("emulate", help="serve an emulated amplifier stream")
    e.add_argument("--listen", type=_endpoint, required=True, metavar="HOST:PORT")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--script", help="session script JSON (synthetic source)")
    src.add_argument("--replay", help="recording CSV to replay instead of synthesizing")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--unpaced", action="store_true", help="stream as fast as possible")
    e.set_defaults(func=cmd_emulate)

    r = sub.add_parser("record", help="synthesize a labeled session CSV")
    r.add_argument("--out", required=True)
    r.add_argument("--script", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_record)

    u = sub.add_parser("run", help="run the streaming inference pipeline")
    u.add_argument("--endpoint", type=_endpoint, required=True, metavar="HOST:PORT")
    u.add_argument("--model", required=True, help="NEMW weight file")
    u.add_argument("--int8", action="store_true", help="run the int8 path")
    u.add_argument("--hop", type=int, default=20, help="frames between windows")
    u.add_argument("--duration", type=float, default=60.0, help="seconds after first window")
    u.add_argument("--transport", choices=("inproc", "socket"), default="inproc")
    u.add_argument("--log", required=True, help="prediction log CSV to write")
    u.add_argument("--report", required=True, help="latency report JSON to write")
    u.set_defaults(func=cmd_run)

    q = sub.add_parser("quantize", help="quantize a float NEMW file to int8")
    q.add_argument("--model", required=True, help="float NEMW input")
    q.add_argument("--calib", required=True, help="recording CSV for activation ranges")
    q.add_argument("--out", required=True, help="int8 NEMW output")
    q.set_defaults(func=cmd_quantize)

    v = sub.add_parser("evaluate", help="score a prediction log against a cue schedule")
    v.add_argument("--log", required=True)
    v.add_argument("--schedule", required=True)
    v.add_argument("--offset", type=float, default=DEFAULT_OFFSET_S,
                   help="reaction delay added to each cue time")
    v.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="pretty-print a latency report")
    b.add_argument("--report", required=True)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
