#!/usr/bin/env python3
"""Full desk demo: emulate a cued acquisition session, stream it through the
realtime pipeline, and score the prediction log against the cue schedule.

With no --model argument the reference architecture runs with random weights,
so accuracy is chance; point --model at a trained NEMW file for real numbers.
Artifacts (model, log, report, schedule) land in --outdir.
"""

import argparse
import json
import sys
from pathlib import Path

from emgpipe.bridge import BridgeConfig
from emgpipe.emulator import EmulatorConfig, EmulatorServer
from emgpipe.evaluate import Cue, CueSchedule, evaluate
from emgpipe.nn import random_reference_model, save_model
from emgpipe.runtime import PipelineConfig, bench_report, run_pipeline


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", type=Path, default=None, help="trained NEMW file")
    ap.add_argument("--int8", action="store_true", help="run the model quantized")
    ap.add_argument("--reps", type=int, default=2, help="cue repetitions per class")
    ap.add_argument("--cue-seconds", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--outdir", type=Path, default=Path("demo_out"))
    args = ap.parse_args(argv)

    args.outdir.mkdir(parents=True, exist_ok=True)
    model_path = args.model
    if model_path is None:
        model_path = args.outdir / "random.nemw"
        save_model(random_reference_model(args.seed), model_path)
        print("no --model given: using random weights (expect chance accuracy)")

    script = [(k, args.cue_seconds) for _ in range(args.reps) for k in range(7)]
    cues, t = [], 0.0
    for label, dur in script:
        cues.append(Cue(t, label))
        t += dur
    # emulated cues switch the signal instantly, so no human-response offset
    schedule = CueSchedule(tuple(cues), offset_s=0.0)
    (args.outdir / "schedule.json").write_text(
        json.dumps([{"time_s": c.time_s, "class": c.class_id} for c in cues], indent=2) + "\n"
    )

    with EmulatorServer(
        EmulatorConfig(listen=("127.0.0.1", 0), seed=args.seed), script=script
    ) as srv:
        print(f"emulator on {srv.endpoint[0]}:{srv.endpoint[1]}, "
              f"{len(script)} cues x {args.cue_seconds:.1f} s")
        cfg = PipelineConfig(
            bridge=BridgeConfig(endpoint=srv.endpoint),
            model_path=str(model_path),
            mode="int8" if args.int8 else "float",
            duration_s=None,  # run until the script ends
            log_path=str(args.outdir / "run.csv"),
            report_path=str(args.outdir / "report.json"),
        )
        log, report = run_pipeline(cfg)

    print()
    print(bench_report(report))
    result = evaluate(log, schedule)
    print()
    print(f"windows scored   {result.window_count}")
    print(f"accuracy         {result.accuracy:.4f}")
    print(f"per-class        {' '.join(f'{a:.2f}' for a in result.per_class_accuracy)}")
    print(f"artifacts in     {args.outdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
