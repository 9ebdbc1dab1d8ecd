"""Trainer acceptance gate: desk-scale accuracy targets, full-pipeline replay
of a held-out session, container size budget, and train/deploy agreement.
One [ACCEPTANCE] PASS/FAIL line per criterion."""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from emgpipe.bridge import BridgeConfig
from emgpipe.emulator import EmulatorConfig, EmulatorServer, write_recording
from emgpipe.nn import infer, load_model, quantize_model, save_model
from emgpipe.runtime import PipelineConfig, run_pipeline
from emgtrain import TrainConfig, build_dataset, export_weights, train_model

REPS = 8
CLASS_SECONDS = 7.0


def _verdict(criterion: str, ok: bool, detail: str) -> None:
    print(f"[ACCEPTANCE] {criterion}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    base = tmp_path_factory.mktemp("secondary")
    data = base / "data"
    data.mkdir()
    paths = []
    for rep in range(REPS):
        p = data / f"rep{rep}.csv"
        write_recording(p, [(k, CLASS_SECONDS) for k in range(7)], seed=100 + rep)
        paths.append(p)

    cfg = TrainConfig(epochs=2, seed=0)
    t0 = time.monotonic()
    ds = build_dataset(paths, cfg)
    result = train_model(ds, cfg)
    train_seconds = time.monotonic() - t0

    model_path = base / "model.nemw"
    export_weights(result, model_path)
    return SimpleNamespace(
        ds=ds,
        result=result,
        train_seconds=train_seconds,
        model_path=model_path,
        base=base,
    )


def test_validation_accuracy(trained):
    acc = trained.result.val_accuracy
    secs = trained.train_seconds
    _verdict(
        "trainer validation accuracy",
        acc >= 0.95 and secs < 300.0,
        f"val accuracy {acc:.4f} (target >= 0.95) on {len(trained.ds)} windows, "
        f"dataset+train {secs:.0f} s (< 300)",
    )


def test_replay_held_out_session(trained):
    rec = write_recording(
        trained.base / "heldout.csv", [(k, CLASS_SECONDS) for k in range(7)], seed=999
    )
    cfg_srv = EmulatorConfig(listen=("127.0.0.1", 0), source="replay", pacing="unpaced")
    with EmulatorServer(cfg_srv, recording=rec) as srv:
        cfg = PipelineConfig(
            bridge=BridgeConfig(endpoint=srv.endpoint, queue_capacity=30_000),
            model_path=str(trained.model_path),
            duration_s=None,
            fetch_timeout=1.0,
        )
        log, report = run_pipeline(cfg)

    assert report.drop_count == 0
    hits = 0
    for row in log.rows:
        votes = np.bincount(rec.labels[row.first_seq : row.first_seq + 20], minlength=7)
        hits += int(row.label == np.argmax(votes))
    acc = hits / len(log.rows)
    _verdict(
        "held-out session replay",
        acc >= 0.90,
        f"window accuracy {acc:.4f} (target >= 0.90) over {len(log.rows)} windows "
        "through the full streaming pipeline",
    )


def test_int8_export_fits_budget(trained):
    model = load_model(trained.model_path)
    calib = [trained.ds.windows[i] for i in trained.ds.train_idx[:100]]
    qpath = trained.base / "model-int8.nemw"
    save_model(quantize_model(model, calib), qpath)
    size = qpath.stat().st_size
    _verdict(
        "int8 container size",
        size <= 32 * 1024,
        f"{size} bytes (budget 32768)",
    )


def test_train_deploy_agreement(trained):
    model = load_model(trained.model_path)
    val = trained.ds.val_windows
    deployed = np.array([infer(model, w).label for w in val])
    agree = float((deployed == trained.result.predict(val)).mean())
    _verdict(
        "train/deploy argmax agreement",
        agree >= 0.99,
        f"{agree:.4f} over {len(val)} validation windows (target >= 0.99)",
    )
