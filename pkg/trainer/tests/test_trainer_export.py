"""Export contract: the written file is a valid deployment container and the
two sides agree on predictions."""

import numpy as np
import pytest
import torch

from emgpipe.errors import ShapeMismatch
from emgpipe.nn import Conv1d, Fc, Gap, MaxPool, Relu, Softmax, infer, load_model
from emgpipe.nn.model import parameter_count
from emgtrain import RefNet, TrainConfig, build_dataset, export_weights, train_model


@pytest.fixture(scope="module")
def trained(small_recordings):
    cfg = TrainConfig(epochs=3, seed=1)
    ds = build_dataset(small_recordings, cfg)
    return ds, train_model(ds, cfg)


def test_exported_file_loads_in_deployment(trained, tmp_path):
    _, result = trained
    path = tmp_path / "model.nemw"
    export_weights(result, path)
    model = load_model(path)
    assert parameter_count(model) == 2855
    kinds = [type(layer) for layer in model.layers]
    assert kinds == [Conv1d, Relu, Conv1d, Relu, Conv1d, Relu, MaxPool, Gap, Fc, Softmax]


def test_same_seed_exports_byte_identical_files(small_recordings, tmp_path):
    files = []
    for name in ("a.nemw", "b.nemw"):
        cfg = TrainConfig(epochs=2, seed=21)
        ds = build_dataset(small_recordings, cfg)
        result = train_model(ds, cfg)
        path = tmp_path / name
        export_weights(result, path)
        files.append(path.read_bytes())
    assert files[0] == files[1]


def test_train_deploy_argmax_agreement(trained, tmp_path):
    ds, result = trained
    path = tmp_path / "model.nemw"
    export_weights(result, path)
    model = load_model(path)
    deployed = np.array([infer(model, w).label for w in ds.val_windows])
    agreement = (deployed == result.predict(ds.val_windows)).mean()
    assert agreement >= 0.99


def test_folding_preserves_probabilities(trained, tmp_path):
    ds, result = trained
    path = tmp_path / "model.nemw"
    export_weights(result, path)
    model = load_model(path)
    result.net.eval()
    for w in ds.val_windows[:20]:
        got = infer(model, w).probabilities
        with torch.no_grad():
            x = torch.from_numpy(w.reshape(1, 1, -1).astype(np.float32))
            want = torch.softmax(result.net(x), dim=1).numpy()[0]
        assert np.abs(np.asarray(got) - want).max() < 1e-3


def test_wrong_head_shape_rejected(tmp_path):
    net = RefNet()
    net.fc = torch.nn.Linear(32, 5)
    with pytest.raises(ShapeMismatch):
        export_weights(net, tmp_path / "bad.nemw")
    net = RefNet()
    net.conv2 = torch.nn.Conv1d(16, 16, kernel_size=5)
    with pytest.raises(ShapeMismatch):
        export_weights(net, tmp_path / "bad2.nemw")
