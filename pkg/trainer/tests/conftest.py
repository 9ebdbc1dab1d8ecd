import numpy as np
import pytest

from emgpipe.emulator import write_recording


@pytest.fixture(scope="session")
def small_recordings(tmp_path_factory):
    """Two short labeled sessions covering all seven classes."""
    d = tmp_path_factory.mktemp("recordings")
    paths = []
    for i, seed in enumerate((5, 6)):
        p = d / f"rep{i}.csv"
        write_recording(p, [(k, 1.5) for k in range(7)], seed=seed)
        paths.append(p)
    return paths


@pytest.fixture
def class_windows():
    """One synthetic window per class plus a duplicate of class 0."""
    from emgpipe.emulator import synth_block

    labels = [0, 1, 2, 3, 4, 5, 6, 0]
    wins = np.stack(
        [synth_block(np.full(20, cls), 20 * i, seed=12) for i, cls in enumerate(labels)]
    )
    return wins, np.asarray(labels, dtype=np.int64)
