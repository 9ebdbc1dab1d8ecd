import numpy as np
import pytest

from emgpipe.emulator import EmulatorConfig, EmulatorServer


@pytest.fixture
def unpaced_server():
    """Emulator streaming a fixed 7-class script as fast as the client reads."""
    script = [(k, 1.0) for k in range(7)]
    cfg = EmulatorConfig(listen=("127.0.0.1", 0), seed=1234, pacing="unpaced")
    with EmulatorServer(cfg, script=script) as srv:
        yield srv


@pytest.fixture
def rng():
    return np.random.default_rng(99)
