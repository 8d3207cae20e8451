import pytest

from statescope import synth
from statescope.store import SessionStore


def make_vision_session(seed=0, windows_per_state=12, window_ms=200, noise_scale=1.0,
                        session_id=None):
    device = synth.vision_kit_fixture()
    script = synth.vision_kit_script(windows_per_state=windows_per_state, window_ms=window_ms,
                                     cycles=3)
    return synth.simulate(
        device, script, window_ms=window_ms, seed=seed,
        params=synth.SimulationParams(noise_scale=noise_scale),
        session_id=session_id,
    )


@pytest.fixture
def store(tmp_path):
    return SessionStore(tmp_path / "data")


@pytest.fixture
def vision_session():
    return make_vision_session(seed=0, session_id="vision-0")
