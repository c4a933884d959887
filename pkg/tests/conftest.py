import numpy as np
import pytest

import config.settings as settings_module
from mevhas.codec import EncoderConfig
from mevhas.media_io import LumaFrame
from mevhas.synthetic import moving_texture_clip, texture_frame


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Run each test from its own tmp dir with fresh settings"""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("MEVHAS_OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setattr(settings_module, "_settings", None)
    yield
    settings_module._settings = None


@pytest.fixture
def fast_config():
    """Encoder config with a shallow BT/TT search"""
    return EncoderConfig(qp=32, max_mt_depth=1)


@pytest.fixture
def noise_frame():
    """Deterministic 64x64 noise frame"""
    rng = np.random.default_rng(7)
    return LumaFrame(rng.integers(0, 256, size=(64, 64), dtype=np.uint8))


@pytest.fixture
def textured_frame():
    """128x128 frame with flat, striped and noisy regions"""
    return texture_frame(128, 128)


@pytest.fixture
def moving_clip():
    """Two-frame 64x64 moving texture"""
    return moving_texture_clip(64, 64, frames=2)
