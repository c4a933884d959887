import numpy as np
import pytest

from mevhas.synthetic import CLIP_KINDS, constant_clip, make_clip, moving_texture_clip, noise_frame, texture_frame


class TestSynthetic:
    """Test the synthetic clip generators"""

    def test_repeatable(self):
        """Test generators are pure functions of their arguments"""
        assert texture_frame(64, 32, 4) == texture_frame(64, 32, 4)
        assert noise_frame(16, 16) == noise_frame(16, 16)
        assert noise_frame(16, 16) != noise_frame(16, 16, salt=1)

    def test_constant(self):
        """Test constant clips hold one value"""
        clip = constant_clip(32, 16, frames=3, value=77)
        assert len(clip) == 3
        assert all(np.all(frame.samples == 77) for frame in clip)

    def test_moving_texture_shifts(self):
        """Test consecutive moving frames differ"""
        clip = moving_texture_clip(64, 64, frames=3, step=4)
        assert (clip.width, clip.height) == (64, 64)
        assert clip.frames[0] != clip.frames[1]

    def test_texture_has_flat_and_busy_regions(self):
        """Test texture frames mix flat and varying content"""
        samples = texture_frame(128, 128).samples
        assert np.all(samples[96:, 0:16] == 90)
        assert samples[:64, 64:].std() > 10

    @pytest.mark.parametrize("kind", sorted(CLIP_KINDS))
    def test_make_clip(self, kind):
        """Test every named kind builds"""
        clip = make_clip(kind, 32, 32, frames=2)
        assert (clip.width, clip.height, len(clip)) == (32, 32, 2)

    def test_unknown_kind(self):
        """Test unknown kinds are rejected"""
        with pytest.raises(ValueError, match="unknown clip kind"):
            make_clip("fractal", 32, 32)
