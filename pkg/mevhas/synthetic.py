"""Deterministic synthetic clips for the desk corpus.

Every generator is a pure function of its arguments; the noise component comes
from a fixed internal generator state, so no seed is ever exposed.
"""
from fractions import Fraction
from typing import Callable, Dict

import numpy as np

from .media_io import LumaFrame, VideoSequence

_NOISE_STATE = 20240601
DEFAULT_FPS = Fraction(30)


def _noise(width: int, height: int, salt: int = 0) -> np.ndarray:
    rng = np.random.default_rng(_NOISE_STATE + salt)
    return rng.integers(-24, 25, size=(height, width))


def constant_frame(width: int, height: int, value: int = 128) -> LumaFrame:
    return LumaFrame(np.full((height, width), value, dtype=np.uint8))


def noise_frame(width: int, height: int, salt: int = 0) -> LumaFrame:
    return LumaFrame(np.clip(128 + 4 * _noise(width, height, salt), 0, 255).astype(np.uint8))


def texture_frame(width: int, height: int, shift: int = 0) -> LumaFrame:
    """Gradient, ringing stripes, a flat patch and a noisy patch, shifted right by `shift` pixels."""
    y, x = np.mgrid[0:height, 0:width]
    x = x - shift
    samples = 40.0 + 120.0 * (x % (2 * width)) / (2 * width) + 0.25 * y
    samples += 30.0 * np.sin(x / 3.0) * np.cos(y / 11.0)
    samples[: height // 2, (x[0] % 64 < 8)] = 230.0
    flat = (y >= height // 2) & (x % width < width // 4)
    samples[flat] = 90.0
    noisy = (y < height // 2) & (x % width >= width // 2)
    samples[noisy] += _noise(width, height)[noisy]
    return LumaFrame(np.clip(np.rint(samples), 0, 255).astype(np.uint8))


def constant_clip(width: int, height: int, frames: int = 1, value: int = 128, fps=DEFAULT_FPS) -> VideoSequence:
    return VideoSequence([constant_frame(width, height, value)] * frames, fps)


def static_texture_clip(width: int, height: int, frames: int = 1, fps=DEFAULT_FPS) -> VideoSequence:
    frame = texture_frame(width, height)
    return VideoSequence([frame] * frames, fps)


def moving_texture_clip(width: int, height: int, frames: int = 2, step: int = 4, fps=DEFAULT_FPS) -> VideoSequence:
    return VideoSequence([texture_frame(width, height, index * step) for index in range(frames)], fps)


CLIP_KINDS: Dict[str, Callable[..., VideoSequence]] = {
    "constant": constant_clip,
    "static": static_texture_clip,
    "moving": moving_texture_clip,
}


def make_clip(kind: str, width: int, height: int, frames: int = 1) -> VideoSequence:
    try:
        factory = CLIP_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown clip kind '{kind}', expected one of {sorted(CLIP_KINDS)}") from None
    return factory(width, height, frames=frames)
