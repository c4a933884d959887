"""Quality, rate, time and complexity measurement.

BD metrics follow the classic Bjøntegaard recipe: fit log10(rate) as a cubic in
quality for both curves, integrate the gap over the shared quality interval
and convert the mean log difference to a percentage. A piecewise-cubic Hermite
fit integrated with the trapezoid rule is available as a cross-check.
"""
import logging
import math
from typing import Iterable, List, Literal, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import trapezoid
from scipy.interpolate import pchip_interpolate

from .codec import forward_dct
from .media_io import FrameGeometryError, LumaFrame, VideoSequence

logger = logging.getLogger(__name__)

PEAK = 255.0
# identical inputs have no finite PSNR
LOSSLESS = math.inf
MIN_CURVE_POINTS = 4
PCHIP_SAMPLES = 100
COMPLEXITY_BLOCK = 32

BdMethod = Literal["cubic", "pchip"]
Frames = Union[VideoSequence, Sequence[LumaFrame], LumaFrame]


class BdError(ValueError):
    """Curves cannot be compared with a Bjøntegaard delta."""


class UndefinedRatioError(ZeroDivisionError):
    """BDBR/BDT requested with zero time saving."""


class RdCurvePoint(BaseModel):
    """One operating point; `rate` is bits/s, seconds or a work count depending on the curve."""

    model_config = ConfigDict(frozen=True)

    rate: float = Field(gt=0)
    quality: float


class ComplexityFeatures(BaseModel):
    model_config = ConfigDict(frozen=True)

    E: float = Field(ge=0)
    h: float = Field(ge=0)


def is_lossless(value: float) -> bool:
    return math.isinf(value) and value > 0


def _as_frames(frames: Frames) -> List[LumaFrame]:
    if isinstance(frames, LumaFrame):
        return [frames]
    return list(frames)


def psnr_from_sse(sse: int, samples: int) -> float:
    if samples <= 0:
        raise ValueError("PSNR needs at least one sample")
    if sse == 0:
        return LOSSLESS
    return 10.0 * math.log10(PEAK * PEAK * samples / sse)


def sse_between(reference: Frames, distorted: Frames) -> Tuple[int, int]:
    """Summed squared luma error and sample count over all frame pairs."""
    reference, distorted = _as_frames(reference), _as_frames(distorted)
    if len(reference) != len(distorted):
        raise FrameGeometryError(f"frame counts differ: {len(reference)} vs {len(distorted)}")
    sse = samples = 0
    for index, (ref, dist) in enumerate(zip(reference, distorted)):
        if (ref.width, ref.height) != (dist.width, dist.height):
            raise FrameGeometryError(
                f"frame {index} is {ref.width}x{ref.height} in the reference "
                f"but {dist.width}x{dist.height} in the distorted input"
            )
        diff = ref.samples.astype(np.int64) - dist.samples.astype(np.int64)
        sse += int(np.sum(diff * diff))
        samples += diff.size
    return sse, samples


def psnr(reference: Frames, distorted: Frames) -> float:
    """Luma PSNR over every sample of every frame; LOSSLESS for identical inputs."""
    return psnr_from_sse(*sse_between(reference, distorted))


def _parse_points(points, name: str) -> List[RdCurvePoint]:
    parsed = [p if isinstance(p, RdCurvePoint) else RdCurvePoint(rate=p[0], quality=p[1]) for p in points]
    if len(parsed) < MIN_CURVE_POINTS:
        raise BdError(f"{name} curve needs at least {MIN_CURVE_POINTS} points, got {len(parsed)}")
    if not all(math.isfinite(p.quality) for p in parsed):
        raise BdError(f"{name} curve has a lossless or non-finite quality point")
    return parsed


def _curve(points: Iterable[Union[RdCurvePoint, Tuple[float, float]]], name: str) -> Tuple[np.ndarray, np.ndarray]:
    """Rate curve sorted by rate; both rate and quality must rise strictly."""
    parsed = sorted(_parse_points(points, name), key=lambda p: p.rate)
    rates = np.array([p.rate for p in parsed], dtype=np.float64)
    qualities = np.array([p.quality for p in parsed], dtype=np.float64)
    if np.any(np.diff(rates) <= 0):
        raise BdError(f"{name} curve repeats a rate")
    if np.any(np.diff(qualities) <= 0):
        raise BdError(f"{name} curve quality is not strictly increasing with rate")
    return rates, qualities


def _cost_curve(points: Iterable[Union[RdCurvePoint, Tuple[float, float]]], name: str) -> Tuple[np.ndarray, np.ndarray]:
    """Time or work curve sorted by quality; the cost need not be monotone."""
    parsed = sorted(_parse_points(points, name), key=lambda p: p.quality)
    costs = np.array([p.rate for p in parsed], dtype=np.float64)
    qualities = np.array([p.quality for p in parsed], dtype=np.float64)
    if np.any(np.diff(qualities) <= 0):
        raise BdError(f"{name} curve repeats a quality")
    return costs, qualities


def _mean_gap(x_anchor, y_anchor, x_test, y_test, method: BdMethod) -> float:
    """Mean of (test - anchor) of y as a function of x over the shared x interval."""
    low = max(x_anchor.min(), x_test.min())
    high = min(x_anchor.max(), x_test.max())
    if high <= low:
        raise BdError(f"curves do not overlap (shared interval [{low:.4f}, {high:.4f}])")

    if method == "cubic":
        integrals = []
        for x, y in ((x_anchor, y_anchor), (x_test, y_test)):
            antiderivative = np.polyint(np.polyfit(x, y, 3))
            integrals.append(np.polyval(antiderivative, high) - np.polyval(antiderivative, low))
        return float((integrals[1] - integrals[0]) / (high - low))
    if method == "pchip":
        samples = np.linspace(low, high, num=PCHIP_SAMPLES)
        integrals = []
        for x, y in ((x_anchor, y_anchor), (x_test, y_test)):
            order = np.argsort(x)
            integrals.append(trapezoid(pchip_interpolate(x[order], y[order], samples), samples))
        return float((integrals[1] - integrals[0]) / (high - low))
    raise ValueError(f"unknown BD method '{method}'")


def _log_delta(anchor, test, method: BdMethod, parse=_curve) -> float:
    anchor_rates, anchor_q = parse(anchor, "anchor")
    test_rates, test_q = parse(test, "test")
    return _mean_gap(anchor_q, np.log10(anchor_rates), test_q, np.log10(test_rates), method)


def bd_rate(anchor, test, method: BdMethod = "cubic") -> float:
    """Average extra rate (percent) the test curve needs at equal quality."""
    return (10.0 ** _log_delta(anchor, test, method) - 1.0) * 100.0


def bd_time(anchor, test, method: BdMethod = "cubic") -> float:
    """Average encoding time saved (percent) at equal quality; positive when the test is faster.

    log10(seconds) is fitted against quality, so times need not grow with quality.
    """
    return -(10.0 ** _log_delta(anchor, test, method, parse=_cost_curve) - 1.0) * 100.0


def bd_work(anchor, test, method: BdMethod = "cubic") -> float:
    """bd_time over mode-evaluation counts instead of seconds."""
    return bd_time(anchor, test, method)


def bd_psnr(anchor, test, method: BdMethod = "cubic") -> float:
    """Average quality gain (dB) of the test curve at equal rate."""
    anchor_rates, anchor_q = _curve(anchor, "anchor")
    test_rates, test_q = _curve(test, "test")
    return _mean_gap(np.log10(anchor_rates), anchor_q, np.log10(test_rates), test_q, method)


def efficiency_ratio(bdbr: float, bdt: float) -> float:
    if bdt == 0:
        raise UndefinedRatioError("BDBR/BDT is undefined when BDT is 0")
    return bdbr / bdt


def format_summary(bdt: float, bdbr: float) -> str:
    return f"BDT {bdt:.2f} | BDBR {bdbr:.2f} | BDBR/BDT {efficiency_ratio(bdbr, bdt):.2f}"


def _frequency_weights(block: int) -> np.ndarray:
    i = np.arange(block)[:, None]
    j = np.arange(block)[None, :]
    return (i + j) / (2.0 * (block - 1))


def frame_energy(frame: LumaFrame, block: int = COMPLEXITY_BLOCK) -> float:
    """Mean weighted AC energy over the frame's block x block tiles (edge-padded)."""
    samples = frame.samples.astype(np.float64)
    height, width = samples.shape
    pad_h, pad_w = -height % block, -width % block
    if pad_h or pad_w:
        samples = np.pad(samples, ((0, pad_h), (0, pad_w)), mode="edge")
    rows, cols = samples.shape[0] // block, samples.shape[1] // block
    tiles = samples.reshape(rows, block, cols, block).transpose(0, 2, 1, 3)
    # flat tiles must come out as exact zeros
    tiles = tiles - tiles.mean(axis=(-2, -1), keepdims=True)
    coeffs = np.abs(forward_dct(tiles))
    energy = (coeffs * _frequency_weights(block)).sum(axis=(-2, -1)) / (block * block - 1)
    return float(energy.mean())


def complexity_features(sequence: Frames, block: int = COMPLEXITY_BLOCK) -> ComplexityFeatures:
    frames = _as_frames(sequence)
    if not frames:
        raise ValueError("complexity features need at least one frame")
    energies = np.array([frame_energy(frame, block) for frame in frames])
    temporal = float(np.abs(np.diff(energies)).mean()) if len(energies) > 1 else 0.0
    features = ComplexityFeatures(E=float(energies.mean()), h=temporal)
    logger.info(f"Complexity over {len(frames)} frame(s): E={features.E:.4f} h={features.h:.4f}")
    return features
