"""Raw video ingest: YUV4MPEG2 reading/writing and luma-plane resampling.

Only the luma plane survives ingest; chroma planes are skipped.
"""
import logging
from fractions import Fraction
from typing import BinaryIO, Iterable, List, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

Y4M_MAGIC = b"YUV4MPEG2"
FRAME_MAGIC = b"FRAME"
MIN_DIMENSION = 8

# chroma tag -> (horizontal subsampling, vertical subsampling); None for 4:0:0
SUPPORTED_CHROMA = {
    "420": (2, 2),
    "420jpeg": (2, 2),
    "420paldv": (2, 2),
    "420mpeg2": (2, 2),
    "mono": None,
}


class Y4MFormatError(ValueError):
    """Malformed or unsupported YUV4MPEG2 content."""


class FrameGeometryError(ValueError):
    """Frame dimensions violate a resampling precondition."""


class LumaFrame:
    """One 8-bit luma plane, stored row-major as a read-only (height, width) array."""

    __slots__ = ("_samples",)

    def __init__(self, samples: np.ndarray):
        samples = np.asarray(samples)
        if samples.ndim != 2:
            raise FrameGeometryError(f"luma samples must be 2-D, got {samples.ndim}-D")
        height, width = samples.shape
        if width < MIN_DIMENSION or height < MIN_DIMENSION:
            raise FrameGeometryError(
                f"frame must be at least {MIN_DIMENSION}x{MIN_DIMENSION}, got {width}x{height}"
            )
        if samples.dtype != np.uint8:
            if samples.size and (samples.min() < 0 or samples.max() > 255):
                raise FrameGeometryError("luma samples must lie in [0, 255]")
            samples = samples.astype(np.uint8)
        samples = np.array(samples, dtype=np.uint8, copy=True)
        samples.setflags(write=False)
        self._samples = samples

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "LumaFrame":
        if len(data) != width * height:
            raise FrameGeometryError(
                f"expected {width * height} luma bytes for {width}x{height}, got {len(data)}"
            )
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width))

    @property
    def width(self) -> int:
        return self._samples.shape[1]

    @property
    def height(self) -> int:
        return self._samples.shape[0]

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    def to_bytes(self) -> bytes:
        return self._samples.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, LumaFrame):
            return NotImplemented
        return self._samples.shape == other._samples.shape and bool(
            np.array_equal(self._samples, other._samples)
        )

    def __repr__(self) -> str:
        return f"LumaFrame({self.width}x{self.height})"


class VideoSequence:
    """Ordered, dimension-equal luma frames plus a rational frame rate."""

    def __init__(self, frames: Iterable[LumaFrame], fps: Union[Fraction, int, float, str]):
        frames = list(frames)
        if not frames:
            raise FrameGeometryError("sequence needs at least 1 frame")
        first = frames[0]
        for index, frame in enumerate(frames[1:], start=1):
            if (frame.width, frame.height) != (first.width, first.height):
                raise FrameGeometryError(
                    f"frame {index} is {frame.width}x{frame.height}, "
                    f"expected {first.width}x{first.height}"
                )
        fps = Fraction(fps)
        if fps <= 0:
            raise FrameGeometryError("fps must be positive")
        self.frames: List[LumaFrame] = frames
        self.fps: Fraction = fps

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __repr__(self) -> str:
        return f"VideoSequence({len(self.frames)} x {self.width}x{self.height} @ {self.fps} fps)"


def _parse_header(line: bytes) -> dict:
    tokens = line.split()
    if not tokens or tokens[0] != Y4M_MAGIC:
        raise Y4MFormatError("stream does not start with a YUV4MPEG2 header")

    header = {"chroma": "420jpeg"}
    for token in tokens[1:]:
        tag, value = chr(token[0]), token[1:].decode("ascii", errors="replace")
        try:
            if tag == "W":
                header["width"] = int(value)
            elif tag == "H":
                header["height"] = int(value)
            elif tag == "F":
                num, _, den = value.partition(":")
                header["fps_num"], header["fps_den"] = int(num), int(den or 1)
            elif tag == "C":
                header["chroma"] = value
        except ValueError as e:
            raise Y4MFormatError(f"malformed header tag '{tag}{value}'") from e

    for required, tag in (("width", "W"), ("height", "H"), ("fps_num", "F")):
        if required not in header:
            raise Y4MFormatError(f"header is missing the {tag} tag")
    if header["width"] <= 0 or header["height"] <= 0:
        raise Y4MFormatError("frame dimensions must be positive")
    if header["fps_num"] <= 0 or header["fps_den"] <= 0:
        raise Y4MFormatError("fps must be positive")
    if header["chroma"] not in SUPPORTED_CHROMA:
        raise Y4MFormatError(f"unsupported chroma subsampling 'C{header['chroma']}'")
    return header


def _chroma_bytes(width: int, height: int, chroma: str) -> int:
    subsampling = SUPPORTED_CHROMA[chroma]
    if subsampling is None:
        return 0
    sx, sy = subsampling
    return 2 * (-(-width // sx)) * (-(-height // sy))


def read_y4m(stream: Union[BinaryIO, bytes], max_frames: Optional[int] = None) -> VideoSequence:
    """Read every frame's luma plane (display order) from a Y4M byte stream."""
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    data = bytes(data)

    end = data.find(b"\n")
    if end < 0:
        raise Y4MFormatError("unterminated YUV4MPEG2 header")
    header = _parse_header(data[:end])
    width, height = header["width"], header["height"]
    luma_size = width * height
    chroma_size = _chroma_bytes(width, height, header["chroma"])

    frames = []
    pos = end + 1
    while pos < len(data):
        if max_frames is not None and len(frames) >= max_frames:
            break
        line_end = data.find(b"\n", pos)
        if line_end < 0 or not data[pos:line_end].startswith(FRAME_MAGIC):
            raise Y4MFormatError(f"expected FRAME marker at byte {pos}")
        payload_start = line_end + 1
        payload_end = payload_start + luma_size + chroma_size
        if payload_end > len(data):
            raise Y4MFormatError(
                f"truncated frame {len(frames)}: need {luma_size + chroma_size} bytes, "
                f"got {len(data) - payload_start}"
            )
        frames.append(LumaFrame.from_bytes(width, height, data[payload_start:payload_start + luma_size]))
        pos = payload_end

    if not frames:
        raise Y4MFormatError("stream contains no frames")

    fps = Fraction(header["fps_num"], header["fps_den"])
    logger.info(f"Read {len(frames)} frame(s) of {width}x{height} @ {fps} fps (C{header['chroma']})")
    return VideoSequence(frames, fps)


def write_y4m(sequence: VideoSequence, chroma: str = "mono") -> bytes:
    """Serialize a sequence; 4:2:0 output carries neutral (128) chroma."""
    if chroma not in SUPPORTED_CHROMA:
        raise Y4MFormatError(f"unsupported chroma subsampling 'C{chroma}'")
    fps = sequence.fps
    header = f"YUV4MPEG2 W{sequence.width} H{sequence.height} F{fps.numerator}:{fps.denominator} Ip A1:1 C{chroma}\n"
    filler = bytes([128]) * _chroma_bytes(sequence.width, sequence.height, chroma)
    parts = [header.encode("ascii")]
    for frame in sequence:
        parts.append(FRAME_MAGIC + b"\n")
        parts.append(frame.to_bytes())
        parts.append(filler)
    return b"".join(parts)


def box_downscale(samples: np.ndarray) -> np.ndarray:
    """2:1 box filter: rounded (half up) mean of each 2x2 block."""
    samples = np.asarray(samples)
    height, width = samples.shape
    if width % 2 or height % 2:
        raise FrameGeometryError(
            f"cannot halve a {width}x{height} frame: dimensions must be even, crop the frame first"
        )
    wide = samples.astype(np.int32)
    total = wide[0::2, 0::2] + wide[0::2, 1::2] + wide[1::2, 0::2] + wide[1::2, 1::2]
    return ((total + 2) // 4).astype(np.uint8)


def downscale_half(frame: LumaFrame) -> LumaFrame:
    return LumaFrame(box_downscale(frame.samples))


def downscale_sequence(sequence: VideoSequence) -> VideoSequence:
    return VideoSequence([downscale_half(frame) for frame in sequence], sequence.fps)


def crop_to_even(frame: LumaFrame) -> LumaFrame:
    """Drop at most one rightmost column and one bottom row."""
    width = frame.width - frame.width % 2
    height = frame.height - frame.height % 2
    if width < MIN_DIMENSION or height < MIN_DIMENSION:
        raise FrameGeometryError(f"cropped frame {width}x{height} is smaller than 8x8")
    if (width, height) == (frame.width, frame.height):
        return frame
    return LumaFrame(frame.samples[:height, :width])


def crop_sequence_to_even(sequence: VideoSequence) -> VideoSequence:
    return VideoSequence([crop_to_even(frame) for frame in sequence], sequence.fps)
