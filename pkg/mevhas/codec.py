"""Deterministic all-intra block encoder with VVC-style recursive partitioning.

Each 128x128 CTU is searched exhaustively over NS/QT/BT/TT splits (QT is not
allowed below a BT/TT node). Leaves are coded with one of four intra
predictors, an orthonormal DCT-II, a dead-zone quantizer and a bit-count proxy,
and candidates are compared on J = D + lambda * R. An optional gating policy
is consulted at every node.
"""
import json
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.fft import dctn, idctn

from .media_io import LumaFrame, VideoSequence
from .policy import GateDecision, GatingPolicy

logger = logging.getLogger(__name__)

HEADER_BITS = 16
MODE_COUNT = 4
DEFAULT_ROUNDING_OFFSET = 1.0 / 3.0
MISSING_NEIGHBOR = 128
# the frame header carries the rounded frame mean, used where a block has no neighbors
BASE_VALUE_BITS = 8
INFINITE_COST = math.inf


class SplitType(str, Enum):
    NS = "NS"
    QT = "QT"
    BT_H = "BT_H"
    BT_V = "BT_V"
    TT_H = "TT_H"
    TT_V = "TT_V"


# Enumeration order doubles as the tie-break order between equal-cost candidates.
SPLIT_ORDER: Tuple[SplitType, ...] = tuple(SplitType)
MT_SPLITS: FrozenSet[SplitType] = frozenset(
    {SplitType.BT_H, SplitType.BT_V, SplitType.TT_H, SplitType.TT_V}
)


class IntraMode(IntEnum):
    DC = 0
    PLANAR = 1
    HORIZONTAL = 2
    VERTICAL = 3


class PolicyMapMismatchError(ValueError):
    """The gating policy's partition map does not cover the padded frame."""


class PartitionRecordError(ValueError):
    """A partition record does not tile its frame."""


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


class EncoderConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    qp: int = Field(ge=0, le=51)
    ctu_size: int = 128
    min_cu: int = 8
    max_mt_depth: int = Field(default=3, ge=0)
    lambda_scale: float = Field(default=1.0, gt=0)
    rounding_offset: float = Field(default=DEFAULT_ROUNDING_OFFSET, ge=0, lt=1)

    @model_validator(mode="after")
    def _check_geometry(self) -> "EncoderConfig":
        if not _is_power_of_two(self.ctu_size) or self.ctu_size > 128:
            raise ValueError(f"ctu_size must be a power of two up to 128, got {self.ctu_size}")
        if not _is_power_of_two(self.min_cu) or self.min_cu < 8:
            raise ValueError(f"min_cu must be a power of two of at least 8, got {self.min_cu}")
        if self.ctu_size % self.min_cu:
            raise ValueError(f"min_cu {self.min_cu} does not divide ctu_size {self.ctu_size}")
        return self

    @classmethod
    def from_settings(cls, settings, qp: int) -> "EncoderConfig":
        return cls(
            qp=qp,
            ctu_size=settings.ctu_size,
            min_cu=settings.min_cu,
            max_mt_depth=settings.max_mt_depth,
            lambda_scale=settings.lambda_scale,
            rounding_offset=settings.rounding_offset,
        )

    def with_qp(self, qp: int) -> "EncoderConfig":
        return EncoderConfig(**{**self.model_dump(), "qp": qp})

    @property
    def lam(self) -> float:
        return lambda_of_qp(self.qp, self.lambda_scale)

    @property
    def qstep(self) -> float:
        return qstep_of_qp(self.qp)


def qstep_of_qp(qp: int) -> float:
    return 2.0 ** ((qp - 4) / 6.0)


def lambda_of_qp(qp: int, lambda_scale: float = 1.0) -> float:
    if not 0 <= qp <= 51:
        raise ValueError(f"qp must lie in [0, 51], got {qp}")
    return lambda_scale * 0.57 * 2.0 ** ((qp - 12) / 3.0)


@dataclass(frozen=True)
class CodingBlock:
    x: int
    y: int
    width: int
    height: int
    qt_depth: int = 0
    mt_depth: int = 0
    in_mt_subtree: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"block size must be positive, got {self.width}x{self.height}")
        if self.x % 4 or self.y % 4:
            raise ValueError(f"block origin ({self.x}, {self.y}) is off the 4-pixel grid")
        if self.in_mt_subtree and self.mt_depth < 1:
            raise ValueError("a block inside a BT/TT subtree needs mt_depth >= 1")

    @property
    def area(self) -> int:
        return self.width * self.height

    def split(self, split: SplitType) -> Tuple["CodingBlock", ...]:
        x, y, w, h = self.x, self.y, self.width, self.height
        if split is SplitType.QT:
            hw, hh = w // 2, h // 2
            return tuple(
                CodingBlock(cx, cy, hw, hh, self.qt_depth + 1, self.mt_depth, self.in_mt_subtree)
                for cy, cx in ((y, x), (y, x + hw), (y + hh, x), (y + hh, x + hw))
            )
        if split is SplitType.BT_H:
            parts = ((x, y, w, h // 2), (x, y + h // 2, w, h // 2))
        elif split is SplitType.BT_V:
            parts = ((x, y, w // 2, h), (x + w // 2, y, w // 2, h))
        elif split is SplitType.TT_H:
            q = h // 4
            parts = ((x, y, w, q), (x, y + q, w, 2 * q), (x, y + 3 * q, w, q))
        elif split is SplitType.TT_V:
            q = w // 4
            parts = ((x, y, q, h), (x + q, y, 2 * q, h), (x + 3 * q, y, q, h))
        else:
            raise ValueError("NS has no children")
        return tuple(
            CodingBlock(px, py, pw, ph, self.qt_depth, self.mt_depth + 1, True)
            for px, py, pw, ph in parts
        )


def allowed_splits(
    block: CodingBlock,
    config: EncoderConfig,
    frame_width: Optional[int] = None,
    frame_height: Optional[int] = None,
) -> FrozenSet[SplitType]:
    """Legal split outcomes for `block`; frame dims enable the boundary rule."""
    w, h, m = block.width, block.height, config.min_cu
    allowed = set()
    if w * h >= m * m:
        allowed.add(SplitType.NS)
    if w == h and w >= 2 * m and not block.in_mt_subtree:
        allowed.add(SplitType.QT)
    if block.mt_depth < config.max_mt_depth:
        if h >= 2 * m:
            allowed.add(SplitType.BT_H)
        if w >= 2 * m:
            allowed.add(SplitType.BT_V)
        if h >= 4 * m:
            allowed.add(SplitType.TT_H)
        if w >= 4 * m:
            allowed.add(SplitType.TT_V)

    if frame_width is not None and frame_height is not None:
        crosses_right = block.x + w > frame_width
        crosses_bottom = block.y + h > frame_height
        if crosses_right or crosses_bottom:
            forced = [SplitType.QT]
            if crosses_right:
                forced.append(SplitType.BT_V)
            if crosses_bottom:
                forced.append(SplitType.BT_H)
            for split in forced:
                if split in allowed:
                    return frozenset({split})
            # nothing can split toward the edge any more; code the padded block
            return frozenset(allowed & {SplitType.NS})
    return frozenset(allowed)


def forward_dct(block: np.ndarray) -> np.ndarray:
    """2-D orthonormal DCT-II over the last two axes."""
    return dctn(block, type=2, norm="ortho", axes=(-2, -1))


def inverse_dct(coeffs: np.ndarray) -> np.ndarray:
    return idctn(coeffs, type=2, norm="ortho", axes=(-2, -1))


def level_bits(levels: np.ndarray) -> np.ndarray:
    """Rate proxy per block: header plus 3 + 2*ceil(log2(|l|+1)) per nonzero level."""
    magnitudes = np.abs(levels)
    per_level = np.where(magnitudes > 0, 3 + 2 * np.ceil(np.log2(magnitudes + 1)), 0)
    return HEADER_BITS + per_level.sum(axis=(-2, -1)).astype(np.int64)


def _code_residuals(residuals, predictions, qstep, rounding_offset, lo, hi):
    coeffs = forward_dct(residuals)
    levels = np.sign(coeffs) * np.floor(np.abs(coeffs) / qstep + rounding_offset)
    reconstruction = np.clip(np.rint(predictions + inverse_dct(levels * qstep)), lo, hi)
    error = predictions + residuals - reconstruction
    distortion = np.einsum("...ij,...ij->...", error, error)
    return distortion, level_bits(levels), reconstruction, levels


@dataclass(frozen=True)
class TransformResult:
    distortion: float
    bits: int
    reconstruction: np.ndarray
    levels: np.ndarray


def transform_quant(
    residual: np.ndarray,
    qp: int,
    prediction: Optional[np.ndarray] = None,
    rounding_offset: float = DEFAULT_ROUNDING_OFFSET,
) -> TransformResult:
    """Code one residual block and report its distortion and rate.

    Without a prediction the reconstruction is the decoded residual clamped to
    [-255, 255]; with one it is the decoded sample block clamped to [0, 255].
    """
    residual = np.asarray(residual, dtype=np.float64)
    if residual.ndim != 2:
        raise ValueError(f"residual must be 2-D, got {residual.ndim}-D")
    if prediction is None:
        prediction, lo, hi = np.zeros_like(residual), -255, 255
    else:
        prediction, lo, hi = np.asarray(prediction, dtype=np.float64), 0, 255
    distortion, bits, reconstruction, levels = _code_residuals(
        residual, prediction, qstep_of_qp(qp), rounding_offset, lo, hi
    )
    return TransformResult(float(distortion), int(bits), reconstruction.astype(np.int32), levels)


def fetch_neighbors(recon: np.ndarray, x: int, y: int, width: int, height: int,
                    missing: int = MISSING_NEIGHBOR) -> Tuple[np.ndarray, np.ndarray]:
    """Top row and left column of reconstructed samples, edge-replicated when absent.

    With neither side available both are filled with `missing`.
    """
    top = recon[y - 1, x:x + width].astype(np.int64) if y > 0 else None
    left = recon[y:y + height, x - 1].astype(np.int64) if x > 0 else None
    if top is None and left is None:
        return (np.full(width, missing, dtype=np.int64),
                np.full(height, missing, dtype=np.int64))
    if top is None:
        top = np.full(width, left[0], dtype=np.int64)
    if left is None:
        left = np.full(height, top[0], dtype=np.int64)
    return top, left


def predict(mode: IntraMode, top: np.ndarray, left: np.ndarray) -> np.ndarray:
    """(height, width) integer prediction from the given neighbors."""
    w, h = len(top), len(left)
    top = np.asarray(top, dtype=np.int64)
    left = np.asarray(left, dtype=np.int64)
    if mode is IntraMode.DC:
        total = int(top.sum() + left.sum())
        value = (total + (w + h) // 2) // (w + h)
        return np.full((h, w), value, dtype=np.int64)
    if mode is IntraMode.HORIZONTAL:
        return np.repeat(left[:, None], w, axis=1)
    if mode is IntraMode.VERTICAL:
        return np.repeat(top[None, :], h, axis=0)
    # planar: blend toward the top-right and bottom-left samples
    i = np.arange(h)[:, None]
    j = np.arange(w)[None, :]
    horizontal = ((w - 1 - j) * left[:, None] + (j + 1) * top[w - 1]) * h
    vertical = ((h - 1 - i) * top[None, :] + (i + 1) * left[h - 1]) * w
    return (horizontal + vertical + w * h) // (2 * w * h)


class ModeDecision(NamedTuple):
    mode: IntraMode
    distortion: int
    bits: int
    cost: float
    reconstruction: np.ndarray


def evaluate_modes(original: np.ndarray, top: np.ndarray, left: np.ndarray, config: EncoderConfig) -> ModeDecision:
    """Code `original` with all four intra modes and keep the cheapest (ties: DC < planar < H < V)."""
    original = np.asarray(original, dtype=np.float64)
    predictions = np.stack([predict(mode, top, left) for mode in IntraMode]).astype(np.float64)
    distortion, bits, reconstruction, _ = _code_residuals(
        original[None] - predictions, predictions, config.qstep, config.rounding_offset, 0, 255
    )
    costs = distortion + config.lam * bits
    best = int(np.argmin(costs))
    return ModeDecision(
        mode=IntraMode(best),
        distortion=int(round(distortion[best])),
        bits=int(bits[best]),
        cost=float(costs[best]),
        reconstruction=reconstruction[best].astype(np.int32),
    )


@dataclass(frozen=True)
class CodingUnit:
    """A final CU of the partition, with the decision that produced it."""

    x: int
    y: int
    width: int
    height: int
    mode: Optional[IntraMode] = None
    qt_depth: int = 0
    mt_depth: int = 0
    path: Tuple[SplitType, ...] = ()
    sse: int = 0
    bits: int = 0

    def to_dict(self, frame: int = 0) -> dict:
        return {
            "frame": frame,
            "x": self.x,
            "y": self.y,
            "w": self.width,
            "h": self.height,
            "mode": self.mode.name if self.mode is not None else None,
            "qt_depth": self.qt_depth,
            "mt_depth": self.mt_depth,
            "path": "/".join(split.value for split in self.path),
            "sse": self.sse,
            "bits": self.bits,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CodingUnit":
        mode = data.get("mode")
        path = data.get("path") or ""
        return cls(
            x=data["x"],
            y=data["y"],
            width=data["w"],
            height=data["h"],
            mode=IntraMode[mode] if mode else None,
            qt_depth=data.get("qt_depth", 0),
            mt_depth=data.get("mt_depth", 0),
            path=tuple(SplitType(part) for part in path.split("/") if part),
            sse=data.get("sse", 0),
            bits=data.get("bits", 0),
        )


class PartitionRecord:
    """Final CUs of every encoded frame over the padded frame area."""

    def __init__(self, width: int, height: int, frames: Optional[List[List[CodingUnit]]] = None):
        self.width = width
        self.height = height
        self.frames: List[List[CodingUnit]] = frames if frames is not None else []

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def frame(self, index: int) -> List[CodingUnit]:
        return self.frames[index]

    def validate_tiling(self) -> None:
        for index, cus in enumerate(self.frames):
            coverage = np.zeros((self.height, self.width), dtype=np.int32)
            for cu in cus:
                if cu.x < 0 or cu.y < 0 or cu.x + cu.width > self.width or cu.y + cu.height > self.height:
                    raise PartitionRecordError(
                        f"frame {index}: CU {cu.width}x{cu.height} at ({cu.x}, {cu.y}) "
                        f"leaves the {self.width}x{self.height} frame"
                    )
                coverage[cu.y:cu.y + cu.height, cu.x:cu.x + cu.width] += 1
            if not np.all(coverage == 1):
                holes = int(np.count_nonzero(coverage == 0))
                overlaps = int(np.count_nonzero(coverage > 1))
                raise PartitionRecordError(
                    f"frame {index} is not tiled: {holes} uncovered and {overlaps} multiply covered pixels"
                )

    def is_tiling(self) -> bool:
        try:
            self.validate_tiling()
        except PartitionRecordError:
            return False
        return True

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(cu.to_dict(index), separators=(",", ":"))
            for index, cus in enumerate(self.frames)
            for cu in cus
        ]
        return "\n".join(lines) + "\n" if lines else ""

    @classmethod
    def from_jsonl(cls, text: str, width: Optional[int] = None, height: Optional[int] = None) -> "PartitionRecord":
        frames: Dict[int, List[CodingUnit]] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            data = json.loads(line)
            frames.setdefault(data.get("frame", 0), []).append(CodingUnit.from_dict(data))
        ordered = [frames.get(index, []) for index in range(max(frames) + 1)] if frames else []
        cus = [cu for frame in ordered for cu in frame]
        if width is None:
            width = max((cu.x + cu.width for cu in cus), default=0)
        if height is None:
            height = max((cu.y + cu.height for cu in cus), default=0)
        return cls(width, height, ordered)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionRecord):
            return NotImplemented
        return (self.width, self.height, self.frames) == (other.width, other.height, other.frames)

    def __repr__(self) -> str:
        return f"PartitionRecord({self.width}x{self.height}, {self.num_frames} frame(s))"


class EncodeStats(BaseModel):
    mode_evaluations: int = 0
    nodes_visited: int = 0
    total_bits: int = 0
    sse: int = 0
    wall_time: float = 0.0
    fallbacks: int = 0
    frames: int = 0
    gate_counts: Dict[str, int] = Field(default_factory=dict)

    def merge(self, other: "EncodeStats") -> "EncodeStats":
        gate_counts = Counter(self.gate_counts)
        gate_counts.update(other.gate_counts)
        return EncodeStats(
            mode_evaluations=self.mode_evaluations + other.mode_evaluations,
            nodes_visited=self.nodes_visited + other.nodes_visited,
            total_bits=self.total_bits + other.total_bits,
            sse=self.sse + other.sse,
            wall_time=self.wall_time + other.wall_time,
            fallbacks=self.fallbacks + other.fallbacks,
            frames=self.frames + other.frames,
            gate_counts=dict(sorted(gate_counts.items())),
        )

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True) + "\n"


@dataclass
class RdoResult:
    """Best decision found for one recursion node."""

    cost: float
    bits: int = 0
    sse: int = 0
    cus: List[CodingUnit] = field(default_factory=list)

    @property
    def pruned(self) -> bool:
        return math.isinf(self.cost)


class EncodedFrame(NamedTuple):
    recon: LumaFrame
    stats: EncodeStats
    record: PartitionRecord


class EncodedSequence(NamedTuple):
    recon: VideoSequence
    stats: EncodeStats
    record: PartitionRecord


def padded_dims(width: int, height: int, ctu_size: int) -> Tuple[int, int]:
    return -(-width // ctu_size) * ctu_size, -(-height // ctu_size) * ctu_size


class FrameEncoder:
    """Runs the CTU search for one frame at a time; not shared between threads."""

    def __init__(self, config: EncoderConfig, policy: Optional[GatingPolicy] = None):
        self.config = config
        self.policy = policy
        self._lambda = config.lam
        self._orig: Optional[np.ndarray] = None
        self._recon: Optional[np.ndarray] = None
        self._base_value = MISSING_NEIGHBOR
        self._width = self._height = 0
        self._reset_counters()

    def _reset_counters(self) -> None:
        self._mode_evaluations = 0
        self._nodes_visited = 0
        self._fallbacks = 0
        self._gate_counts: Counter = Counter()

    def prepare(self, frame: LumaFrame) -> None:
        """Pad `frame` to whole CTUs and reset the reconstruction buffer."""
        padded_w, padded_h = padded_dims(frame.width, frame.height, self.config.ctu_size)
        partition_map = getattr(self.policy, "partition_map", None) if self.policy is not None else None
        if partition_map is not None and (partition_map.frame_width, partition_map.frame_height) != (padded_w, padded_h):
            raise PolicyMapMismatchError(
                f"partition map covers {partition_map.frame_width}x{partition_map.frame_height} "
                f"but the padded frame is {padded_w}x{padded_h}"
            )
        self._width, self._height = frame.width, frame.height
        self._base_value = int(np.clip(np.floor(frame.samples.mean() + 0.5), 0, 255))
        self._orig = np.pad(
            frame.samples.astype(np.int32),
            ((0, padded_h - frame.height), (0, padded_w - frame.width)),
            mode="edge",
        )
        self._recon = self._orig.copy()
        self._reset_counters()

    def encode(self, frame: LumaFrame) -> EncodedFrame:
        start = time.perf_counter()
        self.prepare(frame)
        padded_h, padded_w = self._orig.shape
        ctu = self.config.ctu_size

        cus: List[CodingUnit] = []
        total_bits, total_sse = BASE_VALUE_BITS, 0
        for y in range(0, padded_h, ctu):
            for x in range(0, padded_w, ctu):
                result = self.rdo_node(CodingBlock(x, y, ctu, ctu))
                cus.extend(result.cus)
                total_bits += result.bits
                total_sse += result.sse

        recon = LumaFrame(self._recon[:frame.height, :frame.width].astype(np.uint8))
        stats = EncodeStats(
            mode_evaluations=self._mode_evaluations,
            nodes_visited=self._nodes_visited,
            total_bits=total_bits,
            sse=total_sse,
            wall_time=time.perf_counter() - start,
            fallbacks=self._fallbacks,
            frames=1,
            gate_counts={decision.value: count for decision, count in sorted(self._gate_counts.items())},
        )
        if self._fallbacks:
            logger.info(f"{self._fallbacks} node(s) fell back to a full search at QP {self.config.qp}")
        return EncodedFrame(recon, stats, PartitionRecord(padded_w, padded_h, [cus]))

    def rdo_node(self, block: CodingBlock) -> RdoResult:
        """Best decision for `block` against the current reconstruction; `prepare` must have run."""
        if self._recon is None:
            raise RuntimeError("prepare() must be called before rdo_node()")
        result = self._search(block, (), gated=True)
        if result.pruned:
            self._fallbacks += 1
            result = self._search(block, (), gated=False)
        return result

    def _search(self, block: CodingBlock, path: Tuple[SplitType, ...], gated: bool) -> RdoResult:
        self._nodes_visited += 1
        x, y, w, h = block.x, block.y, block.width, block.height

        if x >= self._width or y >= self._height:
            # padding only: recorded as-is, reconstruction already holds the padded source
            return RdoResult(0.0, cus=[CodingUnit(x, y, w, h, None, block.qt_depth, block.mt_depth, path)])

        splits = allowed_splits(block, self.config, self._width, self._height)
        decision = GateDecision.FULL_RDO
        if gated and self.policy is not None:
            decision = self.policy.decide(block, SplitType.QT not in splits)
            self._gate_counts[decision] += 1
        if decision is GateDecision.PRUNE:
            return RdoResult(INFINITE_COST)

        region = (slice(y, y + h), slice(x, x + w))
        saved = self._recon[region].copy()
        best: Optional[RdoResult] = None
        best_recon = None

        if SplitType.NS in splits and decision is not GateDecision.SKIP_MODES_ALLOW_SPLIT:
            best = self._code_leaf(block, path)
            best_recon = self._recon[region].copy()

        for split in SPLIT_ORDER[1:]:
            if split not in splits:
                continue
            self._recon[region] = saved
            candidate = self._search_split(block, split, path, gated)
            if not candidate.pruned and (best is None or candidate.cost < best.cost):
                best = candidate
                best_recon = self._recon[region].copy()

        if best is None:
            # every candidate was gated away; a tiling must still come out of this node
            self._fallbacks += 1
            self._recon[region] = saved
            if SplitType.NS in splits:
                logger.debug(f"Fallback to NS at {w}x{h} ({x}, {y})")
                best = self._code_leaf(block, path)
            else:
                logger.debug(f"Fallback to ungated search at {w}x{h} ({x}, {y})")
                best = self._search(block, path, gated=False)
            return best

        self._recon[region] = best_recon
        return best

    def _search_split(self, block: CodingBlock, split: SplitType, path, gated: bool) -> RdoResult:
        child_path = path + (split,)
        result = RdoResult(0.0)
        for child in block.split(split):
            child_result = self._search(child, child_path, gated)
            if child_result.pruned:
                return RdoResult(INFINITE_COST)
            result.cost += child_result.cost
            result.bits += child_result.bits
            result.sse += child_result.sse
            result.cus.extend(child_result.cus)
        return result

    def _code_leaf(self, block: CodingBlock, path) -> RdoResult:
        x, y, w, h = block.x, block.y, block.width, block.height
        top, left = fetch_neighbors(self._recon, x, y, w, h, self._base_value)
        decision = evaluate_modes(self._orig[y:y + h, x:x + w], top, left, self.config)
        self._mode_evaluations += MODE_COUNT
        self._recon[y:y + h, x:x + w] = decision.reconstruction
        cu = CodingUnit(x, y, w, h, decision.mode, block.qt_depth, block.mt_depth, path,
                        decision.distortion, decision.bits)
        return RdoResult(decision.cost, decision.bits, decision.distortion, [cu])


def encode_frame(frame: LumaFrame, config: EncoderConfig, policy: Optional[GatingPolicy] = None) -> EncodedFrame:
    return FrameEncoder(config, policy).encode(frame)


def encode_sequence(sequence: VideoSequence, config: EncoderConfig,
                    policy: Optional[GatingPolicy] = None) -> EncodedSequence:
    """Encode every frame independently (all-intra) with one shared policy."""
    encoder = FrameEncoder(config, policy)
    frames: List[LumaFrame] = []
    record: Optional[PartitionRecord] = None
    stats = EncodeStats()
    for frame in sequence:
        encoded = encoder.encode(frame)
        frames.append(encoded.recon)
        stats = stats.merge(encoded.stats)
        if record is None:
            record = encoded.record
        else:
            record.frames.extend(encoded.record.frames)

    logger.info(
        f"✓ Encoded {len(frames)} frame(s) {sequence.width}x{sequence.height} at QP {config.qp}: "
        f"{stats.total_bits} bits, {stats.mode_evaluations} mode evaluations, "
        f"{stats.nodes_visited} nodes, {stats.wall_time:.2f}s"
    )
    return EncodedSequence(VideoSequence(frames, sequence.fps), stats, record)
