"""Partition-search gating driven by interpolated reference partitions.

gate() decides, per recursion node, whether the encoder runs its mode search,
skips it while still recursing, or drops the node entirely. The decision only
depends on the node area, the area of the interpolated reference CU at the
node's position, and whether the encoder forbids a quad split there.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, Optional, Protocol, Tuple

if TYPE_CHECKING:
    from .codec import CodingBlock
    from .partition_map import PartitionMap

logger = logging.getLogger(__name__)

MIN_AREA = 8 * 8
MAX_AREA = 128 * 128

STANDARD_QPS: Tuple[int, ...] = (27, 32, 37, 42)
# dependent QP -> low-resolution reference QP
STANDARD_REFERENCE_QPS: Dict[int, int] = {42: 37, 37: 37, 32: 37, 27: 32}


class GateDecision(str, Enum):
    DEFAULT_RDO = "DefaultRdo"
    SKIP_MODES_ALLOW_SPLIT = "SkipModesAllowSplit"
    FULL_RDO = "FullRdo"
    PRUNE = "Prune"


class ReferenceQpError(ValueError):
    """No reference QP is defined for the requested dependent QP."""


@dataclass(frozen=True)
class GateInput:
    curr_sz: int
    max_sz: int
    qt_restricted: bool = False

    def __post_init__(self):
        for name in ("curr_sz", "max_sz"):
            value = getattr(self, name)
            if not MIN_AREA <= value <= MAX_AREA:
                raise ValueError(f"{name} must lie in [{MIN_AREA}, {MAX_AREA}], got {value}")


def gate(gate_input: GateInput) -> GateDecision:
    if gate_input.qt_restricted:
        return GateDecision.DEFAULT_RDO
    if gate_input.curr_sz > gate_input.max_sz:
        return GateDecision.SKIP_MODES_ALLOW_SPLIT
    # curr_sz >= max_sz / 4, kept in integers
    if 4 * gate_input.curr_sz >= gate_input.max_sz:
        return GateDecision.FULL_RDO
    return GateDecision.PRUNE


def reference_qp_for(dependent_qp: int, extended: bool = False) -> int:
    """QP of the low-resolution encode whose partitions guide `dependent_qp`."""
    if not extended:
        try:
            return STANDARD_REFERENCE_QPS[dependent_qp]
        except KeyError:
            raise ReferenceQpError(
                f"QP {dependent_qp} has no reference in the standard set {STANDARD_QPS}; "
                f"use extended mode for other QPs"
            ) from None
    if not 0 <= dependent_qp <= 51:
        raise ReferenceQpError(f"QP {dependent_qp} is outside [0, 51]")
    return 37 if dependent_qp >= 32 else 32


class GatingPolicy(Protocol):
    """What the encoder asks at every recursion node."""

    @property
    def partition_map(self) -> Optional["PartitionMap"]:
        ...

    def decide(self, block: "CodingBlock", qt_restricted: bool) -> GateDecision:
        ...


class FullRdoPolicy:
    """Answers FullRdo everywhere; behaves exactly like running without a policy."""

    partition_map = None

    def decide(self, block: "CodingBlock", qt_restricted: bool) -> GateDecision:
        return GateDecision.FULL_RDO


class MevhasPolicy:
    """Gate bound to an interpolated partition map, sampled at the block's top-left pixel."""

    def __init__(self, partition_map: "PartitionMap", enabled: bool = True):
        self._partition_map = partition_map
        self.enabled = enabled

    @property
    def partition_map(self) -> "PartitionMap":
        return self._partition_map

    def decide(self, block: "CodingBlock", qt_restricted: bool) -> GateDecision:
        if not self.enabled:
            return GateDecision.FULL_RDO
        max_sz = self._partition_map.max_sz(block.x, block.y)
        return gate(GateInput(block.width * block.height, max_sz, qt_restricted))
