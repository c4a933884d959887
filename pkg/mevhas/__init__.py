"""MEVHAS multi-resolution encoding testbed."""
from .codec import EncoderConfig, EncodeStats, PartitionRecord, encode_frame, encode_sequence
from .ladder import LadderMode, compare_reports, plan_ladder, run_ladder
from .media_io import LumaFrame, VideoSequence, read_y4m, write_y4m
from .partition_map import PartitionMap, extract_map, interpolate_2x, parse_map, serialize_map
from .policy import FullRdoPolicy, GateDecision, MevhasPolicy, gate, reference_qp_for

__version__ = "1.0.0"

__all__ = [
    "EncoderConfig",
    "EncodeStats",
    "FullRdoPolicy",
    "GateDecision",
    "LadderMode",
    "LumaFrame",
    "MevhasPolicy",
    "PartitionMap",
    "PartitionRecord",
    "VideoSequence",
    "compare_reports",
    "encode_frame",
    "encode_sequence",
    "extract_map",
    "gate",
    "interpolate_2x",
    "parse_map",
    "plan_ladder",
    "read_y4m",
    "reference_qp_for",
    "run_ladder",
    "serialize_map",
    "write_y4m",
]
