"""Bitrate-ladder orchestration: low-resolution references first, then the dependents they guide."""
import asyncio
import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .codec import EncodedSequence, EncodeStats, EncoderConfig, encode_sequence, padded_dims
from .media_io import VideoSequence, downscale_sequence
from .metrics import (
    UndefinedRatioError,
    bd_psnr,
    bd_rate,
    bd_time,
    bd_work,
    efficiency_ratio,
    is_lossless,
    psnr_from_sse,
    sse_between,
)
from .partition_map import DEFAULT_CELL_SIZE, PartitionMap, crop_map, extract_map, interpolate_2x
from .policy import MevhasPolicy, reference_qp_for

logger = logging.getLogger(__name__)

MIN_SOURCE_DIMENSION = 16

REPORT_COLUMNS = (
    "id", "role", "width", "height", "qp", "bits", "bitrate_bps", "psnr_db",
    "mode_evals", "nodes", "wall_s",
    "reference_id", "fallbacks", "start_s",
)
CURVE_COLUMNS = ("mode", "qp", "bitrate", "psnr", "seconds")


class LadderError(ValueError):
    """A plan is invalid or one of its representations failed to encode."""


class Role(str, Enum):
    REFERENCE = "reference"
    DEPENDENT = "dependent"


class LadderMode(str, Enum):
    BASELINE = "baseline"
    MEVHAS = "mevhas"


def reference_id(width: int, height: int, qp: int) -> str:
    return f"ref-{width}x{height}-qp{qp}"


def dependent_id(width: int, height: int, qp: int) -> str:
    return f"dep-{width}x{height}-qp{qp}"


def override_id(qp: int) -> str:
    return f"map-qp{qp}"


class RepresentationSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    qp: int = Field(ge=0, le=51)
    role: Role
    reference_id: Optional[str] = None

    @model_validator(mode="after")
    def _check_link(self) -> "RepresentationSpec":
        if self.role is Role.REFERENCE and self.reference_id is not None:
            raise ValueError(f"reference {self.id} cannot itself link to a reference")
        return self


class LadderPlan(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    source: VideoSequence
    representations: List[RepresentationSpec]
    mode: LadderMode
    extended_qp_mode: bool = False
    # low-resolution maps standing in for reference encodes, keyed by link id
    override_maps: Dict[str, PartitionMap] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_links(self) -> "LadderPlan":
        references = {spec.id: spec for spec in self.representations if spec.role is Role.REFERENCE}
        for spec in self.dependents:
            if self.mode is LadderMode.BASELINE:
                if spec.reference_id is not None:
                    raise ValueError(f"baseline dependent {spec.id} must not link to a reference")
                continue
            if spec.reference_id in self.override_maps:
                continue
            reference = references.get(spec.reference_id)
            if reference is None:
                raise ValueError(f"dependent {spec.id} links to unknown reference {spec.reference_id}")
            if (2 * reference.width, 2 * reference.height) != (spec.width, spec.height):
                raise ValueError(
                    f"reference {reference.id} is {reference.width}x{reference.height}, "
                    f"expected half of {spec.width}x{spec.height}"
                )
            expected_qp = reference_qp_for(spec.qp, self.extended_qp_mode)
            if reference.qp != expected_qp:
                raise ValueError(f"dependent {spec.id} needs a QP {expected_qp} reference, got QP {reference.qp}")
        return self

    @property
    def references(self) -> List[RepresentationSpec]:
        return [spec for spec in self.representations if spec.role is Role.REFERENCE]

    @property
    def dependents(self) -> List[RepresentationSpec]:
        return [spec for spec in self.representations if spec.role is Role.DEPENDENT]


def plan_ladder(
    source: VideoSequence,
    qps: Iterable[int],
    mode: LadderMode,
    extended_qp_mode: bool = False,
    map_overrides: Optional[Dict[int, PartitionMap]] = None,
) -> LadderPlan:
    """Dependents at source resolution, plus half-resolution references in mevhas mode.

    `map_overrides` maps a reference QP to a low-resolution map that replaces
    that reference encode.
    """
    mode = LadderMode(mode)
    width, height = source.width, source.height
    if width % 2 or height % 2:
        raise LadderError(f"source {width}x{height} has an odd dimension; crop it to even first")
    if width < MIN_SOURCE_DIMENSION or height < MIN_SOURCE_DIMENSION:
        raise LadderError(f"source {width}x{height} is smaller than {MIN_SOURCE_DIMENSION}x{MIN_SOURCE_DIMENSION}")
    qps = sorted(set(qps))
    if not qps:
        raise LadderError("QP list is empty")
    bad = [qp for qp in qps if not 0 <= qp <= 51]
    if bad:
        raise LadderError(f"QPs {bad} lie outside [0, 51]")

    map_overrides = map_overrides or {}
    representations: List[RepresentationSpec] = []
    override_maps: Dict[str, PartitionMap] = {}
    links: Dict[int, Optional[str]] = {qp: None for qp in qps}

    if mode is LadderMode.MEVHAS:
        reference_qps = {qp: reference_qp_for(qp, extended_qp_mode) for qp in qps}
        for ref_qp in sorted(set(reference_qps.values()), reverse=True):
            if ref_qp in map_overrides:
                link = override_id(ref_qp)
                override_maps[link] = map_overrides[ref_qp]
            else:
                link = reference_id(width // 2, height // 2, ref_qp)
                representations.append(
                    RepresentationSpec(id=link, width=width // 2, height=height // 2, qp=ref_qp, role=Role.REFERENCE)
                )
            for qp, wanted in reference_qps.items():
                if wanted == ref_qp:
                    links[qp] = link

    for qp in qps:
        representations.append(
            RepresentationSpec(
                id=dependent_id(width, height, qp), width=width, height=height, qp=qp,
                role=Role.DEPENDENT, reference_id=links[qp],
            )
        )
    plan = LadderPlan(
        source=source, representations=representations, mode=mode,
        extended_qp_mode=extended_qp_mode, override_maps=override_maps,
    )
    logger.info(
        f"Planned {mode.value} ladder for {width}x{height}: "
        f"{len(plan.references)} reference(s), {len(plan.dependents)} dependent(s)"
    )
    return plan


class LadderRow(BaseModel):
    id: str
    role: Role
    width: int
    height: int
    qp: int
    bits: int
    bitrate_bps: float = Field(gt=0)
    psnr_db: float
    mode_evals: int
    nodes: int
    wall_s: float
    reference_id: Optional[str] = None
    fallbacks: int = 0
    start_s: float = 0.0
    stats: EncodeStats = Field(default_factory=EncodeStats)

    def csv_values(self) -> List[Any]:
        values = self.model_dump(mode="json", include=set(REPORT_COLUMNS))
        values["role"] = self.role.value
        values["reference_id"] = self.reference_id or ""
        values["psnr_db"] = "inf" if is_lossless(self.psnr_db) else f"{self.psnr_db:.4f}"
        values["bitrate_bps"] = f"{self.bitrate_bps:.3f}"
        values["wall_s"] = f"{self.wall_s:.6f}"
        values["start_s"] = f"{self.start_s:.6f}"
        return [values[column] for column in REPORT_COLUMNS]


class LadderReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mode: LadderMode
    rows: List[LadderRow]
    # low-resolution reference maps by reference id
    reference_maps: Dict[str, PartitionMap] = Field(default_factory=dict, exclude=True)

    @property
    def dependents(self) -> List[LadderRow]:
        return [row for row in self.rows if row.role is Role.DEPENDENT]

    @property
    def totals(self) -> Dict[str, float]:
        return {
            "bits": sum(row.bits for row in self.rows),
            "mode_evals": sum(row.mode_evals for row in self.rows),
            "nodes": sum(row.nodes for row in self.rows),
            "wall_s": sum(row.wall_s for row in self.rows),
            "fallbacks": sum(row.fallbacks for row in self.rows),
        }

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_values())
        return buffer.getvalue()

    def to_json(self) -> str:
        payload = self.model_dump(mode="python")
        payload["totals"] = self.totals
        return json.dumps(payload, indent=2, default=str) + "\n"


def _encode_row(
    spec: RepresentationSpec,
    sequence: VideoSequence,
    config: EncoderConfig,
    policy: Optional[MevhasPolicy],
    origin: float,
) -> Tuple[LadderRow, EncodedSequence]:
    start_s = time.perf_counter() - origin
    encoded = encode_sequence(sequence, config.with_qp(spec.qp), policy)
    stats = encoded.stats
    sse, samples = sse_between(sequence, encoded.recon)
    row = LadderRow(
        id=spec.id,
        role=spec.role,
        width=spec.width,
        height=spec.height,
        qp=spec.qp,
        bits=stats.total_bits,
        bitrate_bps=stats.total_bits * float(sequence.fps) / len(sequence),
        psnr_db=psnr_from_sse(sse, samples),
        mode_evals=stats.mode_evaluations,
        nodes=stats.nodes_visited,
        wall_s=stats.wall_time,
        reference_id=spec.reference_id,
        fallbacks=stats.fallbacks,
        start_s=start_s,
        stats=stats,
    )
    return row, encoded


def _dependent_map(low: PartitionMap, width: int, height: int, ctu_size: int) -> PartitionMap:
    padded_w, padded_h = padded_dims(width, height, ctu_size)
    high = interpolate_2x(low)
    if high.frame_width < padded_w or high.frame_height < padded_h:
        raise LadderError(
            f"interpolated map {high.frame_width}x{high.frame_height} cannot cover the padded "
            f"{padded_w}x{padded_h} frame"
        )
    return crop_map(high, padded_w, padded_h)


async def run_ladder_async(
    plan: LadderPlan,
    config: Optional[EncoderConfig] = None,
    jobs: int = 1,
    cell_size: int = DEFAULT_CELL_SIZE,
) -> LadderReport:
    """Encode references sequentially, then fan dependents out over `jobs` worker threads."""
    if jobs < 1:
        raise LadderError("jobs must be at least 1")
    config = config or EncoderConfig(qp=32)
    source = plan.source
    origin = time.perf_counter()
    loop = asyncio.get_running_loop()
    rows: List[LadderRow] = []
    low_maps: Dict[str, PartitionMap] = {}
    dependent_maps: Dict[str, PartitionMap] = {}

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        if plan.references:
            low_source = downscale_sequence(source)
            low_w, low_h = padded_dims(low_source.width, low_source.height, config.ctu_size)
            for spec in plan.references:
                try:
                    row, encoded = await loop.run_in_executor(
                        pool, _encode_row, spec, low_source, config, None, origin
                    )
                    low_maps[spec.id] = extract_map(encoded.record, low_w, low_h, 0, cell_size, spec.qp)
                    dependent_maps[spec.id] = _dependent_map(
                        low_maps[spec.id], source.width, source.height, config.ctu_size
                    )
                except Exception as e:
                    logger.error(f"Error encoding reference {spec.id}: {str(e)}")
                    raise LadderError(f"{spec.id}: {e}") from e
                rows.append(row)
                logger.info(f"✓ Reference {spec.id} done: {row.bits} bits, {row.mode_evals} mode evaluations")

        for link, low in plan.override_maps.items():
            try:
                dependent_maps[link] = _dependent_map(low, source.width, source.height, config.ctu_size)
            except Exception as e:
                logger.error(f"Error preparing map override {link}: {str(e)}")
                raise LadderError(f"{link}: {e}") from e

        async def encode_dependent(spec: RepresentationSpec) -> LadderRow:
            policy = None
            if plan.mode is LadderMode.MEVHAS:
                policy = MevhasPolicy(dependent_maps[spec.reference_id])
            try:
                row, _ = await loop.run_in_executor(pool, _encode_row, spec, source, config, policy, origin)
            except Exception as e:
                logger.error(f"Error encoding dependent {spec.id}: {str(e)}")
                raise LadderError(f"{spec.id}: {e}") from e
            logger.info(f"✓ Dependent {spec.id} done: {row.bits} bits, {row.mode_evals} mode evaluations")
            return row

        rows.extend(await asyncio.gather(*(encode_dependent(spec) for spec in plan.dependents)))

    report = LadderReport(mode=plan.mode, rows=rows, reference_maps=low_maps)
    totals = report.totals
    logger.info(
        f"✓ {plan.mode.value} ladder finished: {len(rows)} row(s), {totals['bits']} bits, "
        f"{totals['mode_evals']} mode evaluations, {totals['wall_s']:.2f}s"
    )
    return report


def run_ladder(
    plan: LadderPlan,
    config: Optional[EncoderConfig] = None,
    jobs: int = 1,
    cell_size: int = DEFAULT_CELL_SIZE,
) -> LadderReport:
    return asyncio.run(run_ladder_async(plan, config, jobs, cell_size))


class QpDelta(BaseModel):
    qp: int
    baseline_id: str
    mevhas_id: str
    delta_time_pct: Optional[float] = None
    delta_bits_pct: Optional[float] = None
    delta_psnr_db: Optional[float] = None
    delta_mode_evals_pct: Optional[float] = None


class BdSummary(BaseModel):
    bd_rate: Optional[float] = None
    bd_rate_pchip: Optional[float] = None
    bd_psnr: Optional[float] = None
    bd_time: Optional[float] = None
    bd_work: Optional[float] = None
    efficiency_ratio: Optional[float] = None
    reason: Optional[str] = None


class Comparison(BaseModel):
    per_qp: List[QpDelta]
    bd: BdSummary

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2) + "\n"


def _percent_change(baseline: float, test: float) -> Optional[float]:
    if baseline == 0:
        return None
    return (test - baseline) / baseline * 100.0


def _psnr_delta(baseline: float, test: float) -> Optional[float]:
    if is_lossless(baseline) and is_lossless(test):
        return 0.0
    if is_lossless(baseline) or is_lossless(test):
        return None
    return test - baseline


def _bd_summary(baseline: List[LadderRow], mevhas: List[LadderRow]) -> BdSummary:
    def curve(rows, cost_of):
        return [(cost_of(row), row.psnr_db) for row in rows]

    rate_curves = (curve(baseline, lambda r: r.bitrate_bps), curve(mevhas, lambda r: r.bitrate_bps))
    time_curves = (curve(baseline, lambda r: r.wall_s), curve(mevhas, lambda r: r.wall_s))
    work_curves = (curve(baseline, lambda r: r.mode_evals), curve(mevhas, lambda r: r.mode_evals))
    metrics = {
        "bd_rate": lambda: bd_rate(*rate_curves),
        "bd_rate_pchip": lambda: bd_rate(*rate_curves, method="pchip"),
        "bd_psnr": lambda: bd_psnr(*rate_curves),
        "bd_time": lambda: bd_time(*time_curves),
        "bd_work": lambda: bd_work(*work_curves),
    }

    summary = BdSummary()
    reasons = []
    for name, compute in metrics.items():
        try:
            setattr(summary, name, compute())
        except ValueError as e:
            logger.warning(f"{name} not computable: {str(e)}")
            reasons.append(f"{name}: {str(e)}")

    if summary.bd_rate is not None and summary.bd_time is not None:
        try:
            summary.efficiency_ratio = efficiency_ratio(summary.bd_rate, summary.bd_time)
        except UndefinedRatioError as e:
            reasons.append(str(e))
    summary.reason = "; ".join(reasons) or None
    return summary


def compare_reports(baseline: LadderReport, mevhas: LadderReport) -> Comparison:
    """Per-QP deltas and BD metrics of the mevhas dependents against the baseline ones."""
    baseline_rows = {row.qp: row for row in baseline.dependents}
    mevhas_rows = {row.qp: row for row in mevhas.dependents}
    shared = sorted(set(baseline_rows) & set(mevhas_rows))
    per_qp = []
    for qp in shared:
        b, m = baseline_rows[qp], mevhas_rows[qp]
        per_qp.append(QpDelta(
            qp=qp,
            baseline_id=b.id,
            mevhas_id=m.id,
            delta_time_pct=_percent_change(b.wall_s, m.wall_s),
            delta_bits_pct=_percent_change(b.bits, m.bits),
            delta_psnr_db=_psnr_delta(b.psnr_db, m.psnr_db),
            delta_mode_evals_pct=_percent_change(b.mode_evals, m.mode_evals),
        ))
    bd = _bd_summary([baseline_rows[qp] for qp in shared], [mevhas_rows[qp] for qp in shared])
    return Comparison(per_qp=per_qp, bd=bd)


def rd_curves(report: LadderReport) -> List[Dict[str, Any]]:
    """Plot-ready (mode, qp, bitrate, psnr, seconds) rows for the report's dependents."""
    return [
        {
            "mode": report.mode.value,
            "qp": row.qp,
            "bitrate": row.bitrate_bps,
            "psnr": row.psnr_db if math.isfinite(row.psnr_db) else "inf",
            "seconds": row.wall_s,
        }
        for row in sorted(report.dependents, key=lambda row: row.qp)
    ]


def curves_to_csv(rows: Iterable[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CURVE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()
