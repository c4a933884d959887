"""Command-line surface: encode, ladder, bd, complexity and corpus.

Exit codes: 0 success, 1 processing failure, 2 usage error (bad flags or
malformed CSV input).
"""
import argparse
import asyncio
import csv
import io
import json
import logging
import math
import os
import sys
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import Settings, get_settings

from .codec import EncoderConfig, encode_sequence, padded_dims
from .ladder import (
    LadderMode,
    compare_reports,
    curves_to_csv,
    plan_ladder,
    rd_curves,
    run_ladder_async,
)
from .media_io import VideoSequence, crop_sequence_to_even, read_y4m
from .metrics import bd_rate, bd_time, complexity_features, efficiency_ratio, format_summary, psnr
from .partition_map import crop_map, extract_map, interpolate_2x, parse_map, serialize_map
from .policy import MevhasPolicy
from .storage import FileStorage

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

CORPUS_COLUMNS = ("clip", "E", "h", "bdbr", "bdt", "ratio")


class UsageError(ValueError):
    """Bad command-line input detected after argument parsing."""


class ExperimentConfig(BaseModel):
    """Canonical description of one ladder experiment, written as experiment.json."""

    model_config = ConfigDict(frozen=True)

    input: str
    qps: List[int]
    mode: Literal["baseline", "mevhas", "both"] = "both"
    out: str
    deterministic: bool = True
    map_overrides: Dict[int, str] = Field(default_factory=dict)
    jobs: int = Field(default=1, ge=1)
    frames: Optional[int] = Field(default=None, ge=1)
    max_mt_depth: int = Field(default=3, ge=0)
    extended_qp_mode: bool = False

    @field_validator("qps")
    @classmethod
    def _canonical_qps(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("QP list is empty")
        if any(not 0 <= qp <= 51 for qp in value):
            raise ValueError(f"QPs must lie in [0, 51], got {value}")
        return sorted(set(value))

    @field_validator("deterministic")
    @classmethod
    def _always_deterministic(cls, value: bool) -> bool:
        if not value:
            raise ValueError("experiments are always deterministic")
        return value

    @property
    def modes(self) -> List[LadderMode]:
        if self.mode == "both":
            return [LadderMode.BASELINE, LadderMode.MEVHAS]
        return [LadderMode(self.mode)]

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.model_validate_json(text)


def _qp_list(value: str) -> List[int]:
    try:
        qps = [int(token) for token in value.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid QP list '{value}'") from None
    if not qps or any(not 0 <= qp <= 51 for qp in qps):
        raise argparse.ArgumentTypeError(f"QPs must be integers in [0, 51], got '{value}'")
    return qps


def _map_override(value: str) -> Tuple[int, str]:
    qp, sep, path = value.partition("=")
    if not sep or not path:
        raise argparse.ArgumentTypeError(f"expected QP=FILE, got '{value}'")
    try:
        return int(qp), path
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid QP in '{value}'") from None


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer '{value}'") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {number}")
    return number


def _read_sequence(path: str, frames: Optional[int]) -> VideoSequence:
    with open(path, "rb") as f:
        sequence = read_y4m(f, max_frames=frames)
    return crop_sequence_to_even(sequence)


def _storage_for(path: str) -> Tuple[FileStorage, str]:
    directory, name = os.path.split(os.path.abspath(path))
    return FileStorage(directory), name


async def _load_text(path: str) -> str:
    storage, name = _storage_for(path)
    text = await storage.load_text(name)
    if text is None:
        raise FileNotFoundError(f"no such file: '{path}'")
    return text


def _read_text(path: str) -> str:
    return asyncio.run(_load_text(path))


def _write_file(path: str, text: str) -> None:
    storage, name = _storage_for(path)
    asyncio.run(storage.save_text(name, text))


def _write_json(path: str, data: Any) -> None:
    storage, name = _storage_for(path)
    asyncio.run(storage.save_json(name, data))


def _encoder_config(settings: Settings, qp: int, max_mt_depth: Optional[int]) -> EncoderConfig:
    config = EncoderConfig.from_settings(settings, qp)
    if max_mt_depth is not None:
        config = EncoderConfig(**{**config.model_dump(), "max_mt_depth": max_mt_depth})
    return config


def cmd_encode(args: argparse.Namespace, settings: Settings) -> int:
    sequence = _read_sequence(args.input, args.frames)
    config = _encoder_config(settings, args.qp, args.max_mt_depth)
    padded_w, padded_h = padded_dims(sequence.width, sequence.height, config.ctu_size)

    policy = None
    if args.map:
        policy = MevhasPolicy(parse_map(_read_text(args.map)))
    elif args.reference_map:
        high = interpolate_2x(parse_map(_read_text(args.reference_map)))
        if high.frame_width < padded_w or high.frame_height < padded_h:
            raise ValueError(
                f"interpolated reference map {high.frame_width}x{high.frame_height} "
                f"cannot cover the padded {padded_w}x{padded_h} frame"
            )
        policy = MevhasPolicy(crop_map(high, padded_w, padded_h))

    encoded = encode_sequence(sequence, config, policy)
    stats = encoded.stats
    quality = psnr(sequence, encoded.recon)

    if args.out_stats:
        _write_file(args.out_stats, stats.to_json())
    if args.out_record:
        _write_file(args.out_record, encoded.record.to_jsonl())
    if args.out_map:
        partition_map = extract_map(encoded.record, padded_w, padded_h, 0, settings.cell_size, args.qp)
        _write_file(args.out_map, serialize_map(partition_map, config.ctu_size))

    print(
        f"bits {stats.total_bits} | psnr {quality:.4f} | mode_evals {stats.mode_evaluations} "
        f"| nodes {stats.nodes_visited} | fallbacks {stats.fallbacks} | wall_s {stats.wall_time:.3f}"
    )
    return EXIT_OK


async def _run_experiment(experiment: ExperimentConfig, settings: Settings, storage: FileStorage,
                          source: VideoSequence, prefix: str = ""):
    config = _encoder_config(settings, experiment.qps[0], experiment.max_mt_depth)
    overrides = {qp: parse_map(await _load_text(path)) for qp, path in experiment.map_overrides.items()}
    reports = {}
    curves = []
    for mode in experiment.modes:
        plan = plan_ladder(source, experiment.qps, mode, experiment.extended_qp_mode, overrides)
        report = await run_ladder_async(plan, config, experiment.jobs, settings.cell_size)
        base = os.path.join(prefix, mode.value)
        await storage.save_text(os.path.join(base, "report.csv"), report.to_csv())
        await storage.save_text(os.path.join(base, "report.json"), report.to_json())
        for ref_id, low_map in report.reference_maps.items():
            await storage.save_map(os.path.join(base, "maps"), ref_id, 0, low_map)
        reports[mode] = report
        curves.extend(rd_curves(report))
    await storage.save_text(os.path.join(prefix, "curves.csv"), curves_to_csv(curves))

    comparison = None
    if LadderMode.BASELINE in reports and LadderMode.MEVHAS in reports:
        comparison = compare_reports(reports[LadderMode.BASELINE], reports[LadderMode.MEVHAS])
        await storage.save_text(os.path.join(prefix, "comparison.json"), comparison.to_json())
    return reports, comparison


def _summary_line(comparison) -> str:
    bd = comparison.bd
    if bd.bd_rate is None or bd.bd_time is None:
        return f"BD summary not computable: {bd.reason}"
    if bd.efficiency_ratio is None:
        return f"BDT {bd.bd_time:.2f} | BDBR {bd.bd_rate:.2f} | BDBR/BDT undefined"
    return format_summary(bd.bd_time, bd.bd_rate)


def cmd_ladder(args: argparse.Namespace, settings: Settings) -> int:
    experiment = ExperimentConfig(
        input=args.input,
        qps=args.qps or settings.qps,
        mode=args.mode,
        out=args.out,
        map_overrides=dict(args.map_override or []),
        jobs=settings.jobs if args.jobs is None else args.jobs,
        frames=args.frames,
        max_mt_depth=settings.max_mt_depth if args.max_mt_depth is None else args.max_mt_depth,
        extended_qp_mode=settings.extended_qp_mode,
    )
    source = _read_sequence(experiment.input, experiment.frames)
    storage = FileStorage(experiment.out)

    async def run():
        await storage.save_text("experiment.json", experiment.canonical_json())
        return await _run_experiment(experiment, settings, storage, source)

    reports, comparison = asyncio.run(run())
    for mode, report in reports.items():
        totals = report.totals
        print(f"{mode.value}: {len(report.rows)} row(s), {totals['bits']} bits, "
              f"{totals['mode_evals']} mode evaluations, {totals['wall_s']:.2f}s")
    if comparison is not None:
        print(_summary_line(comparison))
    return EXIT_OK


def _read_curve_csv(path: str, columns: int) -> List[Tuple[float, ...]]:
    """Numeric rows with exactly `columns` fields; a leading header row is skipped."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    points = []
    for index, row in enumerate(rows, start=1):
        if len(row) != columns:
            raise UsageError(f"{path}: line {index} has {len(row)} field(s), expected {columns}")
        try:
            points.append(tuple(float(cell) for cell in row))
        except ValueError:
            if index == 1 and not points:
                continue
            raise UsageError(f"{path}: non-numeric value at line {index}") from None
    if not points:
        raise UsageError(f"{path}: no data rows")
    return points


def cmd_bd(args: argparse.Namespace, settings: Settings) -> int:
    result: Dict[str, object] = {"kind": args.kind, "method": args.method}
    if args.kind == "summary":
        anchor = _read_curve_csv(args.anchor, 3)
        test = _read_curve_csv(args.test, 3)
        bdbr = bd_rate([(r, q) for r, _, q in anchor], [(r, q) for r, _, q in test], args.method)
        bdt = bd_time([(t, q) for _, t, q in anchor], [(t, q) for _, t, q in test], args.method)
        result.update(bd_rate=bdbr, bd_time=bdt, efficiency_ratio=efficiency_ratio(bdbr, bdt))
        line = format_summary(bdt, bdbr)
    else:
        anchor = _read_curve_csv(args.anchor, 2)
        test = _read_curve_csv(args.test, 2)
        metric = bd_time if args.kind == "time" else bd_rate
        value = metric(anchor, test, args.method)
        result["bd_time" if args.kind == "time" else "bd_rate"] = value
        line = f"{value:.2f}"
    print(line)
    if args.out_json:
        _write_json(args.out_json, result)
    return EXIT_OK


def cmd_complexity(args: argparse.Namespace, settings: Settings) -> int:
    features = complexity_features(_read_sequence(args.input, args.frames))
    print(f"E {features.E:.4f}")
    print(f"h {features.h:.4f}")
    print(json.dumps(features.model_dump()))
    if args.out_json:
        _write_json(args.out_json, features.model_dump())
    return EXIT_OK


def _format_optional(value: Optional[float]) -> str:
    return "" if value is None or not math.isfinite(value) else f"{value:.4f}"


def cmd_corpus(args: argparse.Namespace, settings: Settings) -> int:
    storage = FileStorage(args.out)
    rows = []
    for path in args.inputs:
        stem = os.path.splitext(os.path.basename(path))[0]
        experiment = ExperimentConfig(
            input=path,
            qps=args.qps or settings.qps,
            mode="both",
            out=os.path.join(args.out, stem),
            jobs=settings.jobs if args.jobs is None else args.jobs,
            frames=args.frames,
            max_mt_depth=settings.max_mt_depth if args.max_mt_depth is None else args.max_mt_depth,
            extended_qp_mode=settings.extended_qp_mode,
        )
        source = _read_sequence(path, args.frames)
        features = complexity_features(source)

        async def run():
            await storage.save_text(os.path.join(stem, "experiment.json"), experiment.canonical_json())
            return await _run_experiment(experiment, settings, storage, source, prefix=stem)

        _, comparison = asyncio.run(run())
        bd = comparison.bd
        rows.append({
            "clip": stem,
            "E": f"{features.E:.4f}",
            "h": f"{features.h:.4f}",
            "bdbr": _format_optional(bd.bd_rate),
            "bdt": _format_optional(bd.bd_time),
            "ratio": _format_optional(bd.efficiency_ratio),
        })
        print(f"{stem}: E {features.E:.4f} | h {features.h:.4f} | {_summary_line(comparison)}")

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CORPUS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    asyncio.run(storage.save_text("corpus.csv", buffer.getvalue()))
    return EXIT_OK


def _add_encoder_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--frames", type=_positive_int, default=None, help="encode at most this many frames")
    parser.add_argument("--max-mt-depth", type=int, default=None, help="maximum BT/TT nesting")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mevhas", description="Multi-resolution encoding testbed")
    subparsers = parser.add_subparsers(dest="command", required=True)

    encode = subparsers.add_parser("encode", help="encode one representation")
    encode.add_argument("--input", required=True, help="Y4M input")
    encode.add_argument("--qp", type=int, required=True, choices=range(52), metavar="QP")
    maps = encode.add_mutually_exclusive_group()
    maps.add_argument("--map", help="MEVHASMAP at the encode's padded resolution")
    maps.add_argument("--reference-map", help="half-resolution MEVHASMAP, interpolated 2x before use")
    encode.add_argument("--out-stats", help="EncodeStats JSON output")
    encode.add_argument("--out-record", help="partition record JSON-lines output")
    encode.add_argument("--out-map", help="MEVHASMAP of frame 0")
    _add_encoder_flags(encode)
    encode.set_defaults(handler=cmd_encode)

    ladder = subparsers.add_parser("ladder", help="run baseline and/or MEVHAS ladders")
    ladder.add_argument("--input", required=True, help="Y4M input")
    ladder.add_argument("--qps", type=_qp_list, default=None, help="comma-separated QPs (default 27,32,37,42)")
    ladder.add_argument("--mode", choices=("both", "baseline", "mevhas"), default="both")
    ladder.add_argument("--out", required=True, help="output directory")
    ladder.add_argument("--jobs", type=_positive_int, default=None, help="concurrent dependent encodes")
    ladder.add_argument("--map-override", type=_map_override, action="append",
                        help="QP=FILE: use a half-resolution MEVHASMAP instead of that reference encode")
    _add_encoder_flags(ladder)
    ladder.set_defaults(handler=cmd_ladder)

    bd = subparsers.add_parser("bd", help="Bjøntegaard deltas between two curves")
    bd.add_argument("--anchor", required=True, help="anchor CSV")
    bd.add_argument("--test", required=True, help="test CSV")
    bd.add_argument("--kind", choices=("rate", "time", "summary"), default="rate")
    bd.add_argument("--method", choices=("cubic", "pchip"), default="cubic")
    bd.add_argument("--out-json", help="JSON result output")
    bd.set_defaults(handler=cmd_bd)

    complexity = subparsers.add_parser("complexity", help="spatial/temporal complexity features")
    complexity.add_argument("--input", required=True, help="Y4M input")
    complexity.add_argument("--frames", type=_positive_int, default=None)
    complexity.add_argument("--out-json", help="JSON output")
    complexity.set_defaults(handler=cmd_complexity)

    corpus = subparsers.add_parser("corpus", help="both ladders plus complexity for several clips")
    corpus.add_argument("--inputs", nargs="+", required=True, help="Y4M inputs")
    corpus.add_argument("--qps", type=_qp_list, default=None)
    corpus.add_argument("--out", required=True, help="output directory")
    corpus.add_argument("--jobs", type=_positive_int, default=None)
    _add_encoder_flags(corpus)
    corpus.set_defaults(handler=cmd_corpus)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    settings = get_settings()
    logging.basicConfig(level=settings.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return args.handler(args, settings)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
