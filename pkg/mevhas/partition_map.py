"""Per-cell CU geometry maps: extraction, 2x interpolation, lookup and the MEVHASMAP format."""
import logging
from typing import Optional, Tuple

import numpy as np

from .codec import PartitionRecord

logger = logging.getLogger(__name__)

MAP_MAGIC = "MEVHASMAP"
MAP_VERSION = 1
DEFAULT_CELL_SIZE = 8
DEFAULT_CTU_SIZE = 128
LEGAL_SIZES = frozenset({8, 16, 32, 64, 128})


class MapParseError(ValueError):
    """Malformed MEVHASMAP text; `line` is 1-based."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


class PartitionMap:
    """Grid of (cu_width, cu_height) per cell over a padded frame."""

    def __init__(
        self,
        frame_width: int,
        frame_height: int,
        widths: np.ndarray,
        heights: np.ndarray,
        cell_size: int = DEFAULT_CELL_SIZE,
        qp: Optional[int] = None,
    ):
        if frame_width % cell_size or frame_height % cell_size:
            raise ValueError(
                f"frame {frame_width}x{frame_height} is not a multiple of the {cell_size}-pixel cell"
            )
        shape = (frame_height // cell_size, frame_width // cell_size)
        widths = np.array(widths, dtype=np.int32)
        heights = np.array(heights, dtype=np.int32)
        for name, grid in (("widths", widths), ("heights", heights)):
            if grid.shape != shape:
                raise ValueError(f"{name} grid is {grid.shape}, expected {shape}")
            if not np.isin(grid, sorted(LEGAL_SIZES)).all():
                raise ValueError(f"{name} hold values outside {sorted(LEGAL_SIZES)}")
            grid.setflags(write=False)
        self.frame_width = frame_width
        self.frame_height = frame_height
        self.cell_size = cell_size
        self.qp = qp
        self.widths = widths
        self.heights = heights

    @classmethod
    def uniform(cls, frame_width: int, frame_height: int, width: int, height: int,
                cell_size: int = DEFAULT_CELL_SIZE, qp: Optional[int] = None) -> "PartitionMap":
        shape = (frame_height // cell_size, frame_width // cell_size)
        return cls(frame_width, frame_height, np.full(shape, width), np.full(shape, height), cell_size, qp)

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return self.widths.shape

    def cell(self, x: int, y: int) -> Tuple[int, int]:
        if not (0 <= x < self.frame_width and 0 <= y < self.frame_height):
            raise IndexError(f"({x}, {y}) lies outside the {self.frame_width}x{self.frame_height} map")
        row, col = y // self.cell_size, x // self.cell_size
        return int(self.widths[row, col]), int(self.heights[row, col])

    def max_sz(self, x: int, y: int) -> int:
        width, height = self.cell(x, y)
        return width * height

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionMap):
            return NotImplemented
        return (
            (self.frame_width, self.frame_height, self.cell_size, self.qp)
            == (other.frame_width, other.frame_height, other.cell_size, other.qp)
            and np.array_equal(self.widths, other.widths)
            and np.array_equal(self.heights, other.heights)
        )

    def __repr__(self) -> str:
        return f"PartitionMap({self.frame_width}x{self.frame_height}, cell {self.cell_size}, qp {self.qp})"


def max_sz_lookup(partition_map: PartitionMap, x: int, y: int) -> int:
    return partition_map.max_sz(x, y)


def extract_map(record: PartitionRecord, frame_width: int, frame_height: int,
                frame_index: int = 0, cell_size: int = DEFAULT_CELL_SIZE,
                qp: Optional[int] = None) -> PartitionMap:
    """Sample the CU containing each cell's top-left pixel from one frame of `record`."""
    if (record.width, record.height) != (frame_width, frame_height):
        raise ValueError(
            f"record covers {record.width}x{record.height}, expected {frame_width}x{frame_height}"
        )
    record.validate_tiling()

    shape = (frame_height // cell_size, frame_width // cell_size)
    widths = np.zeros(shape, dtype=np.int32)
    heights = np.zeros(shape, dtype=np.int32)
    for cu in record.frame(frame_index):
        # cells whose top-left pixel falls inside the CU
        rows = slice(-(-cu.y // cell_size), -(-(cu.y + cu.height) // cell_size))
        cols = slice(-(-cu.x // cell_size), -(-(cu.x + cu.width) // cell_size))
        widths[rows, cols] = cu.width
        heights[rows, cols] = cu.height
    return PartitionMap(frame_width, frame_height, widths, heights, cell_size, qp)


def interpolate_2x(low: PartitionMap) -> PartitionMap:
    """Double the frame, keep the cell size, and double each CU dimension up to the CTU size."""
    widths = np.minimum(2 * low.widths, DEFAULT_CTU_SIZE).repeat(2, axis=0).repeat(2, axis=1)
    heights = np.minimum(2 * low.heights, DEFAULT_CTU_SIZE).repeat(2, axis=0).repeat(2, axis=1)
    return PartitionMap(2 * low.frame_width, 2 * low.frame_height, widths, heights, low.cell_size, low.qp)


def crop_map(partition_map: PartitionMap, frame_width: int, frame_height: int) -> PartitionMap:
    """Top-left `frame_width` x `frame_height` region of the map."""
    if frame_width > partition_map.frame_width or frame_height > partition_map.frame_height:
        raise ValueError(
            f"cannot crop a {partition_map.frame_width}x{partition_map.frame_height} map "
            f"to {frame_width}x{frame_height}"
        )
    if (frame_width, frame_height) == (partition_map.frame_width, partition_map.frame_height):
        return partition_map
    rows = frame_height // partition_map.cell_size
    cols = frame_width // partition_map.cell_size
    return PartitionMap(
        frame_width, frame_height,
        partition_map.widths[:rows, :cols], partition_map.heights[:rows, :cols],
        partition_map.cell_size, partition_map.qp,
    )


def map_filename(stem: str, frame_index: int) -> str:
    return f"{stem}.f{frame_index}.mevhasmap"


def serialize_map(partition_map: PartitionMap, ctu_size: int = DEFAULT_CTU_SIZE) -> str:
    """Header line, then per CTU in raster order one line of widths and one of heights."""
    if partition_map.frame_width % ctu_size or partition_map.frame_height % ctu_size:
        raise ValueError(
            f"map {partition_map.frame_width}x{partition_map.frame_height} is not a whole number of CTUs"
        )
    cells = ctu_size // partition_map.cell_size
    qp = -1 if partition_map.qp is None else partition_map.qp
    lines = [
        f"{MAP_MAGIC} {MAP_VERSION} {partition_map.frame_width} {partition_map.frame_height} "
        f"{ctu_size} {partition_map.cell_size} {qp}"
    ]
    for row in range(0, partition_map.widths.shape[0], cells):
        for col in range(0, partition_map.widths.shape[1], cells):
            for grid in (partition_map.widths, partition_map.heights):
                lines.append(" ".join(map(str, grid[row:row + cells, col:col + cells].ravel())))
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> Tuple[int, int, int, int, Optional[int]]:
    tokens = line.split()
    if len(tokens) != 7 or tokens[0] != MAP_MAGIC:
        raise MapParseError(f"expected '{MAP_MAGIC} <version> <w> <h> <ctu> <cell> <qp>' at line 1", 1)
    try:
        version, frame_width, frame_height, ctu_size, cell_size, qp = (int(t) for t in tokens[1:])
    except ValueError:
        raise MapParseError("non-integer header field at line 1", 1) from None
    if version != MAP_VERSION:
        raise MapParseError(f"unsupported map version {version} at line 1", 1)
    if ctu_size <= 0 or cell_size <= 0 or ctu_size % cell_size:
        raise MapParseError(f"cell size {cell_size} does not divide CTU size {ctu_size} at line 1", 1)
    if frame_width <= 0 or frame_height <= 0 or frame_width % ctu_size or frame_height % ctu_size:
        raise MapParseError(
            f"frame {frame_width}x{frame_height} is not a positive multiple of CTU {ctu_size} at line 1", 1
        )
    return frame_width, frame_height, ctu_size, cell_size, (None if qp < 0 else qp)


def parse_map(text: str) -> PartitionMap:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MapParseError("empty map", 1)
    frame_width, frame_height, ctu_size, cell_size, qp = _parse_header(lines[0])

    cells = ctu_size // cell_size
    per_line = cells * cells
    ctu_rows, ctu_cols = frame_height // ctu_size, frame_width // ctu_size
    expected_lines = 1 + 2 * ctu_rows * ctu_cols
    if len(lines) != expected_lines:
        raise MapParseError(
            f"expected {expected_lines - 1} data lines for a {frame_width}x{frame_height} map, "
            f"got {len(lines) - 1}",
            min(len(lines), expected_lines) + 1,
        )

    grids = [
        np.zeros((frame_height // cell_size, frame_width // cell_size), dtype=np.int32)
        for _ in range(2)
    ]
    for index, line in enumerate(lines[1:]):
        line_number = index + 2
        try:
            values = [int(token) for token in line.split()]
        except ValueError:
            raise MapParseError(f"non-integer value at line {line_number}", line_number) from None
        if len(values) != per_line:
            raise MapParseError(f"expected {per_line} values at line {line_number}", line_number)
        bad = next((v for v in values if v not in LEGAL_SIZES), None)
        if bad is not None:
            raise MapParseError(
                f"value {bad} at line {line_number} is not a power of two in [8, 128]", line_number
            )
        ctu, which = divmod(index, 2)
        row, col = divmod(ctu, ctu_cols)
        grids[which][row * cells:(row + 1) * cells, col * cells:(col + 1) * cells] = (
            np.array(values, dtype=np.int32).reshape(cells, cells)
        )

    return PartitionMap(frame_width, frame_height, grids[0], grids[1], cell_size, qp)
