"""Occupancy grid: loading, collision queries and line-of-sight checks.

Cell ``(col, row)`` covers ``[ox + col*res, ox + (col+1)*res) x
[oy + row*res, oy + (row+1)*res)``; row 0 contains the origin.  The kernels
below work in continuous cell units ``u = (x - ox)/res, v = (y - oy)/res``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._jit import njit
from .errors import InvalidArgumentError, ParseError

MAGIC = "OCCMAP v1"
DEFAULT_INFLATION = 0.3


@njit
def _closed_span(lo, hi, n):
    # cells k with [k, k+1] meeting the closed interval [lo, hi], clipped to [0, n)
    k0 = int(math.ceil(lo - 1.0))
    k1 = int(math.floor(hi))
    if k0 < 0:
        k0 = 0
    if k1 > n - 1:
        k1 = n - 1
    return k0, k1


@njit
def _ordered(ua, va, ub, vb):
    if ub < ua or (ub == ua and vb < va):
        return ub, vb, ua, va
    return ua, va, ub, vb


@njit
def _column_rows(k, ua, va, ub, vb, h):
    lo_u = max(ua, float(k))
    hi_u = min(ub, float(k + 1))
    if ub == ua:
        lo_v, hi_v = min(va, vb), max(va, vb)
    else:
        slope = (vb - va) / (ub - ua)
        # endpoints taken verbatim so boundary-touching ends are not lost to rounding
        v0 = va if lo_u == ua else va + (lo_u - ua) * slope
        v1 = vb if hi_u == ub else va + (hi_u - ua) * slope
        lo_v, hi_v = min(v0, v1), max(v0, v1)
    return _closed_span(lo_v, hi_v, h)


@njit
def segment_blocked(occ, ua, va, ub, vb):
    """True if the closed segment touches any occupied cell."""
    h, w = occ.shape
    ua, va, ub, vb = _ordered(ua, va, ub, vb)
    c0, c1 = _closed_span(ua, ub, w)
    for k in range(c0, c1 + 1):
        r0, r1 = _column_rows(k, ua, va, ub, vb, h)
        for r in range(r0, r1 + 1):
            if occ[r, k]:
                return True
    return False


@njit
def supercover_into(h, w, ua, va, ub, vb, out):
    """Write every (col, row) the closed segment touches into ``out``; return the count."""
    ua, va, ub, vb = _ordered(ua, va, ub, vb)
    c0, c1 = _closed_span(ua, ub, w)
    n = 0
    for k in range(c0, c1 + 1):
        r0, r1 = _column_rows(k, ua, va, ub, vb, h)
        for r in range(r0, r1 + 1):
            out[n, 0] = k
            out[n, 1] = r
            n += 1
    return n


@njit
def point_collides(occ, u, v, radius):
    """Out of bounds, inside an occupied cell, or an occupied center within ``radius`` (cell units)."""
    h, w = occ.shape
    if not (u >= 0.0 and v >= 0.0 and u < w and v < h):
        return True
    if occ[int(math.floor(v)), int(math.floor(u))]:
        return True
    c0 = max(int(math.ceil(u - radius - 0.5)), 0)
    c1 = min(int(math.floor(u + radius - 0.5)), w - 1)
    r0 = max(int(math.ceil(v - radius - 0.5)), 0)
    r1 = min(int(math.floor(v + radius - 0.5)), h - 1)
    rr = radius * radius
    for r in range(r0, r1 + 1):
        dv = r + 0.5 - v
        for k in range(c0, c1 + 1):
            if occ[r, k]:
                du = k + 0.5 - u
                if du * du + dv * dv <= rr:
                    return True
    return False


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    width: int
    height: int
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)
    cells: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidArgumentError("grid dimensions must be positive")
        if not self.resolution > 0:
            raise InvalidArgumentError("resolution must be positive")
        cells = self.cells
        if cells is None:
            cells = np.zeros((self.height, self.width), dtype=np.bool_)
        cells = np.ascontiguousarray(cells, dtype=np.bool_)
        if cells.size != self.width * self.height:
            raise InvalidArgumentError(
                f"cell array has {cells.size} entries, expected {self.width * self.height}"
            )
        cells = cells.reshape(self.height, self.width)
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def empty(cls, width: int, height: int, resolution: float, origin=(0.0, 0.0)) -> "OccupancyGrid":
        return cls(width, height, resolution, origin)

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            (self.width, self.height, self.resolution, self.origin)
            == (other.width, other.height, other.resolution, other.origin)
            and bool(np.array_equal(self.cells, other.cells))
        )

    @property
    def extent(self) -> tuple[float, float, float, float]:
        ox, oy = self.origin
        return ox, ox + self.width * self.resolution, oy, oy + self.height * self.resolution

    def to_cell_units(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.origin[0]) / self.resolution, (y - self.origin[1]) / self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        u, v = self.to_cell_units(x, y)
        return math.floor(u), math.floor(v)

    def world_of(self, col: int, row: int) -> tuple[float, float]:
        """Center of a cell in world coordinates."""
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def in_bounds(self, x: float, y: float) -> bool:
        u, v = self.to_cell_units(x, y)
        return 0.0 <= u < self.width and 0.0 <= v < self.height

    def is_occupied(self, col: int, row: int) -> bool:
        if not (0 <= col < self.width and 0 <= row < self.height):
            raise InvalidArgumentError(f"cell ({col}, {row}) outside the grid")
        return bool(self.cells[row, col])

    def occupied_count(self) -> int:
        return int(self.cells.sum())

    def with_obstacles(self, boxes) -> "OccupancyGrid":
        """Copy with every cell whose center lies in one of the ``(x0, y0, x1, y1)`` boxes set."""
        cells = self.cells.copy()
        cx = self.origin[0] + (np.arange(self.width) + 0.5) * self.resolution
        cy = self.origin[1] + (np.arange(self.height) + 0.5) * self.resolution
        for x0, y0, x1, y1 in boxes:
            cols = (cx >= min(x0, x1)) & (cx <= max(x0, x1))
            rows = (cy >= min(y0, y1)) & (cy <= max(y0, y1))
            cells[np.ix_(rows, cols)] = True
        return OccupancyGrid(self.width, self.height, self.resolution, self.origin, cells)

    def dumps(self) -> str:
        ox, oy = self.origin
        lines = [
            MAGIC,
            f"width {self.width} height {self.height} resolution {self.resolution!r} origin {ox!r} {oy!r}",
        ]
        lines.extend("".join("1" if c else "0" for c in row) for row in self.cells)
        return "\n".join(lines) + "\n"


def loads_map(text: str) -> OccupancyGrid:
    """Parse an ``OCCMAP v1`` document."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ParseError(f"expected header {MAGIC!r}", line=1)
    if len(lines) < 2:
        raise ParseError("missing dimension line", line=2)
    tok = lines[1].split()
    if len(tok) != 9 or tok[0::2][:4] != ["width", "height", "resolution", "origin"]:
        raise ParseError(
            "expected 'width <int> height <int> resolution <float> origin <float> <float>'", line=2
        )
    try:
        width, height = int(tok[1]), int(tok[3])
        resolution = float(tok[5])
        origin = (float(tok[7]), float(tok[8]))
    except ValueError as exc:
        raise ParseError(f"bad number in header: {exc}", line=2) from None
    if width <= 0 or height <= 0 or not resolution > 0 or not all(map(math.isfinite, origin)):
        raise ParseError("dimensions and resolution must be positive", line=2)

    rows = lines[2:]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != height:
        raise ParseError(f"expected {height} rows, found {len(rows)}", line=2 + len(rows))
    cells = np.zeros((height, width), dtype=np.bool_)
    for r, row in enumerate(rows):
        lineno = r + 3
        row = row.rstrip("\r\n")
        if len(row) != width:
            raise ParseError(f"row {r} has {len(row)} cells, expected {width}", line=lineno)
        for c, ch in enumerate(row):
            if ch == "1":
                cells[r, c] = True
            elif ch != "0":
                raise ParseError(f"row {r} col {c}: unknown cell character {ch!r}", line=lineno)
    return OccupancyGrid(width, height, resolution, origin, cells)


def load_map(source) -> OccupancyGrid:
    """Load a map from a path or an open text stream."""
    if hasattr(source, "read"):
        return loads_map(source.read())
    return loads_map(Path(source).read_text())


def is_collision(grid: OccupancyGrid, point, inflation: float = DEFAULT_INFLATION) -> bool:
    if inflation < 0:
        raise InvalidArgumentError("inflation must be non-negative")
    u, v = grid.to_cell_units(float(point[0]), float(point[1]))
    return bool(point_collides(grid.cells, u, v, inflation / grid.resolution))


def is_occluded(grid: OccupancyGrid, a, b) -> bool:
    """Whether the straight segment a-b touches an occupied cell."""
    for p in (a, b):
        if not grid.in_bounds(float(p[0]), float(p[1])):
            raise InvalidArgumentError(f"segment endpoint {tuple(p)} outside the map")
    ua, va = grid.to_cell_units(float(a[0]), float(a[1]))
    ub, vb = grid.to_cell_units(float(b[0]), float(b[1]))
    return bool(segment_blocked(grid.cells, ua, va, ub, vb))


def supercover_cells(grid: OccupancyGrid, a, b) -> set[tuple[int, int]]:
    """All in-grid cells (col, row) touched by the closed segment a-b."""
    ua, va = grid.to_cell_units(float(a[0]), float(a[1]))
    ub, vb = grid.to_cell_units(float(b[0]), float(b[1]))
    out = np.empty((grid.width * grid.height, 2), dtype=np.int64)
    n = supercover_into(grid.height, grid.width, ua, va, ub, vb, out)
    return {(int(c), int(r)) for c, r in out[:n]}
