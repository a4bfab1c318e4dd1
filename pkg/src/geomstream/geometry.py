"""Shapes, scaled-integer coordinates, shifted grids, hexagonal packing.

All coordinates are integers after multiplying by ``SCALE = 2**20``:
"one unit" is ``SCALE``.  That keeps every cell assignment and every
intersection predicate exact (no floating-point boundary ambiguity).
Intersection is *strict*: two shapes intersect iff their center
distance is strictly less than the sum of radii, so tangent shapes
count as disjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hashing import derive_seed, hash64, uniform_in

SCALE = 1 << 20
UNIT_RADIUS = SCALE // 2  # unit-diameter shapes: interval length / disk diameter = SCALE

# sqrt(3)/2 in fixed point.  908094 is the smallest integer making the
# lattice basis vector at least one unit long, which keeps every
# same-class disjointness claim exact in integer arithmetic (relative
# error vs sqrt(3)/2 is ~5e-7).
HEX_ROW = 908094

DISJOINT_MARGIN = SCALE >> 10  # slack allowed by fixed-point thresholds


class ShapeModeError(ValueError):
    """Shape rejected by an estimator's declared input mode."""


@dataclass(frozen=True, slots=True)
class Shape:
    kind: str                 # "interval" | "disk"
    center: tuple[int, ...]   # 1 or 2 scaled-integer coordinates
    radius: int               # half-length / disk radius, scaled
    weight: int = 1


@dataclass(frozen=True, slots=True)
class Update:
    sign: int                 # +1 insert, -1 delete
    shape: Shape
    uid: int | None = None


def unit_interval(center: int, weight: int = 1) -> Shape:
    return Shape("interval", (center,), UNIT_RADIUS, weight)


def interval(center: int, radius: int, weight: int = 1) -> Shape:
    return Shape("interval", (center,), radius, weight)


def unit_disk(x: int, y: int, weight: int = 1) -> Shape:
    return Shape("disk", (x, y), UNIT_RADIUS, weight)


def shapes_intersect(a: Shape, b: Shape) -> bool:
    """Strict intersection predicate, exact integer arithmetic."""
    if a.kind != b.kind:
        raise ValueError("mixed shape kinds")
    if a.kind == "interval":
        return abs(a.center[0] - b.center[0]) < a.radius + b.radius
    dx = a.center[0] - b.center[0]
    dy = a.center[1] - b.center[1]
    rr = a.radius + b.radius
    return dx * dx + dy * dy < rr * rr


# ---------------------------------------------------------------------------
# 1-d shifted grid


@dataclass(frozen=True, slots=True)
class GridSpec:
    cell_len: int
    shift: int

    @classmethod
    def random(cls, cell_len: int, seed: int) -> "GridSpec":
        return cls(cell_len, uniform_in(seed, cell_len))

    def cell_of(self, x: int) -> int:
        return (x - self.shift) // self.cell_len

    def cells_of(self, xs: np.ndarray) -> np.ndarray:
        return (xs - self.shift) // self.cell_len

    def span(self, cell: int) -> tuple[int, int]:
        lo = cell * self.cell_len + self.shift
        return lo, lo + self.cell_len


def parity_of(cell: int) -> int:
    """0 for even cells, 1 for odd."""
    return cell % 2


def snap_interval(grid: GridSpec, shape: Shape) -> tuple[int, int]:
    """Cell containing the interval's center, and its parity."""
    if shape.kind != "interval":
        raise ShapeModeError("snap_interval expects an interval")
    cell = grid.cell_of(shape.center[0])
    return cell, parity_of(cell)


# ---------------------------------------------------------------------------
# Nested grid: one grid per length class, geometrically growing cells


class NestedGrid:
    """Per-length-class grids with a shared proportionally scaled shift.

    Lengths (scaled integers) are split into classes
    ``[(1+eps)^i, (1+eps)^(i+1))``.  Level-i cells have length
    ``(1+eps)^(i+1)/eps`` in bounded-degree mode, or
    ``2 (1+eps)^(i+1)`` in max-ratio mode (twice the class's top length,
    so a random shift crosses an interval with probability <= 1/2).
    """

    def __init__(self, eps: float, max_ratio: int, seed: int,
                 mode: str = "bounded_deg", width: float | None = None):
        if mode not in ("bounded_deg", "wmax"):
            raise ValueError("mode must be 'bounded_deg' or 'wmax'")
        self.eps = eps
        self.max_ratio = max_ratio
        self.mode = mode
        if width is None:
            width = 1.0 / eps if mode == "bounded_deg" else 2.0
        self.width = width
        self.levels = max(1, math.ceil(math.log(max_ratio, 1.0 + eps))) + 1
        self.len_bounds = [round((1.0 + eps) ** i * SCALE)
                           for i in range(self.levels + 1)]
        self.cell_lens = [max(SCALE, round((1.0 + eps) ** (i + 1) * width * SCALE))
                          for i in range(self.levels)]
        u = hash64(0, derive_seed(seed, 0x6E67))
        self.shifts = [(u * L) >> 64 for L in self.cell_lens]

    def level_of(self, length: int) -> int:
        if length < SCALE or length > self.max_ratio * SCALE:
            raise ShapeModeError(
                f"interval length {length} outside [1, {self.max_ratio}] units")
        lo, hi = 0, self.levels - 1
        # len_bounds is short; linear scan from the top is fine and exact
        for i in range(self.levels - 1, -1, -1):
            if length >= self.len_bounds[i]:
                return i
        return 0

    def cell_at(self, level: int, x: int) -> int:
        return (x - self.shifts[level]) // self.cell_lens[level]

    def span(self, level: int, cell: int) -> tuple[int, int]:
        lo = cell * self.cell_lens[level] + self.shifts[level]
        return lo, lo + self.cell_lens[level]

    def crosses_boundary(self, level: int, shape: Shape) -> bool:
        c = shape.center[0]
        return (self.cell_at(level, c - shape.radius)
                != self.cell_at(level, c + shape.radius))


def snap_nested(ng: NestedGrid, shape: Shape) -> tuple[int, int, bool]:
    """(length class, cell of center at that level, crosses-boundary flag)."""
    if shape.kind != "interval":
        raise ShapeModeError("snap_nested expects an interval")
    level = ng.level_of(2 * shape.radius)
    cell = ng.cell_at(level, shape.center[0])
    return level, cell, ng.crosses_boundary(level, shape)


# ---------------------------------------------------------------------------
# Hexagonal circle packing with four equivalence classes


class HexPacking:
    """Randomly shifted hexagonal packing of radius-1/2 circles.

    Lattice basis ``v1 = (SCALE, 0)``, ``v2 = (SCALE/2, HEX_ROW)``;
    circle (a, b) is centered at ``shift + a*v1 + b*v2``.  The class of
    a circle is ``(a mod 2, b mod 2)`` -- the four cosets of the
    index-4 sublattice -- which guarantees distinct same-class circle
    centers are at least ``2*SCALE`` apart, so radius-1/2 disks whose
    centers fall strictly inside distinct same-class circles are
    disjoint.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.sx = uniform_in(seed, SCALE, tag=1)
        self.sy = uniform_in(seed, HEX_ROW, tag=2)

    def center(self, a: int, b: int) -> tuple[int, int]:
        return (self.sx + a * SCALE + b * (SCALE // 2), self.sy + b * HEX_ROW)

    @staticmethod
    def class_of(a: int, b: int) -> int:
        """Equivalence class index in 0..3."""
        return 2 * (a % 2) + (b % 2)

    def snap(self, x: int, y: int) -> tuple[int, int, int] | None:
        """Packing circle strictly containing (x, y), or None (gap)."""
        b0 = round((y - self.sy) / HEX_ROW)
        a0 = round((x - self.sx - b0 * (SCALE // 2)) / SCALE)
        r2 = UNIT_RADIUS * UNIT_RADIUS
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                a, b = a0 + da, b0 + db
                cx, cy = self.center(a, b)
                dx, dy = x - cx, y - cy
                if dx * dx + dy * dy < r2:
                    return a, b, self.class_of(a, b)
        return None

    def snap_batch(self, xs: np.ndarray, ys: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized snap: (inside mask, a, b); a/b valid where inside."""
        b0 = np.round((ys - self.sy) / HEX_ROW).astype(np.int64)
        a0 = np.round((xs - self.sx - b0 * (SCALE // 2)) / SCALE).astype(np.int64)
        best_a = np.zeros_like(a0)
        best_b = np.zeros_like(b0)
        inside = np.zeros(len(xs), dtype=bool)
        r2 = UNIT_RADIUS * UNIT_RADIUS
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                a, b = a0 + da, b0 + db
                dx = xs - (self.sx + a * SCALE + b * (SCALE // 2))
                dy = ys - (self.sy + b * HEX_ROW)
                hit = (dx * dx + dy * dy < r2) & ~inside
                best_a[hit] = a[hit]
                best_b[hit] = b[hit]
                inside |= hit
        return inside, best_a, best_b


def snap_disk(hp: HexPacking, shape: Shape) -> tuple[int, int, int] | None:
    if shape.kind != "disk":
        raise ShapeModeError("snap_disk expects a disk")
    return hp.snap(shape.center[0], shape.center[1])


def circles_same_class_disjointness_check(hp: HexPacking, patch: int = 20,
                                          boundary_samples: int = 64) -> dict:
    """Exhaustive verification over a patch of the packing.

    Checks, over a ``patch x patch`` block of circles: distinct
    same-class centers at distance >= 2*SCALE, adjacent circles in
    different classes, and sampled boundary point pairs across nearby
    same-class circles at distance >= SCALE (all up to the fixed-point
    margin).
    """
    centers = {}
    for a in range(patch):
        for b in range(patch):
            centers[(a, b)] = hp.center(a, b)
    min_center = None
    min_point = None
    items = sorted(centers.items())
    angles = [2 * math.pi * t / boundary_samples for t in range(boundary_samples)]
    ring = [(math.cos(t), math.sin(t)) for t in angles]
    for i, ((a1, b1), c1) in enumerate(items):
        for (a2, b2), c2 in items[i + 1:]:
            if hp.class_of(a1, b1) != hp.class_of(a2, b2):
                continue
            d2 = (c1[0] - c2[0]) ** 2 + (c1[1] - c2[1]) ** 2
            d = math.sqrt(d2)
            if min_center is None or d < min_center:
                min_center = d
            if d > 3.5 * SCALE:
                continue  # far pairs cannot produce close boundary points
            for ux, uy in ring:
                p1 = (c1[0] + ux * UNIT_RADIUS, c1[1] + uy * UNIT_RADIUS)
                for vx, vy in ring:
                    p2 = (c2[0] + vx * UNIT_RADIUS, c2[1] + vy * UNIT_RADIUS)
                    pd = math.hypot(p1[0] - p2[0], p1[1] - p2[1])
                    if min_point is None or pd < min_point:
                        min_point = pd
    adjacent_distinct = all(
        hp.class_of(0, 0) != hp.class_of(*nb)
        for nb in ((1, 0), (0, 1), (1, -1)))
    return {
        "min_same_class_center_dist": min_center,
        "min_same_class_point_dist": min_point,
        "adjacent_circles_distinct_classes": adjacent_distinct,
        "center_ok": min_center >= 2 * SCALE - DISJOINT_MARGIN,
        "point_ok": min_point >= SCALE - DISJOINT_MARGIN,
    }


# ---------------------------------------------------------------------------
# Key encodings for sketch universes


def encode_cell(cell: int) -> int:
    """1-d cell index -> unsigned key (injective for |cell| < 2^41)."""
    u = cell + (1 << 41)
    if not 0 <= u < (1 << 42):
        raise ValueError("cell index out of encodable range")
    return u


def encode_circle(a: int, b: int) -> int:
    """Hex lattice coordinates -> unsigned key (|a|,|b| < 2^20)."""
    ua, ub = a + (1 << 20), b + (1 << 20)
    if not (0 <= ua < (1 << 21) and 0 <= ub < (1 << 21)):
        raise ValueError("lattice coordinate out of encodable range")
    return (ua << 21) | ub
