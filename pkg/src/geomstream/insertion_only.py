"""Insertion-only estimators for weighted unit-interval independent set.

The deterministic core stores, per grid cell (side ``1/eps``) and per
geometric weight class, only the interval with the leftmost left
endpoint and the one with the rightmost right endpoint.  The exact
weighted independent set over everything stored is then a
``(3/2 + eps)``-style approximation: ``2 beta / (3 + eps) <= Y <= beta``,
with no randomness beyond the grid shift.

The sampling wrapper keeps that store only for hash-sampled cells, at
per-weight-class rates selected by a power-of-two guess of the
optimum (guess picked post stream from the coarse turnstile estimator
run on the same stream), and scales per-cell optima back up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ClassTable
from .geometry import (SCALE, UNIT_RADIUS, GridSpec, ShapeModeError, Shape,
                       Update)
from .hashing import derive_seed, hash64
from .oracles import exact_wmis_intervals
from .reporting import EstimateReport, PartReport
from .unit_intervals import UnitIntervalNaiveEstimator
from .core import SamplingConfig


class ModelViolationError(ValueError):
    """Deletion fed to an insertion-only estimator."""


def _check_insert(u: Update) -> None:
    if u.shape.kind != "interval" or u.shape.radius != UNIT_RADIUS:
        raise ShapeModeError("estimator accepts unit intervals only")
    if u.sign != 1:
        raise ModelViolationError("insertion-only stream cannot delete")


class _CellStore:
    """Two extreme intervals per weight class, optional weight floor."""

    __slots__ = ("floor", "slots")

    def __init__(self, floor: int = 0):
        self.floor = floor
        # class -> [leftmost-left shape, rightmost-right shape]
        self.slots: dict[int, list[Shape]] = {}

    def add(self, cls: int, shape: Shape) -> None:
        if shape.weight < self.floor:
            return
        pair = self.slots.get(cls)
        if pair is None:
            self.slots[cls] = [shape, shape]
            return
        if shape.center[0] < pair[0].center[0]:
            pair[0] = shape
        if shape.center[0] > pair[1].center[0]:
            pair[1] = shape

    def shapes(self) -> list[Shape]:
        seen = set()
        out = []
        for pair in self.slots.values():
            for s in pair:
                key = (s.center[0], s.weight)
                if key not in seen:
                    seen.add(key)
                    out.append(s)
        return out

    def max_weight(self) -> int:
        return max((s.weight for pair in self.slots.values() for s in pair),
                   default=0)

    def size(self) -> int:
        return sum(len(p) for p in self.slots.values())


@dataclass
class SelectionConfig:
    eps: float
    n_hint: int
    w_max: int
    seed: int = 0
    rate_constant: float = 4.0
    class_budget: int = 256      # sampled cells kept per weight class
    threshold_scale: float | None = None  # zero classes below eps^2 X / b

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValueError("eps must be in (0, 1/2)")


class UnitIntervalSelection:
    """Deterministic insertion-only core; space grows with nonempty cells."""

    def __init__(self, cfg: SelectionConfig, grid: GridSpec | None = None):
        self.cfg = cfg
        self.grid = grid if grid is not None else GridSpec.random(
            round(SCALE / cfg.eps), derive_seed(cfg.seed, 0x5E1))
        self.classes = ClassTable(1.0 + cfg.eps, cfg.w_max)
        self.cells: dict[int, _CellStore] = {}

    def update(self, u: Update) -> None:
        _check_insert(u)
        cell = self.grid.cell_of(u.shape.center[0])
        store = self.cells.get(cell)
        if store is None:
            store = self.cells[cell] = _CellStore()
        store.add(self.classes.class_of(u.shape.weight), u.shape)

    def extend(self, updates) -> None:
        for u in updates:
            self.update(u)

    def stored_shapes(self) -> list[Shape]:
        out = []
        for store in self.cells.values():
            out.extend(store.shapes())
        return out

    def estimate(self) -> int:
        return exact_wmis_intervals(self.stored_shapes())

    def nbytes(self) -> int:
        return sum(store.size() for store in self.cells.values()) * 32


class InsertionOnlySamplingEstimator:
    """Polylog-space wrapper: per-class hash-sampled cells, scaled back up.

    Runs the coarse turnstile estimator alongside (insertions are a
    legal turnstile stream) to select the guess branch post stream.
    """

    def __init__(self, cfg: SelectionConfig, grid: GridSpec | None = None):
        self.cfg = cfg
        self.grid = grid if grid is not None else GridSpec.random(
            round(SCALE / cfg.eps), derive_seed(cfg.seed, 0x5E1))
        self.classes = ClassTable(1.0 + cfg.eps, cfg.w_max)
        b = self.classes.count
        self._floors = [math.ceil((cfg.eps ** 2) * self.classes.powers[i])
                        for i in range(b)]
        self._seeds = [derive_seed(cfg.seed, 0x5A3, i) for i in range(b)]
        # eligible classes for weight w: floor_i <= w, i.e. i <= eligible_to(w)
        self.stores: list[dict[int, _CellStore]] = [dict() for _ in range(b)]
        self.depth_floor = [0] * b
        self.g_max = math.ceil(math.log2(max(2, cfg.n_hint * cfg.w_max))) + 1
        self._rate_log = [
            math.floor(math.log2(max(
                1.0, cfg.rate_constant * (1.0 + cfg.eps) ** i
                * math.log2(max(cfg.n_hint, 2)) / (cfg.eps * cfg.eps))))
            for i in range(b)]
        self.naive = UnitIntervalNaiveEstimator(
            SamplingConfig(eps=cfg.eps, n_hint=cfg.n_hint, w_max=cfg.w_max,
                           seed=derive_seed(cfg.seed, 0xA1)))
        self.overflow = False

    def depth_of(self, i: int, g: int) -> int:
        return max(0, g - self._rate_log[i])

    def _cell_depth(self, i: int, cell: int) -> int:
        return 64 - hash64(cell & ((1 << 63) - 1), self._seeds[i]).bit_length()

    def update(self, u: Update) -> None:
        _check_insert(u)
        self.naive.update(u)
        w = u.shape.weight
        cell = self.grid.cell_of(u.shape.center[0])
        cls = self.classes.class_of(w)
        for i in range(self.classes.count):
            if self._floors[i] > w:
                break
            depth = self._cell_depth(i, cell)
            if depth < self.depth_floor[i]:
                continue
            cells = self.stores[i]
            store = cells.get(cell)
            if store is None:
                if len(cells) >= self.cfg.class_budget:
                    self._raise_floor(i)
                    if depth < self.depth_floor[i]:
                        continue
                store = cells[cell] = _CellStore(self._floors[i])
            store.add(cls, u.shape)

    def extend(self, updates) -> None:
        for u in updates:
            self.update(u)

    def _raise_floor(self, i: int) -> None:
        cells = self.stores[i]
        floor = self.depth_floor[i]
        while len(cells) >= self.cfg.class_budget:
            floor += 1
            drop = [c for c in cells if self._cell_depth(i, c) < floor]
            if not drop and floor > 64:
                self.overflow = True
                break
            for c in drop:
                del cells[c]
        self.depth_floor[i] = floor

    def finalize(self) -> EstimateReport:
        cfg = self.cfg
        b = self.classes.count
        naive = self.naive.estimate()
        v = 9.0 * (1.0 + cfg.eps) * naive
        g = min(max(0, math.ceil(math.log2(v))) if v >= 1.0 else 0, self.g_max)
        x_guess = float(2 ** g)
        thr_scale = cfg.threshold_scale
        if thr_scale is None:
            thr_scale = cfg.eps ** 2 / b
        threshold = thr_scale * x_guess
        parts = []
        total = 0.0
        for i in range(b):
            pr = PartReport(part=i, naive=naive, branch=g)
            parts.append(pr)
            m = max(self.depth_of(i, g), self.depth_floor[i])
            y_i = 0.0
            per_cell = 0
            for cell, store in self.stores[i].items():
                if self._cell_depth(i, cell) < m:
                    continue
                mw = store.max_weight()
                if mw == 0 or self.classes.class_of(mw) != i:
                    continue
                y_i += exact_wmis_intervals(store.shapes())
                per_cell += 1
            y_i *= float(2 ** m)
            pr.count_by_class = {i: per_cell}
            pr.threshold_by_class = {i: threshold}
            if y_i < threshold:
                y_i = 0.0
                pr.flags.append("below-threshold")
            pr.estimate = y_i / (1.0 + cfg.eps)
            pr.y_by_class = {i: y_i}
            total += y_i
        est = total / (1.0 + cfg.eps)
        flags = ["overflow"] if self.overflow else []
        return EstimateReport(est, flags=flags, parts=parts)

    def estimate(self) -> float:
        return self.finalize().estimate

    def nbytes(self) -> int:
        total = self.naive.nbytes()
        for cells in self.stores:
            total += sum(s.size() for s in cells.values()) * 32
        return total
