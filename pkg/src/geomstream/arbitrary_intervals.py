"""Turnstile MIS estimation for arbitrary-length unit-weight intervals.

Intervals are split into geometric length classes over a randomly
shifted nested grid (one grid level per class, cells growing with the
class).  The estimator samples grid cells per level; each sampled cell
owns a *column*: a sparse-recovery sketch holding, exactly, every
interval of level at most the column's level whose center falls in the
cell, plus an exact counter of intervals at higher levels sitting
vertically above the cell.  After the stream, a column decodes to its
member intervals; a column is a clean structure when it has a member at
its own level, nothing above, and (strictly) all lower members touch a
top-level member.  Per level, the mean exact optimum over sampled clean
columns, scaled by the level's distinct-cell estimate, gives the level
contribution; levels below a relative-contribution threshold are
zeroed.

Two modes:

* ``bounded_deg``: assumes intersection degree <= kappa_max; wide cells
  (class length over eps); two-sided ``alpha/(1+eps) <= Y <= (1+eps) alpha``.
* ``wmax``: parameterized by the max/min length ratio; cells twice the
  class's top length, and intervals crossing a cell boundary of their
  own level are discarded (a random shift discards at most about half),
  for ``alpha/(2+eps) <= Y <= alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import SCALE, NestedGrid, ShapeModeError, Update
from .hashing import derive_seed, hash64
from .reporting import EstimateReport, PartReport
from .sketch import L0Sketch, SparseRecoverySketch

_L0_FLUSH = 4096


@dataclass
class LevelConfig:
    eps: float
    n_hint: int
    max_ratio: int              # upper bound on length / min length
    seed: int = 0
    mode: str = "bounded_deg"
    kappa_max: int = 8
    column_k: int | None = None  # sparse-recovery budget per column
    column_rows: int = 3
    level_budget: int = 96       # live columns per level (shallowest evicted)
    samples_target: int | None = None
    cell_width: float | None = None  # cells per level: width * class top length
    normalize: float | None = None   # final division; default 1.0
    l0_s: int = 64
    l0_reps: int = 3
    l0_rows: int = 2
    l0_levels: int | None = None

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValueError("eps must be in (0, 1/2)")
        if self.l0_levels is None:
            self.l0_levels = max(4, math.ceil(math.log2(max(self.n_hint, 2))) + 3)
        if self.samples_target is None:
            self.samples_target = max(16, round(
                4 * math.log2(max(self.n_hint, 2))))


class _Column:
    """One sampled (level, cell) slot.

    Holds an exact recovery sketch of the member intervals (allocated
    on first member) plus exact net counters, keyed by (level, cell),
    of how many intervals currently occupy each higher-level cell that
    overlaps this column's span.  All state is linear, and a column is
    touched (hence created) by *every* update affecting it, so its
    final state equals what a structure allocated at stream start would
    hold.
    """

    __slots__ = ("cell", "depth", "above_occ", "members", "alive",
                 "pend_keys", "pend_signs", "_decoded", "_sr", "_sr_args")

    def __init__(self, cell: int, depth: int, sr_args: tuple):
        self.cell = cell
        self.depth = depth
        self.above_occ: dict[tuple[int, int], int] = {}
        self.members = 0        # net count of member intervals
        self.alive = True
        self.pend_keys: list[int] = []
        self.pend_signs: list[int] = []
        self._decoded = None
        self._sr: SparseRecoverySketch | None = None
        self._sr_args = sr_args

    def sr_nbytes(self) -> int:
        return self._sr.nbytes() if self._sr is not None else 0

    def apply_pending(self) -> None:
        if not self.pend_keys:
            return
        if self._sr is None:
            k, seed, rows = self._sr_args
            self._sr = SparseRecoverySketch(k, seed=seed, rows=rows)
        if len(self.pend_keys) < 32:
            for k, s in zip(self.pend_keys, self.pend_signs):
                self._sr.update(k, s)
        else:
            self._sr.apply_batch(np.array(self.pend_keys, dtype=np.uint64),
                                 np.array(self.pend_signs, dtype=np.int64))
        self.pend_keys.clear()
        self.pend_signs.clear()

    def decode_raw(self) -> tuple[dict[int, int], bool]:
        self.apply_pending()
        if self._sr is None:
            return {}, True
        return self._sr.decode()


class ArbitraryLengthEstimator:
    """Level estimator over a nested grid; see module docstring."""

    def __init__(self, cfg: LevelConfig, grid: NestedGrid | None = None):
        self.cfg = cfg
        if cfg.normalize is None:
            # wmax mode must stay below alpha (one-sided guarantee); the
            # bounded-degree window is two-sided and already centered
            cfg.normalize = 1.0 if cfg.mode == "bounded_deg" else 1.0 + cfg.eps
        self.grid = grid if grid is not None else NestedGrid(
            cfg.eps, cfg.max_ratio, derive_seed(cfg.seed, 0xA4B), cfg.mode,
            width=cfg.cell_width)
        t = self.grid.levels
        if cfg.column_k is None:
            if cfg.mode == "bounded_deg":
                cfg.column_k = min(512, max(32, cfg.kappa_max * (t + 1)))
            else:
                cfg.column_k = min(512, max(48, 6 * cfg.max_ratio))
        self.columns: list[dict[int, _Column]] = [dict() for _ in range(t)]
        self.depth_floor = [0] * t
        self._l0: list[L0Sketch | None] = [None] * t
        self._l0_buf: list[tuple[list[int], list[int]]] = [
            ([], []) for _ in range(t)]
        self._col_seeds = [derive_seed(cfg.seed, 0xC01, j) for j in range(t)]
        self.discarded_crossing = 0
        max_cell = max(self.grid.cell_lens)
        self._rel_bits = (2 * max_cell).bit_length()
        self._len_bits = (cfg.max_ratio * SCALE).bit_length() + 1
        if self._rel_bits + self._len_bits + 6 > 62:
            raise ValueError("length/coordinate ranges exceed key encoding")

    # -- member key encoding -------------------------------------------

    def _encode(self, level_j: int, cell: int, left: int, length: int,
                level_i: int) -> int:
        root_lo = cell * self.grid.cell_lens[level_j] + self.grid.shifts[level_j]
        rel = left - root_lo + self.grid.cell_lens[level_j]
        if not 0 <= rel < (1 << self._rel_bits):
            raise ValueError("member offset out of encodable range")
        return ((rel << self._len_bits | length) << 6) | level_i

    def _decode_key(self, level_j: int, cell: int, key: int
                    ) -> tuple[int, int, int]:
        """key -> (left, right, member level)."""
        level_i = key & 0x3F
        length = (key >> 6) & ((1 << self._len_bits) - 1)
        rel = key >> (6 + self._len_bits)
        root_lo = cell * self.grid.cell_lens[level_j] + self.grid.shifts[level_j]
        left = rel + root_lo - self.grid.cell_lens[level_j]
        return left, left + length, level_i

    # -- column management ----------------------------------------------

    def _column_for(self, level_j: int, cell: int) -> _Column | None:
        cols = self.columns[level_j]
        col = cols.get(cell)
        if col is not None:
            return col
        depth = self._cell_depth(level_j, cell)
        if depth < self.depth_floor[level_j]:
            return None
        if len(cols) >= self.cfg.level_budget:
            self._raise_floor(level_j)
            if depth < self.depth_floor[level_j]:
                return None
        col = _Column(cell, depth, (
            self.cfg.column_k,
            derive_seed(self.cfg.seed, 0x5EED, level_j, cell),
            self.cfg.column_rows))
        cols[cell] = col
        return col

    def _cell_depth(self, level_j: int, cell: int) -> int:
        """Leading zero count of the cell hash: sampled at depth m iff >= m."""
        h = hash64(cell & ((1 << 63) - 1), self._col_seeds[level_j])
        return 64 - h.bit_length()

    def _raise_floor(self, level_j: int) -> None:
        """Evict the shallowest columns; deeper depths stay usable."""
        cols = self.columns[level_j]
        floor = self.depth_floor[level_j]
        while len(cols) >= self.cfg.level_budget:
            floor += 1
            for cell in [c for c, col in cols.items() if col.depth < floor]:
                cols[cell].alive = False
                del cols[cell]
        self.depth_floor[level_j] = floor

    # -- ingest -----------------------------------------------------------

    def update(self, u: Update) -> None:
        if u.shape.kind != "interval":
            raise ShapeModeError("estimator accepts intervals only")
        if u.sign not in (-1, 1):
            raise ValueError("update sign must be +1 or -1")
        length = 2 * u.shape.radius
        level_i = self.grid.level_of(length)
        center = u.shape.center[0]
        if self.cfg.mode == "wmax" and self.grid.crosses_boundary(level_i, u.shape):
            self.discarded_crossing += u.sign
            return
        # level-i nonempty-cell distinct count
        cell_i = self.grid.cell_at(level_i, center)
        cells, signs = self._l0_buf[level_i]
        cells.append(cell_i + (1 << 41))
        signs.append(u.sign)
        if len(cells) >= _L0_FLUSH:
            self._flush_l0(level_i)
        # membership routing into every column at this level and above
        left = center - u.shape.radius
        for j in range(level_i, self.grid.levels):
            cell_j = self.grid.cell_at(j, center)
            col = self._column_for(j, cell_j)
            if col is not None:
                col.pend_keys.append(
                    self._encode(j, cell_j, left, length, level_i))
                col.pend_signs.append(u.sign)
                col.members += u.sign
        # occupancy bookkeeping: every column strictly below whose span
        # overlaps this interval's own cell learns that the cell is taken
        occ_lo, occ_hi = self.grid.span(level_i, cell_i)
        occ_key = (level_i, cell_i)
        for j in range(level_i):
            c_lo = self.grid.cell_at(j, occ_lo)
            c_hi = self.grid.cell_at(j, occ_hi - 1)
            for c in range(c_lo, c_hi + 1):
                col = self._column_for(j, c)
                if col is not None:
                    occ = col.above_occ
                    occ[occ_key] = occ.get(occ_key, 0) + u.sign

    def extend(self, updates) -> None:
        for u in updates:
            self.update(u)

    def _flush_l0(self, level: int) -> None:
        cells, signs = self._l0_buf[level]
        if not cells:
            return
        sk = self._l0[level]
        if sk is None:
            c = self.cfg
            sk = self._l0[level] = L0Sketch(
                eps=c.eps, reps=c.l0_reps, levels=c.l0_levels,
                seed=derive_seed(c.seed, 0x10, level), s=c.l0_s, rows=c.l0_rows)
        sk.apply_batch(np.array(cells, dtype=np.uint64),
                       np.array(signs, dtype=np.int64))
        cells.clear()
        signs.clear()

    # -- decoding and validation -----------------------------------------

    def _chain_clear(self, level_j: int, col: _Column, center: int) -> bool:
        """True iff no surviving interval occupies a cell above this point."""
        for ja in range(level_j + 1, self.grid.levels):
            if col.above_occ.get((ja, self.grid.cell_at(ja, center)), 0) > 0:
                return False
        return True

    def _decode_column(self, level_j: int, col: _Column) -> dict:
        if col._decoded is not None:
            return col._decoded
        raw, ok = col.decode_raw()
        members = []
        if ok:
            for key, cnt in raw.items():
                if cnt <= 0:
                    continue
                members.append(self._decode_key(level_j, col.cell, key))
        tops = [m for m in members if m[2] == level_j]
        lower = [m for m in members if m[2] != level_j]
        above = sum(v for v in col.above_occ.values() if v > 0)
        out = {"ok": ok, "members": members, "tops": tops,
               "above": above, "has_top": bool(tops)}
        if not ok:
            out["valid"], out["reason"] = False, "overflow"
        elif not members:
            out["valid"], out["reason"] = False, "empty"
        elif above != 0:
            out["valid"], out["reason"] = False, "interval-above"
        elif not tops:
            out["valid"], out["reason"] = False, "no-top-interval"
        elif not all(any(lo < t[1] and t[0] < hi for t in tops)
                     for lo, hi, _ in lower):
            out["valid"], out["reason"] = False, "non-intersecting-member"
        else:
            out["valid"], out["reason"] = True, ""
        # A member is owned here iff no cell above its center is occupied:
        # the column then tops out its chain.  Owned member sets across
        # columns partition the surviving intervals.
        if ok and tops:
            owned = [m for m in members
                     if self._chain_clear(level_j, col, (m[0] + m[1]) // 2)]
            out["opt"] = _greedy_mis(owned)
        else:
            out["opt"] = 0
        col._decoded = out
        return out

    def validate_structure(self, level_j: int, cell: int) -> dict:
        """Strict structure validity for the column at (level, cell)."""
        col = self.columns[level_j].get(cell)
        if col is None:
            return {"valid": False, "reason": "not-sampled"}
        d = self._decode_column(level_j, col)
        return {"valid": d["valid"], "reason": d["reason"]}

    # -- estimation ---------------------------------------------------------

    def finalize(self) -> EstimateReport:
        t = self.grid.levels
        for j in range(t):
            self._flush_l0(j)
        x = [float(self._l0[j].estimate()) if self._l0[j] is not None else 0.0
             for j in range(t)]
        x_total = sum(x)
        threshold = self.cfg.eps * x_total / t
        m_target = self.cfg.samples_target
        parts = []
        total = 0.0
        for j in range(t):
            pr = PartReport(part=j, naive=x[j])
            parts.append(pr)
            if x[j] <= 0:
                continue
            pr.threshold_by_class = {j: threshold}
            if x[j] <= threshold:
                pr.flags.append("below-threshold")
                continue
            m_j = max(0, math.ceil(math.log2(max(1.0, x[j] / m_target))))
            m_j = max(m_j, self.depth_floor[j])
            picked = None
            for m in range(m_j, m_j + 9):
                if m < self.depth_floor[j]:
                    continue
                sampled = [c for c in self.columns[j].values()
                           if c.alive and c.depth >= m]
                decs = [self._decode_column(j, c) for c in sampled]
                with_top = [d for d in decs
                            if d["has_top"] or not d["ok"]]
                if any(not d["ok"] for d in decs):
                    pr.flags.append(f"overflow-at-depth-{m}")
                picked = (m, with_top)
                break
            if picked is None:
                pr.flags.append("no-usable-depth")
                continue
            m, with_top = picked
            pr.branch = m
            if not with_top:
                pr.flags.append("empty-sample")
                continue
            opt_sum = sum(d["opt"] for d in with_top)
            y_j = x[j] * opt_sum / len(with_top)
            pr.estimate = y_j
            pr.count_by_class = {j: x[j]}
            pr.y_by_class = {j: y_j}
            total += y_j
        est = total / self.cfg.normalize
        flags = sorted({f for pr in parts for f in pr.flags})
        return EstimateReport(est, flags=flags, parts=parts)

    def estimate(self) -> float:
        return self.finalize().estimate

    def nbytes(self) -> int:
        total = sum(sk.nbytes() for sk in self._l0 if sk is not None)
        for cols in self.columns:
            total += sum(c.sr_nbytes() for c in cols.values())
        return total


def _greedy_mis(members: list[tuple[int, int, int]]) -> int:
    """Exact MIS of intervals given as (left, right, _) with strict overlap."""
    count = 0
    frontier = None
    for right, left in sorted((m[1], m[0]) for m in members):
        if frontier is None or left >= frontier:
            count += 1
            frontier = right
    return count


def reference_partition(shapes, grid: NestedGrid) -> dict:
    """Offline home column of every interval: the highest level whose cell
    (containing the interval's center) also hosts an interval of that level.

    Returns shape index -> (level, cell).  Used by tests to check that
    column assignment partitions the input.
    """
    occupied = [set() for _ in range(grid.levels)]
    lv = []
    for s in shapes:
        level = grid.level_of(2 * s.radius)
        lv.append(level)
        occupied[level].add(grid.cell_at(level, s.center[0]))
    out = {}
    for idx, s in enumerate(shapes):
        home = None
        for j in range(grid.levels - 1, lv[idx] - 1, -1):
            cell = grid.cell_at(j, s.center[0])
            if cell in occupied[j]:
                home = (j, cell)
                break
        out[idx] = home
    return out
