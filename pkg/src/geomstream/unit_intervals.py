"""Turnstile estimators for weighted maximum independent set of unit intervals.

Both estimators impose a randomly shifted unit grid, snap every
interval to the cell containing its center, and split cells by parity:
within one parity class, intervals in distinct cells never intersect
and intervals sharing a cell always do, so each parity's optimum is the
sum of per-cell maximum weights and the true optimum is at least half
the better parity.

:class:`UnitIntervalNaiveEstimator` gives a coarse (9+eps)-style
guarantee from distinct-count sketches alone;
:class:`UnitIntervalSamplingEstimator` refines it to ``(2+eps)``:
``beta / (2 (1+eps)) <= Y <= beta`` with constant probability.
"""

from __future__ import annotations

from .core import CellPartitionEstimator, SamplingConfig
from .geometry import (SCALE, UNIT_RADIUS, GridSpec, ShapeModeError, Update,
                       encode_cell, snap_interval)
from .hashing import derive_seed
from .reporting import EstimateReport


def _check_unit(u: Update) -> None:
    if u.shape.kind != "interval" or u.shape.radius != UNIT_RADIUS:
        raise ShapeModeError("estimator accepts unit intervals only")
    if u.sign not in (-1, 1):
        raise ValueError("update sign must be +1 or -1")


class _UnitIntervalBase:
    def __init__(self, cfg: SamplingConfig, sampling: bool,
                 grid: GridSpec | None = None):
        self.cfg = cfg
        self.grid = grid if grid is not None else GridSpec.random(
            SCALE, derive_seed(cfg.seed, 0x619D))
        self.core = CellPartitionEstimator(cfg, n_parts=2, sampling=sampling)

    def update(self, u: Update) -> None:
        _check_unit(u)
        cell, parity = snap_interval(self.grid, u.shape)
        self.core.add(parity, encode_cell(cell), u.shape.weight, u.sign)

    def extend(self, updates) -> None:
        for u in updates:
            self.update(u)

    def nbytes(self) -> int:
        return self.core.nbytes()


class UnitIntervalNaiveEstimator(_UnitIntervalBase):
    """Coarse estimator: ``beta / (9 (1+eps)) <= X <= beta`` w.h.p."""

    def __init__(self, cfg: SamplingConfig, grid: GridSpec | None = None):
        super().__init__(cfg, sampling=False, grid=grid)

    def finalize(self) -> EstimateReport:
        return self.core.naive_report()

    def estimate(self) -> float:
        return self.finalize().estimate


class UnitIntervalSamplingEstimator(_UnitIntervalBase):
    """Refined estimator: ``beta / (2 (1+eps)) <= Y <= beta`` w.c.p.

    Runs the coarse estimator on the same grid as a side channel; its
    value selects the guess branch after the stream ends.
    """

    def __init__(self, cfg: SamplingConfig, grid: GridSpec | None = None):
        super().__init__(cfg, sampling=True, grid=grid)

    def finalize(self) -> EstimateReport:
        return self.core.finalize()

    def estimate(self) -> float:
        return self.finalize().estimate
