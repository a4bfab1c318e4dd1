"""Turnstile estimators for weighted maximum independent set of unit-diameter disks.

A randomly shifted hexagonal packing of radius-1/2 circles covers a
``pi / sqrt(12)`` fraction of the plane.  Disks whose centers fall in a
gap are discarded; the rest snap to their containing circle.  Circles
split into four equivalence classes such that distinct same-class
circles are at least two units apart, so within one class the snapped
disks behave exactly like unit intervals under the parity trick: one
contributing disk per circle, distinct circles conflict-free.  Each
class therefore reuses the cell-partition estimator core; the best of
the four classes is returned.

Guarantees (for optima large enough that the packing loss
concentrates): the naive path gives
``beta * pi / (36 sqrt(3) (1+eps)) <= X <= beta`` and the sampling path
``beta * pi / (8 sqrt(3) (1+eps)) <= Y <= beta``.
"""

from __future__ import annotations

from .core import CellPartitionEstimator, SamplingConfig
from .geometry import (UNIT_RADIUS, HexPacking, ShapeModeError, Update,
                       encode_circle, snap_disk)
from .hashing import derive_seed
from .reporting import EstimateReport


def _check_unit_disk(u: Update) -> None:
    if u.shape.kind != "disk" or u.shape.radius != UNIT_RADIUS:
        raise ShapeModeError("estimator accepts radius-1/2 disks only")
    if u.sign not in (-1, 1):
        raise ValueError("update sign must be +1 or -1")


class _UnitDiskBase:
    def __init__(self, cfg: SamplingConfig, sampling: bool,
                 packing: HexPacking | None = None):
        self.cfg = cfg
        self.packing = packing if packing is not None else HexPacking(
            derive_seed(cfg.seed, 0xD15C))
        self.core = CellPartitionEstimator(cfg, n_parts=4, sampling=sampling)
        self.discarded = 0
        self.accepted = 0

    def update(self, u: Update) -> None:
        _check_unit_disk(u)
        hit = snap_disk(self.packing, u.shape)
        if hit is None:
            self.discarded += u.sign
            return
        a, b, klass = hit
        self.accepted += u.sign
        self.core.add(klass, encode_circle(a, b), u.shape.weight, u.sign)

    def extend(self, updates) -> None:
        for u in updates:
            self.update(u)

    def nbytes(self) -> int:
        return self.core.nbytes()


class UnitDiskNaiveEstimator(_UnitDiskBase):
    def __init__(self, cfg: SamplingConfig, packing: HexPacking | None = None):
        super().__init__(cfg, sampling=False, packing=packing)

    def finalize(self) -> EstimateReport:
        return self.core.naive_report()

    def estimate(self) -> float:
        return self.finalize().estimate


class UnitDiskSamplingEstimator(_UnitDiskBase):
    def __init__(self, cfg: SamplingConfig, packing: HexPacking | None = None):
        super().__init__(cfg, sampling=True, packing=packing)

    def finalize(self) -> EstimateReport:
        return self.core.finalize()

    def estimate(self) -> float:
        return self.finalize().estimate
