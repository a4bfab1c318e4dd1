"""Streaming estimators for geometric maximum independent set.

Estimate the cardinality (alpha) and weight (beta) of the maximum
independent set of unit intervals, arbitrary-length intervals, and
unit-diameter disks arriving as strict-turnstile or insertion-only
streams, in polylogarithmic space, with exact offline oracles and
adversarial generators for verification.
"""

from .arbitrary_intervals import ArbitraryLengthEstimator, LevelConfig
from .core import SamplingConfig
from .disks import UnitDiskNaiveEstimator, UnitDiskSamplingEstimator
from .geometry import (SCALE, UNIT_RADIUS, GridSpec, HexPacking, NestedGrid,
                       Shape, Update, interval, unit_disk, unit_interval)
from .insertion_only import (InsertionOnlySamplingEstimator, SelectionConfig,
                             UnitIntervalSelection)
from .oracles import (exact_mis_intervals, exact_wmis_disks,
                      exact_wmis_intervals, snapshot_from_updates)
from .reporting import EstimateReport
from .sketch import L0Sketch, SparseRecoverySketch, merge, negate
from .unit_intervals import (UnitIntervalNaiveEstimator,
                             UnitIntervalSamplingEstimator)

__version__ = "0.1.0"

__all__ = [
    "ArbitraryLengthEstimator", "EstimateReport", "GridSpec", "HexPacking",
    "InsertionOnlySamplingEstimator", "L0Sketch", "LevelConfig", "NestedGrid",
    "SCALE", "SamplingConfig", "SelectionConfig", "Shape",
    "SparseRecoverySketch", "UNIT_RADIUS", "UnitDiskNaiveEstimator",
    "UnitDiskSamplingEstimator", "UnitIntervalNaiveEstimator",
    "UnitIntervalSamplingEstimator", "UnitIntervalSelection", "Update",
    "exact_mis_intervals", "exact_wmis_disks", "exact_wmis_intervals",
    "interval", "merge", "negate", "snapshot_from_updates", "unit_disk",
    "unit_interval",
]
