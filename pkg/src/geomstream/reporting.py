"""Result containers shared by the streaming estimators."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class PartReport:
    """Diagnostics for one independent partition branch (parity / packing class)."""
    part: int
    naive: float = 0.0
    estimate: float = 0.0
    branch: int | None = None
    y_by_class: dict[int, float] = field(default_factory=dict)
    count_by_class: dict[int, float] = field(default_factory=dict)
    threshold_by_class: dict[int, float] = field(default_factory=dict)
    failed_branches: list[int] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


@dataclass
class EstimateReport:
    """Final estimate plus per-part diagnostics."""
    estimate: float
    flags: list[str] = field(default_factory=list)
    parts: list[PartReport] = field(default_factory=list)

    def part(self, idx: int) -> PartReport:
        return self.parts[idx]
