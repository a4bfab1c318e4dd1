"""Exact offline MIS / WMIS computation -- ground truth for all tests.

Everything here works on scaled-integer coordinates with the strict
intersection convention (tangency = disjoint); there are no epsilon
tolerances anywhere, so oracle answers are exact.
"""

from __future__ import annotations

import bisect
from collections import Counter, defaultdict

from .geometry import Shape, Update, shapes_intersect


class StrictTurnstileError(ValueError):
    """A deletion without a matching earlier insertion."""


class OracleInfeasibleError(RuntimeError):
    """Conflict component too large for the exact disk solver."""


def snapshot_from_updates(updates: list[Update]) -> list[Shape]:
    """Final multiset of shapes; raises if any prefix count goes negative.

    Duplicate surviving shapes are collapsed: identical shapes always
    intersect each other, so multiplicity never affects MIS or WMIS.
    """
    counts: Counter[Shape] = Counter()
    for i, u in enumerate(updates):
        counts[u.shape] += u.sign
        if counts[u.shape] < 0:
            raise StrictTurnstileError(f"negative frequency at update {i}")
    return [s for s, c in counts.items() if c > 0]


def exact_mis_intervals(shapes: list[Shape]) -> int:
    """Greedy by right endpoint; exact for intervals."""
    ends = sorted((s.center[0] + s.radius, s.center[0] - s.radius)
                  for s in shapes)
    count = 0
    frontier = None
    for right, left in ends:
        if frontier is None or left >= frontier:
            count += 1
            frontier = right
    return count


def exact_wmis_intervals(shapes: list[Shape]) -> int:
    """Max-weight independent set of intervals by dynamic programming."""
    items = sorted(((s.center[0] + s.radius, s.center[0] - s.radius, s.weight)
                    for s in shapes))
    rights = [it[0] for it in items]
    best = [0] * (len(items) + 1)
    for j, (right, left, w) in enumerate(items):
        # rightmost earlier interval ending at or before our left endpoint
        p = bisect.bisect_right(rights, left, 0, j)
        best[j + 1] = max(best[j], best[p] + w)
    return best[-1]


def max_intersection_degree(shapes: list[Shape]) -> int:
    """Max degree of the intersection graph (quadratic; test-scale only)."""
    deg = [0] * len(shapes)
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            if shapes_intersect(shapes[i], shapes[j]):
                deg[i] += 1
                deg[j] += 1
    return max(deg, default=0)


def _disk_components(shapes: list[Shape]) -> list[list[int]]:
    """Connected components of the disk intersection graph via a coarse grid."""
    if not shapes:
        return []
    cell = 4 * max(s.radius for s in shapes)
    buckets: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i, s in enumerate(shapes):
        buckets[(s.center[0] // cell, s.center[1] // cell)].append(i)

    parent = list(range(len(shapes)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (cx, cy), members in buckets.items():
        neigh = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                neigh.extend(buckets.get((cx + dx, cy + dy), ()))
        for i in members:
            for j in neigh:
                if j <= i:
                    continue
                if shapes_intersect(shapes[i], shapes[j]):
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[ri] = rj
    comps: dict[int, list[int]] = defaultdict(list)
    for i in range(len(shapes)):
        comps[find(i)].append(i)
    return list(comps.values())


def _component_wmis(shapes: list[Shape], idx: list[int]) -> int:
    """Branch and bound over one conflict component (<= 64 disks)."""
    order = sorted(idx, key=lambda i: -shapes[i].weight)
    m = len(order)
    w = [shapes[i].weight for i in order]
    adj = [0] * m
    for a in range(m):
        for b in range(a + 1, m):
            if shapes_intersect(shapes[order[a]], shapes[order[b]]):
                adj[a] |= 1 << b
                adj[b] |= 1 << a
    suffix = [0] * (m + 1)
    for a in range(m - 1, -1, -1):
        suffix[a] = suffix[a + 1] + w[a]

    best = 0

    def walk(v: int, avail: int, acc: int) -> None:
        nonlocal best
        while v < m and not (avail >> v) & 1:
            v += 1
        if v == m:
            best = max(best, acc)
            return
        if acc + suffix[v] <= best:
            return
        walk(v + 1, avail & ~adj[v], acc + w[v])
        walk(v + 1, avail & ~(1 << v), acc)

    walk(0, (1 << m) - 1, 0)
    return best


def exact_wmis_disks(shapes: list[Shape], max_component: int = 64) -> int:
    """Exact disk WMIS via branch and bound per conflict component.

    Disk MIS is NP-hard in general; this is a desk-scale oracle and
    raises :class:`OracleInfeasibleError` when a component exceeds
    ``max_component`` disks.
    """
    total = 0
    for comp in _disk_components(shapes):
        if len(comp) > max_component:
            raise OracleInfeasibleError(
                f"conflict component of size {len(comp)} exceeds {max_component}")
        total += _component_wmis(shapes, comp)
    return total


def exact_mis_disks(shapes: list[Shape], max_component: int = 64) -> int:
    unit = [Shape(s.kind, s.center, s.radius, 1) for s in shapes]
    return exact_wmis_disks(unit, max_component)


def brute_force_wmis(shapes: list[Shape]) -> int:
    """Exhaustive subset search; cross-check oracle for tiny instances."""
    n = len(shapes)
    if n > 22:
        raise OracleInfeasibleError("brute force limited to 22 shapes")
    best = 0
    for mask in range(1 << n):
        sel = [shapes[i] for i in range(n) if (mask >> i) & 1]
        if all(not shapes_intersect(sel[a], sel[b])
               for a in range(len(sel)) for b in range(a + 1, len(sel))):
            best = max(best, sum(s.weight for s in sel))
    return best


def exact_opt(shapes: list[Shape], weighted: bool = True) -> int:
    """Dispatch to the exact interval or disk oracle."""
    if not shapes:
        return 0
    kind = shapes[0].kind
    if kind == "interval":
        return exact_wmis_intervals(shapes) if weighted else exact_mis_intervals(shapes)
    if weighted:
        return exact_wmis_disks(shapes)
    return exact_mis_disks(shapes)
