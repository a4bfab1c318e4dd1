"""Seeded instance generators: random workloads and adversarial constructions.

Random generators produce strict-turnstile streams with configurable
churn (fraction of inserted shapes later deleted).  The adversarial
generators realize the index / path-disjointness constructions whose
independent-set value is forced by construction; each returns the
predicted value alongside the stream so tests can check it against the
exact oracle.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .geometry import (SCALE, UNIT_RADIUS, Shape, Update, interval,
                       unit_disk, unit_interval)


class GenerationError(ValueError):
    pass


@dataclass
class GenResult:
    updates: list[Update]
    meta: dict = field(default_factory=dict)


def _with_churn(shapes: list[Shape], churn: float, rng: random.Random) -> list[Update]:
    """Interleave deletions for a ``churn`` fraction of shapes.

    Every shape is inserted at a uniform time; deleted shapes get a
    deletion time uniform after their insertion, so deletions always
    follow the matching insert.
    """
    n_del = round(churn * len(shapes))
    doomed = set(rng.sample(range(len(shapes)), n_del)) if n_del else set()
    events = []
    for i, s in enumerate(shapes):
        t_ins = rng.random()
        events.append((t_ins, i, Update(1, s, uid=i)))
        if i in doomed:
            t_del = rng.uniform(t_ins, 1.0)
            events.append((t_del, i, Update(-1, s, uid=i)))
    events.sort(key=lambda e: (e[0], e[1], -e[2].sign))
    return [e[2] for e in events]


def gen_random_unit_intervals(n: int, seed: int, churn: float = 0.0,
                              span_units: int | None = None,
                              w_max: int = 1) -> GenResult:
    rng = random.Random(seed)
    span = span_units if span_units is not None else max(4, n // 3)
    shapes = []
    for _ in range(n):
        c = rng.randrange(0, span * SCALE)
        w = rng.randint(1, w_max) if w_max > 1 else 1
        shapes.append(unit_interval(c, w))
    return GenResult(_with_churn(shapes, churn, rng),
                     {"kind": "interval", "span_units": span})


def gen_random_weighted(n: int, seed: int, w_max: int, churn: float = 0.0,
                        span_units: int | None = None) -> GenResult:
    return gen_random_unit_intervals(n, seed, churn, span_units, w_max)


def gen_random_disks(n: int, seed: int, churn: float = 0.0,
                     w_max: int = 1, cluster_size: int = 8,
                     spread_units: float = 1.5) -> GenResult:
    """Clustered disks: conflict components stay oracle-feasible.

    Clusters sit on a jittered coarse grid spaced far enough apart that
    disks in different clusters can never intersect, so every conflict
    component has at most ``cluster_size`` disks.
    """
    rng = random.Random(seed)
    n_clusters = math.ceil(n / cluster_size)
    side = math.ceil(math.sqrt(n_clusters))
    pitch = int((2 * spread_units + 3) * SCALE)
    centers = []
    for ci in range(n_clusters):
        gx, gy = ci % side, ci // side
        jx = rng.randrange(0, SCALE)
        jy = rng.randrange(0, SCALE)
        centers.append((gx * pitch + jx, gy * pitch + jy))
    spread = int(spread_units * SCALE) // 2
    shapes = []
    for i in range(n):
        cx, cy = centers[i % n_clusters]
        x = cx + rng.randint(-spread, spread)
        y = cy + rng.randint(-spread, spread)
        w = rng.randint(1, w_max) if w_max > 1 else 1
        shapes.append(unit_disk(x, y, w))
    return GenResult(_with_churn(shapes, churn, rng),
                     {"kind": "disk", "clusters": n_clusters,
                      "cluster_size": cluster_size})


def gen_bounded_degree(n: int, seed: int, kappa_max: int,
                       max_len_units: int = 16, churn: float = 0.0,
                       span_units: int | None = None) -> GenResult:
    """Arbitrary-length unit-weight intervals with intersection degree <= kappa_max.

    Rejection sampling: a candidate is kept only if it and all its
    would-be neighbors stay within the degree bound.
    """
    rng = random.Random(seed)
    span = span_units if span_units is not None else max(8, n)
    shapes: list[Shape] = []
    degrees: list[int] = []
    buckets: dict[int, list[int]] = {}
    bucket_len = (max_len_units + 1) * SCALE

    def neighbors(c: int, r: int) -> list[int]:
        b = c // bucket_len
        out = []
        for bb in (b - 1, b, b + 1):
            out.extend(buckets.get(bb, ()))
        return [i for i in out
                if abs(shapes[i].center[0] - c) < shapes[i].radius + r]

    attempts = 0
    while len(shapes) < n and attempts < 50 * n:
        attempts += 1
        length = rng.randint(SCALE, max_len_units * SCALE)
        c = rng.randrange(length // 2, span * SCALE - length // 2)
        r = length // 2
        nb = neighbors(c, r)
        if len(nb) >= kappa_max or any(degrees[i] >= kappa_max for i in nb):
            continue
        idx = len(shapes)
        shapes.append(interval(c, r))
        degrees.append(len(nb))
        for i in nb:
            degrees[i] += 1
        buckets.setdefault(c // bucket_len, []).append(idx)
    return GenResult(_with_churn(shapes, churn, rng),
                     {"kind": "interval", "kappa_max": kappa_max,
                      "generated": len(shapes)})


# ---------------------------------------------------------------------------
# Adversarial constructions


def gen_augmented_indexing(x: list[int], j: int) -> GenResult:
    """Index-with-prefix hard instance for turnstile unit intervals.

    One player inserts a staircase of unit intervals encoding the bit
    vector ``x``; the other deletes everything above position ``j`` and
    inserts a probe interval whose disjointness from the j-th staircase
    interval reveals ``x[j]``.  Forced value: alpha = 1 if x[j] == 1,
    else 2.
    """
    n = len(x)
    if not 0 <= j < n:
        raise GenerationError("index out of range")
    if any(b not in (0, 1) for b in x):
        raise GenerationError("bits must be 0/1")
    step = 2 * max(1, SCALE // (4 * n * n))
    updates = []
    shapes = []
    for i in range(n):
        left = (2 * (i + 1) - x[i]) * step
        s = unit_interval(left + UNIT_RADIUS)
        shapes.append(s)
        updates.append(Update(1, s, uid=i))
    for i in range(n - 1, j, -1):
        updates.append(Update(-1, shapes[i], uid=i))
    probe_left = (2 * (j + 1)) * step - step // 2 - SCALE
    updates.append(Update(1, unit_interval(probe_left + UNIT_RADIUS), uid=n))
    return GenResult(updates, {"kind": "interval",
                               "predicted_alpha": 1 if x[j] else 2})


def gen_disk_indexing(x: list[int], j: int) -> GenResult:
    """Index hard instance for insertion-only unit-diameter disks.

    Bits choose between antipodal points on a half circle of radius 1/2;
    the probe disk is pushed just outside along direction j.  Forced
    value: alpha = 2 if x[j] == 1, else 1.
    """
    n = len(x)
    if not 0 <= j < n:
        raise GenerationError("index out of range")
    if n > 300:
        raise GenerationError("disk indexing limited to n <= 300 "
                              "(fixed-point margins)")
    updates = []
    for i in range(n):
        theta = math.pi * (i + 1) / (n + 1)
        px = UNIT_RADIUS * math.cos(theta)
        py = UNIT_RADIUS * math.sin(theta)
        sgn = -1 if x[i] else 1
        updates.append(Update(1, unit_disk(round(sgn * px), round(sgn * py)),
                              uid=i))
    theta = math.pi * (j + 1) / (n + 1)
    scale = 1.0 + 1.0 / (n * n)
    bx = round(UNIT_RADIUS * scale * math.cos(theta))
    by = round(UNIT_RADIUS * scale * math.sin(theta))
    updates.append(Update(1, unit_disk(bx, by), uid=n))
    return GenResult(updates, {"kind": "disk",
                               "predicted_alpha": 2 if x[j] else 1})


def _lex_less(a: tuple, b: tuple) -> bool:
    return a < b


def apd_lengths(s: int, t: int) -> int:
    """Base length W: all interval coordinates are multiples of W / s^(i*t)."""
    return s ** (t * t + 1) * SCALE


def apd_key(player: int, value: int, s: int) -> int:
    """Stable key in [0, s*t) for the interval (player, value) may insert."""
    return (player - 1) * s + (value - 1)


def apd_shape(player: int, value: int, s: int, t: int,
              jstar_path: tuple[int, ...]) -> Shape:
    """Open interval player ``player`` inserts for staircase value ``value``."""
    W = apd_lengths(s, t)
    left = sum(jstar_path[k - 1] * W // s ** (k * t) for k in range(1, player))
    length = value * W // s ** (player * t)
    return interval(left + length // 2, length // 2)


def gen_apd(s: int, t: int, x_matrix: list[list[int]],
            partition: list[list[int]], jstar: int) -> GenResult:
    """Multi-party path-disjointness instance as a turnstile stream.

    ``x_matrix`` is s x t (bits by [row][player]); ``partition`` is
    s x t with each column a permutation of 1..s (row index selected by
    path m at player i is ``partition[m][i]``); ``jstar`` indexes the
    distinguished path.  Player i inserts, for every path bit set in
    its column, an open interval at its prefix anchor with length
    proportional to the selected row.  The referee deletes all
    intervals on lexicographically smaller paths than path ``jstar``.

    Promise: each path carries t ones or at most one; additionally any
    surviving single one must select a row strictly above the
    distinguished path's row in its column, which pins the forced
    value of alpha (t for the all-ones path; otherwise <= 2).
    """
    if s < 4 or t < 2:
        raise GenerationError("need s >= 4 and t >= 2")
    if s > 16 or t > 4:
        raise GenerationError("desk-scale caps: s <= 16, t <= 4")
    for i in range(t):
        if sorted(row[i] for row in partition) != list(range(1, s + 1)):
            raise GenerationError(f"column {i} of partition is not a permutation")

    paths = [tuple(partition[m]) for m in range(s)]
    jstar_path = paths[jstar]

    def bits_on(m: int) -> list[int]:
        return [x_matrix[partition[m][i] - 1][i] for i in range(t)]

    for m in range(s):
        ones = sum(bits_on(m))
        if ones not in (0, 1, t):
            raise GenerationError(f"path {m} violates the promise")
        if ones == 1 and m != jstar and not _lex_less(paths[m], jstar_path):
            i = bits_on(m).index(1)
            if partition[m][i] <= jstar_path[i]:
                raise GenerationError(
                    f"surviving single one on path {m} not above the "
                    "distinguished row (value prediction would be unsound)")

    player_updates: list[list[Update]] = [[] for _ in range(t)]
    for i in range(1, t + 1):
        for m in range(s):
            v = partition[m][i - 1]
            if x_matrix[v - 1][i - 1]:
                player_updates[i - 1].append(
                    Update(1, apd_shape(i, v, s, t, jstar_path),
                           uid=apd_key(i, v, s)))

    referee_deletes: list[Update] = []
    for m in range(s):
        if not _lex_less(paths[m], jstar_path):
            continue
        for i in range(1, t + 1):
            v = partition[m][i - 1]
            if x_matrix[v - 1][i - 1]:
                referee_deletes.append(
                    Update(-1, apd_shape(i, v, s, t, jstar_path),
                           uid=apd_key(i, v, s)))

    # Forced alpha from the survivor structure (see module docstring).
    jstar_bits = bits_on(jstar)
    long_cols = set()
    for m in range(s):
        if m == jstar or _lex_less(paths[m], jstar_path):
            continue
        bm = bits_on(m)
        if sum(bm) == 1:
            i = bm.index(1)
            if partition[m][i] > jstar_path[i]:
                long_cols.add(i)
    if sum(jstar_bits) == t:
        predicted = t
    elif sum(jstar_bits) == 1:
        i0 = jstar_bits.index(1)
        predicted = 2 if any(i > i0 for i in long_cols) else 1
    else:
        predicted = 1 if long_cols else 0

    updates = [u for pu in player_updates for u in pu] + referee_deletes
    return GenResult(updates, {
        "kind": "interval",
        "predicted_alpha": predicted,
        "player_updates": player_updates,
        "referee_deletes": referee_deletes,
        "s": s, "t": t,
    })


def sample_apd_instance(s: int, t: int, seed: int,
                        case: str = "random") -> tuple[list[list[int]], list[list[int]], int]:
    """Draw a promise-respecting (x_matrix, partition, jstar) triple.

    ``case``: 'yes' forces the all-ones path, 'no' a path with at most
    one 1, 'random' flips a coin.  Extra single ones are planted on
    other paths wherever the soundness restriction allows.
    """
    rng = random.Random(seed)
    partition = [[0] * t for _ in range(s)]
    for i in range(t):
        perm = list(range(1, s + 1))
        rng.shuffle(perm)
        for m in range(s):
            partition[m][i] = perm[m]
    jstar = rng.randrange(s)
    paths = [tuple(partition[m]) for m in range(s)]
    x = [[0] * t for _ in range(s)]
    if case == "random":
        case = rng.choice(["yes", "no"])
    if case == "yes":
        for i in range(t):
            x[partition[jstar][i] - 1][i] = 1
    else:
        if rng.random() < 0.5:
            i0 = rng.randrange(t)
            x[partition[jstar][i0] - 1][i0] = 1
    for m in range(s):
        if m == jstar or rng.random() < 0.5:
            continue
        i = rng.randrange(t)
        deleted = _lex_less(paths[m], paths[jstar])
        if deleted or partition[m][i] > partition[jstar][i]:
            x[partition[m][i] - 1][i] = 1
    return x, partition, jstar
