"""Line-oriented stream file format.

Header: ``#geomstream v1 kind=<interval|disk> scale=<SCALE> n=<count>``
followed by one event per line, integers in scaled units:

* intervals: ``+|- <center> <radius> <weight>``
* disks:     ``+|- <x> <y> <radius> <weight>``

Parsing and writing round-trip exactly; the validator additionally
enforces the strict-turnstile contract (no deletion of something not
currently present) and the unit-size conventions of the declared kind.
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path

from .geometry import SCALE, UNIT_RADIUS, Shape, Update


class StreamFormatError(ValueError):
    pass


def write_stream(path, updates: list[Update], kind: str | None = None) -> None:
    if kind is None:
        kind = updates[0].shape.kind if updates else "interval"
    lines = [f"#geomstream v1 kind={kind} scale={SCALE} n={len(updates)}"]
    for u in updates:
        if u.shape.kind != kind:
            raise StreamFormatError("mixed shape kinds in one stream")
        sign = "+" if u.sign > 0 else "-"
        coords = " ".join(str(c) for c in u.shape.center)
        lines.append(f"{sign} {coords} {u.shape.radius} {u.shape.weight}")
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_header(line: str) -> dict:
    parts = line.strip().split()
    if len(parts) != 5 or parts[0] != "#geomstream" or parts[1] != "v1":
        raise StreamFormatError("bad header line")
    meta = {}
    for p in parts[2:]:
        k, _, v = p.partition("=")
        meta[k] = v
    if meta.get("kind") not in ("interval", "disk"):
        raise StreamFormatError(f"bad kind {meta.get('kind')!r}")
    try:
        meta["scale"] = int(meta["scale"])
        meta["n"] = int(meta["n"])
    except (KeyError, ValueError) as exc:
        raise StreamFormatError("bad scale/n in header") from exc
    return meta


def read_stream(path) -> tuple[list[Update], dict]:
    text = Path(path).read_text().splitlines()
    if not text:
        raise StreamFormatError("empty file")
    meta = _parse_header(text[0])
    kind = meta["kind"]
    want = 3 if kind == "interval" else 4
    updates = []
    for ln, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != want + 1:
            raise StreamFormatError(f"line {ln}: expected {want + 1} fields")
        if parts[0] not in "+-":
            raise StreamFormatError(f"line {ln}: bad sign {parts[0]!r}")
        try:
            nums = [int(p) for p in parts[1:]]
        except ValueError as exc:
            raise StreamFormatError(f"line {ln}: non-integer field") from exc
        center = tuple(nums[:-2])
        radius, weight = nums[-2], nums[-1]
        updates.append(Update(1 if parts[0] == "+" else -1,
                              Shape(kind, center, radius, weight)))
    if len(updates) != meta["n"]:
        raise StreamFormatError(
            f"header says n={meta['n']} but file has {len(updates)} events")
    return updates, meta


def validate_stream(path, unit: bool = False) -> list[str]:
    """Returns a list of problems (empty list means the stream is valid)."""
    errors: list[str] = []
    try:
        updates, meta = read_stream(path)
    except StreamFormatError as exc:
        return [str(exc)]
    counts: Counter[Shape] = Counter()
    for ln, u in enumerate(updates, start=2):
        s = u.shape
        if s.weight < 1:
            errors.append(f"line {ln}: weight must be >= 1")
        if s.radius < 1:
            errors.append(f"line {ln}: radius must be >= 1")
        if meta["kind"] == "disk" and s.radius != UNIT_RADIUS:
            errors.append(f"line {ln}: disks must have radius {UNIT_RADIUS}")
        if unit and meta["kind"] == "interval" and s.radius != UNIT_RADIUS:
            errors.append(f"line {ln}: non-unit interval in unit mode")
        counts[s] += u.sign
        if counts[s] < 0:
            errors.append(f"line {ln}: delete before insert (strict turnstile)")
            counts[s] = 0
    return errors
