"""Snapshot, manifest and trace serialization.

Snapshot grammar (text, one file per field):

    # ipme v1 d=<d> n=<n1,..> h=<h1,..> origin=<o1,..> t=<t> quantity=<q>
    <value>
    ...

One decimal value per line, row-major node order, written with Python's
shortest round-trip float repr so that read(write(field)) reproduces every
value bit for bit.  quantity is one of u, rho, v, G.

Manifests are a small deterministic YAML subset (nested mappings, scalars,
flat lists) emitted with sorted structure fixed by the writer; they parse
with any YAML reader.  Traces are RFC-4180 CSV.
"""

from __future__ import annotations

import csv
import os

import numpy as np
import yaml

from .core import (DomainError, GridSpec, RunManifest, ScalarField,
                   SnapshotFormatError, QUANTITIES)

__all__ = [
    "write_snapshot", "read_snapshot", "snapshot_text", "parse_snapshot_text",
    "write_manifest", "read_manifest", "manifest_text",
    "write_trace_csv", "read_trace_csv",
]

_MAGIC = "ipme v1"


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips the double exactly."""
    return repr(float(x))


def snapshot_text(field: ScalarField) -> str:
    g = field.grid
    head = ("# {magic} d={d} n={n} h={h} origin={o} t={t} quantity={q}"
            .format(magic=_MAGIC, d=g.dim,
                    n=",".join(str(v) for v in g.n),
                    h=",".join(_fmt(v) for v in g.h),
                    o=",".join(_fmt(v) for v in g.origin),
                    t=_fmt(field.t), q=field.quantity))
    body = "\n".join(_fmt(v) for v in field.values.ravel(order="C"))
    return head + "\n" + body + "\n"


def write_snapshot(path: str, field: ScalarField) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(snapshot_text(field))


def parse_snapshot_text(text: str, name: str = "<snapshot>") -> ScalarField:
    lines = text.splitlines()
    if not lines:
        raise SnapshotFormatError(f"{name}:1: empty snapshot")
    head = lines[0]
    prefix = f"# {_MAGIC} "
    if not head.startswith(prefix):
        raise SnapshotFormatError(f"{name}:1: missing '# {_MAGIC}' header")
    fields = {}
    order = []
    for tok in head[len(prefix):].split():
        if "=" not in tok:
            raise SnapshotFormatError(f"{name}:1: bad header token {tok!r}")
        key, val = tok.split("=", 1)
        fields[key] = val
        order.append(key)
    expected = ["d", "n", "h", "origin", "t", "quantity"]
    if order != expected:
        raise SnapshotFormatError(
            f"{name}:1: header keys {order} != {expected}")
    try:
        d = int(fields["d"])
        n = tuple(int(v) for v in fields["n"].split(","))
        h = tuple(float(v) for v in fields["h"].split(","))
        origin = tuple(float(v) for v in fields["origin"].split(","))
        t = float(fields["t"])
    except ValueError as exc:
        raise SnapshotFormatError(f"{name}:1: {exc}") from exc
    if len(n) != d or len(h) != d or len(origin) != d:
        raise SnapshotFormatError(
            f"{name}:1: d={d} but n/h/origin have lengths "
            f"{len(n)}/{len(h)}/{len(origin)}")
    quantity = fields["quantity"]
    if quantity not in QUANTITIES:
        raise SnapshotFormatError(
            f"{name}:1: unknown quantity tag {quantity!r}")
    try:
        grid = GridSpec(n=n, h=h, origin=origin)
    except DomainError as exc:
        raise SnapshotFormatError(f"{name}:1: {exc}") from exc

    want = grid.size
    vals = np.empty(want)
    count = 0
    for lineno, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s:
            continue
        if count >= want:
            raise SnapshotFormatError(
                f"{name}:{lineno}: more than {want} values")
        try:
            vals[count] = float(s)
        except ValueError as exc:
            raise SnapshotFormatError(
                f"{name}:{lineno}: bad value {s!r}") from exc
        count += 1
    if count != want:
        raise SnapshotFormatError(
            f"{name}:{len(lines)}: got {count} values, expected {want}")
    try:
        return ScalarField(grid=grid, values=vals, t=t, quantity=quantity)
    except DomainError as exc:
        raise SnapshotFormatError(f"{name}: {exc}") from exc


def read_snapshot(path: str) -> ScalarField:
    with open(path, "r") as f:
        return parse_snapshot_text(f.read(), name=os.path.basename(path))


# ── Manifests ────────────────────────────────────────────────────────────

def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        for key, val in obj.items():
            if isinstance(val, dict):
                out.append(f"{pad}{key}:")
                _emit(val, indent + 1, out)
            elif isinstance(val, (list, tuple)):
                out.append(f"{pad}{key}: [{', '.join(_scalar(v) for v in val)}]")
            else:
                out.append(f"{pad}{key}: {_scalar(val)}")
    else:
        raise DomainError("manifest root must be a mapping")


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt(v)
    if v is None:
        return "null"
    s = str(v)
    # quote anything YAML could misread
    if s == "" or any(ch in s for ch in ":#{}[],&*?|>'\"%@`") or s != s.strip():
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return s


def manifest_text(manifest: RunManifest) -> str:
    out: list = []
    _emit(manifest.to_dict(), 0, out)
    return "\n".join(out) + "\n"


def write_manifest(path: str, manifest: RunManifest) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(manifest_text(manifest))


def read_manifest(path: str) -> RunManifest:
    with open(path, "r") as f:
        try:
            data = yaml.safe_load(f.read())
        except yaml.YAMLError as exc:
            raise SnapshotFormatError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SnapshotFormatError(f"{path}: manifest root must be a mapping")
    return RunManifest(data)


def validate_manifest(path: str) -> RunManifest:
    """Read a manifest and check every listed output snapshot parses."""
    man = read_manifest(path)
    base = os.path.dirname(os.path.abspath(path))
    listed = man.to_dict()
    for key in ("outputs", "snapshots"):
        for rel in listed.get(key, []):
            p = os.path.join(base, rel)
            if not os.path.exists(p):
                raise SnapshotFormatError(
                    f"{path}: listed output missing: {rel}")
            read_snapshot(p)
    return man


# ── Traces ───────────────────────────────────────────────────────────────

def write_trace_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def read_trace_csv(path: str) -> tuple:
    with open(path, "r", newline="") as f:
        r = csv.reader(f)
        rows = list(r)
    if not rows:
        raise SnapshotFormatError(f"{path}: empty trace")
    header = rows[0]
    # blank cells are legitimate (undefined first difference, say)
    data = [[None if v == "" else float(v) for v in row] for row in rows[1:]]
    return header, data
