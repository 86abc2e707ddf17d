"""Serialized outputs: difficulty maps, report files, comparisons.

Everything written here is byte-deterministic for a given input (stable key
order, repr floats, RFC 4180 line endings) and lands on disk atomically, so
reruns can be diffed and interrupted runs never leave half-written files.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregation import AssemblyReport, ComparisonReport, IndexReport
from .errors import FieldMismatchError, ReportIOError, SchemaMismatchError
from .fields import LocalIndexField
from .mesh_io import TriMesh
from .spatial import OctantClass, Octree

SCHEMA_VERSION = 1

#: Color ramp anchors, low difficulty (cool blue) to high (hot red).
_RAMP = np.array(
    [
        (40.0, 70.0, 190.0),
        (100.0, 160.0, 220.0),
        (180.0, 200.0, 160.0),
        (230.0, 150.0, 80.0),
        (250.0, 40.0, 40.0),
    ]
)


@dataclass(frozen=True)
class ColorScale:
    """Maps difficulty values in [lo, hi] onto the blue-to-red ramp."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"need hi > lo, got [{self.lo!r}, {self.hi!r}]")

    @staticmethod
    def auto(values) -> "ColorScale":
        """Scale spanning the observed values; a flat field maps to the low end."""
        v = np.asarray(values, dtype=np.float64)
        lo = float(v.min())
        hi = float(v.max())
        if hi - lo < 1e-12:
            hi = lo + 1.0
        return ColorScale(lo, hi)

    def rgb(self, values) -> np.ndarray:
        """uint8 (N, 3) colors, piecewise-linear between the ramp anchors."""
        v = np.asarray(values, dtype=np.float64)
        t = np.clip((v - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        s = t * (len(_RAMP) - 1)
        i = np.minimum(s.astype(np.int64), len(_RAMP) - 2)
        frac = (s - i)[:, None]
        cols = _RAMP[i] * (1.0 - frac) + _RAMP[i + 1] * frac
        return np.clip(np.rint(cols), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Atomic text output


def _atomic_write_text(path, text: str) -> Path:
    out = Path(path)
    tmp = out.with_name(out.name + ".tmp")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except OSError as exc:
        try:
            tmp.unlink(missing_ok=True)
        except OSError:
            pass
        raise ReportIOError(f"cannot write {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Difficulty maps


def _check_field(octree: Octree, index_field: LocalIndexField) -> dict[int, float]:
    fp = octree.fingerprint()["content_hash"]
    if index_field.octree_hash and index_field.octree_hash != fp:
        raise FieldMismatchError(
            f"field {index_field.index_id!r} was computed on a different octree"
        )
    greys = octree.grey_leaves()
    if len(greys) != len(index_field):
        raise FieldMismatchError(
            f"field {index_field.index_id!r} has {len(index_field)} values "
            f"for {len(greys)} grey leaves"
        )
    if index_field.path_keys and tuple(n.path_key for n in greys) != index_field.path_keys:
        raise FieldMismatchError(
            f"field {index_field.index_id!r} leaf order does not match the octree"
        )
    return {n.path_key: float(v) for n, v in zip(greys, index_field.values)}


def export_difficulty_map(
    mesh: TriMesh,
    octree: Octree,
    index_field: LocalIndexField,
    path,
    fmt: str | None = None,
    scale: ColorScale | None = None,
) -> Path:
    """Write a colored view of a local field, picking the writer by format.

    "ply" colors the part's surface vertices by the difficulty of the box
    each vertex falls in; "vtk" writes the solid boxes themselves with the
    difficulty attached as cell data.  With fmt omitted the file suffix
    decides.
    """
    out = Path(path)
    kind = (fmt or out.suffix.lstrip(".")).lower()
    if kind == "ply":
        text = _ply_text(mesh, octree, index_field, scale)
    elif kind == "vtk":
        text = _vtk_text(octree, index_field, scale)
    else:
        raise ValueError(f"unsupported difficulty-map format {kind!r} (use ply or vtk)")
    return _atomic_write_text(out, text)


def _ply_text(
    mesh: TriMesh, octree: Octree, index_field: LocalIndexField, scale: ColorScale | None
) -> str:
    by_key = _check_field(octree, index_field)
    scale = scale or ColorScale.auto(index_field.values)
    greys = octree.grey_leaves()
    grey_centers = np.array([n.center for n in greys])
    grey_values = index_field.values

    values = np.empty(len(mesh.vertices))
    misses = []
    for i, v in enumerate(mesh.vertices):
        leaf = octree.find_leaf(v)
        if leaf is not None and leaf.path_key in by_key:
            values[i] = by_key[leaf.path_key]
        else:
            misses.append(i)
    if misses:
        # surface vertices can sit exactly on box faces and descend into a
        # white/black neighbor; grade those by the nearest grey box instead
        pts = mesh.vertices[misses]
        d2 = ((pts[:, None, :] - grey_centers[None, :, :]) ** 2).sum(axis=2)
        values[misses] = grey_values[np.argmin(d2, axis=1)]

    colors = scale.rgb(values)
    buf = io.StringIO()
    buf.write("ply\n")
    buf.write("format ascii 1.0\n")
    buf.write(f"comment difficulty map {index_field.index_id}\n")
    buf.write(f"comment scale {scale.lo!r} {scale.hi!r}\n")
    buf.write(f"element vertex {len(mesh.vertices)}\n")
    buf.write("property float x\nproperty float y\nproperty float z\n")
    buf.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
    buf.write(f"element face {len(mesh.triangles)}\n")
    buf.write("property list uchar int vertex_indices\n")
    buf.write("end_header\n")
    for (x, y, z), (r, g, b) in zip(mesh.vertices, colors):
        buf.write(f"{x:.9g} {y:.9g} {z:.9g} {r} {g} {b}\n")
    for a, b, c in mesh.triangles:
        buf.write(f"3 {a} {b} {c}\n")
    return buf.getvalue()


# VTK point order for a hexahedron cell: bottom face counterclockwise from
# (x-, y-, z-), then the top face in the same order.
_HEX_CORNERS = ((0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1))


def _vtk_text(octree: Octree, index_field: LocalIndexField, scale: ColorScale | None) -> str:
    by_key = _check_field(octree, index_field)
    scale = scale or ColorScale.auto(index_field.values)
    cells = [
        n
        for n in octree.leaves()
        if n.octant_class in (OctantClass.BLACK, OctantClass.GREY)
    ]
    buf = io.StringIO()
    buf.write("# vtk DataFile Version 3.0\n")
    buf.write(f"difficulty map {index_field.index_id}\n")
    buf.write("ASCII\n")
    buf.write("DATASET UNSTRUCTURED_GRID\n")
    buf.write(f"POINTS {8 * len(cells)} float\n")
    for n in cells:
        lo, hi = n.box_min, n.box_max
        for cx, cy, cz in _HEX_CORNERS:
            x = hi[0] if cx else lo[0]
            y = hi[1] if cy else lo[1]
            z = hi[2] if cz else lo[2]
            buf.write(f"{x:.9g} {y:.9g} {z:.9g}\n")
    buf.write(f"CELLS {len(cells)} {9 * len(cells)}\n")
    for i in range(len(cells)):
        base = 8 * i
        buf.write("8 " + " ".join(str(base + k) for k in range(8)) + "\n")
    buf.write(f"CELL_TYPES {len(cells)}\n")
    for _ in cells:
        buf.write("12\n")
    buf.write(f"CELL_DATA {len(cells)}\n")
    buf.write("SCALARS difficulty float 1\n")
    buf.write("LOOKUP_TABLE default\n")
    for n in cells:
        value = by_key.get(n.path_key, scale.lo)  # black boxes grade easiest
        buf.write(f"{value:.9g}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Report files


def _report_json(report) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "report": report.to_dict()}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_csv(report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    if isinstance(report, ComparisonReport):
        writer.writerow(["metric", "baseline", "candidate", "delta", "delta_pct"])
        for row in report.rows:
            writer.writerow(
                [
                    row["metric"],
                    _csv_cell(row["baseline"]),
                    _csv_cell(row["candidate"]),
                    _csv_cell(row.get("delta")),
                    _csv_cell(row["delta_pct"]),
                ]
            )
    else:
        writer.writerow(["metric", "value"])
        for key, val in report.scalar_metrics().items():
            writer.writerow([key, _csv_cell(val)])
        if isinstance(report, AssemblyReport):
            for name, rep in sorted(report.module_reports.items()):
                writer.writerow([f"{name}:weight", _csv_cell(report.weights[name])])
                for key, val in rep.scalar_metrics().items():
                    writer.writerow([f"{name}:{key}", _csv_cell(val)])
    return buf.getvalue()


def emit_report(report, path, fmt: str | None = None) -> Path:
    """Write a report as JSON (round-trippable) or CSV (flat metrics)."""
    out = Path(path)
    kind = (fmt or out.suffix.lstrip(".")).lower()
    if kind == "json":
        return _atomic_write_text(out, _report_json(report))
    if kind == "csv":
        return _atomic_write_text(out, _report_csv(report))
    raise ValueError(f"unsupported report format {kind!r} (use json or csv)")


_KINDS = {
    "part": IndexReport.from_dict,
    "assembly": AssemblyReport.from_dict,
    "comparison": ComparisonReport.from_dict,
}


def load_report(path):
    """Read back a JSON report, refusing files from other schema versions."""
    p = Path(path)
    try:
        raw = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise ReportIOError(f"cannot read {p}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaMismatchError(f"{p} is not a JSON report: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise SchemaMismatchError(f"{p} has no schema_version field")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"{p} uses schema version {doc['schema_version']!r}, "
            f"this build reads version {SCHEMA_VERSION}"
        )
    body = doc.get("report")
    if not isinstance(body, dict) or body.get("kind") not in _KINDS:
        raise SchemaMismatchError(f"{p} has an unrecognized report body")
    try:
        return _KINDS[body["kind"]](body)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatchError(f"{p} is malformed: {exc}") from exc
