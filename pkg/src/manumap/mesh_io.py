"""Triangle-mesh loading, measurement, and the geometric predicates used everywhere else.

All lengths are millimeters.  A :class:`TriMesh` is immutable after load, so
every function in this module is safe to call from concurrent workers.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import re
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyMeshError, NotWatertightError, ParseError

log = logging.getLogger(__name__)

#: Vertices closer than this (mm) are merged into one during load.
WELD_TOLERANCE_MM = 1e-4

#: Points within ``BOUNDARY_EPS_REL * max_dimension`` of the surface classify
#: as on-boundary.
BOUNDARY_EPS_REL = 1e-6

#: Seed used whenever a caller does not pin one.  Randomness here only breaks
#: geometric ties; results are deterministic for a fixed seed.
DEFAULT_SEED = 7919

_REL_TOL = 1e-9
_MAX_RAY_ATTEMPTS = 32
_PAIR_BUDGET = 500_000  # point-triangle pairs per vectorized chunk


class PointClass(enum.IntEnum):
    """Classification of a point against a closed mesh."""

    OUTSIDE = 0
    INSIDE = 1
    ON_BOUNDARY = 2


@dataclass(frozen=True)
class MeshMetrics:
    """Derived measurements of a mesh.

    ``volume`` is the signed divergence-theorem volume: positive when the
    triangles are oriented outward.  It is reported even for open meshes,
    where it is only a diagnostic.  ``watertight`` is a flag, not an error;
    operations that need a closed mesh check it themselves.
    """

    bbox_min: tuple[float, float, float]
    bbox_max: tuple[float, float, float]
    max_dimension: float
    surface_area: float
    volume: float
    watertight: bool

    @property
    def extents(self) -> tuple[float, float, float]:
        return (
            self.bbox_max[0] - self.bbox_min[0],
            self.bbox_max[1] - self.bbox_min[1],
            self.bbox_max[2] - self.bbox_min[2],
        )

    @property
    def bbox_volume(self) -> float:
        ex, ey, ez = self.extents
        return ex * ey * ez


def as_metrics(mesh_or_metrics) -> "MeshMetrics":
    """Accept either a mesh or its precomputed metrics."""
    if isinstance(mesh_or_metrics, MeshMetrics):
        return mesh_or_metrics
    return mesh_or_metrics.metrics


class TriMesh:
    """Indexed triangle mesh.

    Arrays are made read-only on construction; derived data (metrics, the
    ray-cast acceleration grid, the content hash) is computed once under a
    lock and cached.
    """

    __slots__ = ("vertices", "triangles", "_lock", "_metrics", "_tri_coords", "_grid", "_hash")

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        triangles = np.ascontiguousarray(triangles, dtype=np.int32)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ValueError("vertices must be an (N, 3) array")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError("triangles must be an (M, 3) array")
        if triangles.shape[0] == 0:
            raise EmptyMeshError("mesh has no triangles")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise ValueError("triangle indices out of range")
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        self.vertices = vertices
        self.triangles = triangles
        self._lock = threading.Lock()
        self._metrics: MeshMetrics | None = None
        self._tri_coords: np.ndarray | None = None
        self._grid: _ColumnGrid | None = None
        self._hash: str | None = None

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def tri_coords(self) -> np.ndarray:
        """Per-triangle vertex coordinates, shape (M, 3, 3)."""
        if self._tri_coords is None:
            with self._lock:
                if self._tri_coords is None:
                    tc = self.vertices[self.triangles]
                    tc.setflags(write=False)
                    self._tri_coords = tc
        return self._tri_coords

    @property
    def metrics(self) -> MeshMetrics:
        if self._metrics is None:
            with self._lock:
                if self._metrics is None:
                    self._metrics = _measure(self)
        return self._metrics

    def content_hash(self) -> str:
        """Hash of the exact vertex/triangle data, for provenance checks."""
        if self._hash is None:
            with self._lock:
                if self._hash is None:
                    h = hashlib.sha256()
                    h.update(self.vertices.tobytes())
                    h.update(self.triangles.tobytes())
                    self._hash = h.hexdigest()
        return self._hash

    def _column_grid(self) -> "_ColumnGrid":
        if self._grid is None:
            # resolve dependencies before locking: both take the same lock
            tc = self.tri_coords()
            scale = self.metrics.max_dimension
            with self._lock:
                if self._grid is None:
                    self._grid = _ColumnGrid(tc, scale)
        return self._grid

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"TriMesh({self.num_vertices} vertices, {self.num_triangles} triangles)"


# ---------------------------------------------------------------------------
# Loading


def load_mesh(path: str | Path, fmt: str | None = None) -> TriMesh:
    """Load a binary STL, ASCII STL, or OFF file into a welded TriMesh.

    Parameters
    ----------
    path:
        Mesh file to read.
    fmt:
        One of ``"stl"``, ``"stl-binary"``, ``"stl-ascii"``, ``"off"``.
        ``None`` picks by file suffix and content sniffing.

    Vertices closer than :data:`WELD_TOLERANCE_MM` are merged, degenerate
    triangles are dropped, and unused vertices are discarded.  Raises
    :class:`ParseError` for malformed files and :class:`EmptyMeshError` when
    nothing usable remains.
    """
    path = Path(path)
    data = path.read_bytes()
    fmt = _resolve_format(path, data, fmt)
    if fmt == "off":
        raw_vertices, raw_faces = _parse_off(data)
        soup = raw_vertices[raw_faces]
    elif fmt == "stl-ascii":
        soup = _parse_stl_ascii(data)
    else:
        soup = _parse_stl_binary(data)
    mesh = _weld(soup)
    log.info(
        "loaded %s: %d triangles, %d vertices after weld",
        path.name,
        mesh.num_triangles,
        mesh.num_vertices,
    )
    return mesh


def _resolve_format(path: Path, data: bytes, fmt: str | None) -> str:
    if fmt is not None:
        fmt = fmt.lower()
        if fmt == "stl":
            return _sniff_stl(data)
        if fmt in ("stl-binary", "stl-ascii", "off"):
            return fmt
        raise ValueError(f"unknown mesh format {fmt!r}")
    suffix = path.suffix.lower()
    if suffix == ".off":
        return "off"
    if suffix == ".stl":
        return _sniff_stl(data)
    # no recognizable suffix: sniff the content itself
    if data[:3] == b"OFF":
        return "off"
    return _sniff_stl(data)


def _sniff_stl(data: bytes) -> str:
    # A binary STL may start with "solid" too; require an actual facet token.
    if data[:5].lower() == b"solid" and b"facet" in data[:4096].lower():
        return "stl-ascii"
    return "stl-binary"


_STL_RECORD = np.dtype(
    [("normal", "<f4", (3,)), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
)


def _parse_stl_binary(data: bytes) -> np.ndarray:
    if len(data) < 84:
        raise ParseError("binary STL shorter than its 84-byte header")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise ParseError(
            f"binary STL truncated: header promises {count} facets "
            f"({expected} bytes) but file holds {len(data)}"
        )
    if count == 0:
        raise EmptyMeshError("binary STL declares zero facets")
    records = np.frombuffer(data, dtype=_STL_RECORD, count=count, offset=84)
    soup = records["verts"].astype(np.float64)
    if not np.isfinite(soup).all():
        raise ParseError("binary STL contains non-finite vertex coordinates")
    return soup


_VERTEX_RE = re.compile(rb"vertex\s+(\S+)\s+(\S+)\s+(\S+)", re.IGNORECASE)


def _parse_stl_ascii(data: bytes) -> np.ndarray:
    if b"facet" not in data.lower():
        raise ParseError("ASCII STL contains no facets")
    rows = _VERTEX_RE.findall(data)
    if not rows:
        raise EmptyMeshError("ASCII STL contains no vertices")
    if len(rows) % 3 != 0:
        raise ParseError(f"ASCII STL vertex count {len(rows)} is not a multiple of 3")
    try:
        flat = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"ASCII STL has a malformed vertex line: {exc}") from exc
    if not np.isfinite(flat).all():
        raise ParseError("ASCII STL contains non-finite vertex coordinates")
    return flat.reshape(-1, 3, 3)


def _parse_off(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"OFF file is not valid text: {exc}") from exc
    tokens: list[str] = []
    for line in text.splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.extend(body.split())
    if not tokens or tokens[0] != "OFF":
        raise ParseError("OFF file does not start with an OFF header")
    pos = 1
    try:
        nv, nf = int(tokens[pos]), int(tokens[pos + 1])
        int(tokens[pos + 2])  # edge count, unused
        pos += 3
        coords = np.array(tokens[pos : pos + 3 * nv], dtype=np.float64)
        if coords.size != 3 * nv:
            raise ParseError("OFF file ends inside its vertex list")
        vertices = coords.reshape(nv, 3)
        pos += 3 * nv
        faces: list[tuple[int, int, int]] = []
        for _ in range(nf):
            k = int(tokens[pos])
            idx = [int(t) for t in tokens[pos + 1 : pos + 1 + k]]
            if len(idx) != k or k < 3:
                raise ParseError("OFF face record is malformed")
            pos += 1 + k
            for j in range(1, k - 1):  # fan triangulation of polygons
                faces.append((idx[0], idx[j], idx[j + 1]))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"OFF file is malformed: {exc}") from exc
    if not faces:
        raise EmptyMeshError("OFF file contains no faces")
    face_arr = np.array(faces, dtype=np.int64)
    if face_arr.min() < 0 or face_arr.max() >= nv:
        raise ParseError("OFF face indexes a vertex that does not exist")
    if not np.isfinite(vertices).all():
        raise ParseError("OFF file contains non-finite vertex coordinates")
    return vertices, face_arr


def _weld(soup: np.ndarray, tol: float = WELD_TOLERANCE_MM) -> TriMesh:
    """Merge near-coincident vertices of a triangle soup and drop junk."""
    flat = soup.reshape(-1, 3)
    keys = np.round(flat / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    vertices = flat[first]
    triangles = inverse.reshape(-1, 3)

    a, b, c = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    distinct = (a != b) & (b != c) & (c != a)
    va, vb, vc = vertices[a], vertices[b], vertices[c]
    area2 = np.linalg.norm(np.cross(vb - va, vc - va), axis=1)
    span = float(np.ptp(flat, axis=0).max()) if len(flat) else 0.0
    keep = distinct & (area2 > 1e-12 * max(span, 1.0) ** 2)
    triangles = triangles[keep]
    if len(triangles) == 0:
        raise EmptyMeshError("no non-degenerate triangles after welding")

    used = np.unique(triangles)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriMesh(vertices[used], remap[triangles])


# ---------------------------------------------------------------------------
# Metrics


def compute_metrics(mesh: TriMesh) -> MeshMetrics:
    """Measurements of ``mesh``; cached on the mesh after the first call."""
    return mesh.metrics


def _measure(mesh: TriMesh) -> MeshMetrics:
    tc = mesh.vertices[mesh.triangles]
    bbox_min = mesh.vertices.min(axis=0)
    bbox_max = mesh.vertices.max(axis=0)
    area = 0.5 * np.linalg.norm(
        np.cross(tc[:, 1] - tc[:, 0], tc[:, 2] - tc[:, 0]), axis=1
    ).sum()
    volume = np.linalg.det(tc).sum() / 6.0
    return MeshMetrics(
        bbox_min=tuple(bbox_min),
        bbox_max=tuple(bbox_max),
        max_dimension=float((bbox_max - bbox_min).max()),
        surface_area=float(area),
        volume=float(volume),
        watertight=_is_watertight(mesh),
    )


def _is_watertight(mesh: TriMesh) -> bool:
    # Closed 2-manifold: every directed edge occurs exactly once and its
    # reverse occurs exactly once (consistent opposite orientation).
    t = mesh.triangles.astype(np.int64)
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    nv = len(mesh.vertices)
    fwd = np.sort(edges[:, 0] * nv + edges[:, 1])
    if len(fwd) > 1 and (np.diff(fwd) == 0).any():
        return False
    rev = np.sort(edges[:, 1] * nv + edges[:, 0])
    return bool(np.array_equal(fwd, rev))


# ---------------------------------------------------------------------------
# Point classification


def point_in_mesh(
    mesh: TriMesh,
    point,
    boundary_eps: float | None = None,
    seed: int = DEFAULT_SEED,
) -> PointClass:
    """Classify one point as inside, outside, or on the surface of ``mesh``.

    The mesh must be watertight.  Parity is decided by ray casting; rays that
    graze an edge or vertex are retried along fresh seeded-random directions,
    so the result is deterministic for a fixed seed.  ``boundary_eps``
    defaults to ``BOUNDARY_EPS_REL * max_dimension``.
    """
    res = classify_points(mesh, np.asarray(point, dtype=np.float64).reshape(1, 3),
                          boundary_eps=boundary_eps, seed=seed)
    return PointClass(int(res[0]))


def classify_points(
    mesh: TriMesh,
    points: np.ndarray,
    boundary_eps: float | None = None,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """Vectorized :func:`point_in_mesh` over an (N, 3) array.

    Returns an int8 array of :class:`PointClass` values.
    """
    metrics = mesh.metrics
    if not metrics.watertight:
        raise NotWatertightError("point containment needs a watertight mesh")
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    if boundary_eps is None:
        boundary_eps = BOUNDARY_EPS_REL * metrics.max_dimension

    dmin = _min_distance_to_surface(mesh.tri_coords(), pts)
    on = dmin <= boundary_eps

    inside = _points_inside(mesh, pts, seed=seed)
    out = np.where(inside, np.int8(PointClass.INSIDE), np.int8(PointClass.OUTSIDE))
    out[on] = np.int8(PointClass.ON_BOUNDARY)
    return out


def _points_inside(mesh: TriMesh, pts: np.ndarray, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Parity-only inside test (no boundary band).  Internal workhorse.

    Points whose vertical ray grazes an edge fall back to seeded random-
    direction casts; the outcome depends only on (mesh, point, seed), never
    on batch composition, which keeps parallel callers deterministic.
    """
    if not mesh.metrics.watertight:
        raise NotWatertightError("point containment needs a watertight mesh")
    grid = mesh._column_grid()
    counts, suspect = grid.crossings_above(pts)
    inside = (counts % 2).astype(bool)
    if suspect.any():
        idx = np.nonzero(suspect)[0]
        sub, unresolved = _ray_parity(mesh.tri_coords(), pts[idx],
                                      mesh.metrics.max_dimension, seed)
        if unresolved.any():
            # Pathological points sitting essentially on the surface: count
            # the near ones as inside, refuse the rest loudly.
            dres = _min_distance_to_surface(mesh.tri_coords(), pts[idx][unresolved])
            if (dres > 1e-6 * mesh.metrics.max_dimension).any():
                raise RuntimeError("ray parity failed to converge")
            sub[unresolved] = True
        inside[idx] = sub
    return inside


def _ray_parity(
    tc: np.ndarray, pts: np.ndarray, scale: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Robust parity via Moller-Trumbore along shared random directions.

    Every unresolved point is retried with the same per-attempt direction, so
    results do not depend on which points share a batch.  Returns
    ``(inside, still_unresolved)``.
    """
    v0 = tc[:, 0]
    e1 = tc[:, 1] - tc[:, 0]
    e2 = tc[:, 2] - tc[:, 0]
    inside = np.zeros(len(pts), dtype=bool)
    open_mask = np.ones(len(pts), dtype=bool)
    rng = np.random.default_rng(seed)
    bar_tol = 1e-9
    t_tol = _REL_TOL * max(scale, 1.0)

    for _ in range(_MAX_RAY_ATTEMPTS):
        if not open_mask.any():
            break
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        pvec = np.cross(d, e2)
        det = (e1 * pvec).sum(axis=1)
        live = np.abs(det) > 1e-14  # direction parallel to triangle: no crossing
        inv_det = np.zeros_like(det)
        inv_det[live] = 1.0 / det[live]

        sel = np.nonzero(open_mask)[0]
        chunk = max(1, _PAIR_BUDGET // max(len(tc), 1))
        for s in range(0, len(sel), chunk):
            rows = sel[s : s + chunk]
            tvec = pts[rows][:, None, :] - v0[None, :, :]
            u = (tvec * pvec[None, :, :]).sum(axis=2) * inv_det[None, :]
            qvec = np.cross(tvec, e1[None, :, :])
            v = (qvec @ d) * inv_det[None, :]
            t = (qvec * e2[None, :, :]).sum(axis=2) * inv_det[None, :]
            w = 1.0 - u - v
            strict = (
                live[None, :]
                & (u > bar_tol) & (v > bar_tol) & (w > bar_tol) & (t > t_tol)
            )
            loose = (
                live[None, :]
                & (u > -bar_tol) & (v > -bar_tol) & (w > -bar_tol) & (t > -t_tol)
            )
            grazed = (loose ^ strict).any(axis=1)
            ok = ~grazed
            inside[rows[ok]] = (strict[ok].sum(axis=1) % 2).astype(bool)
            open_mask[rows[ok]] = False
    return inside, open_mask


def _min_distance_to_surface(tc: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Smallest distance from each point to any triangle (Ericson's method)."""
    m = len(tc)
    out = np.empty(len(pts))
    chunk = max(1, _PAIR_BUDGET // max(m, 1))
    a, b, c = tc[:, 0], tc[:, 1], tc[:, 2]
    ab = b - a
    ac = c - a
    bc = c - b
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk][:, None, :]
        ap = p - a
        bp = p - b
        cp = p - c
        d1 = (ab * ap).sum(axis=2)
        d2 = (ac * ap).sum(axis=2)
        d3 = (ab * bp).sum(axis=2)
        d4 = (ac * bp).sum(axis=2)
        d5 = (ab * cp).sum(axis=2)
        d6 = (ac * cp).sum(axis=2)

        va = d3 * d6 - d5 * d4
        vb = d5 * d2 - d1 * d6
        vc = d1 * d4 - d3 * d2

        with np.errstate(divide="ignore", invalid="ignore"):
            t_ab = np.nan_to_num(d1 / (d1 - d3))
            t_ac = np.nan_to_num(d2 / (d2 - d6))
            t_bc = np.nan_to_num((d4 - d3) / ((d4 - d3) + (d5 - d6)))
            denom = va + vb + vc
            v_in = np.where(denom != 0.0, vb / denom, 0.0)
            w_in = np.where(denom != 0.0, vc / denom, 0.0)

        closest = a + v_in[..., None] * ab + w_in[..., None] * ac
        on_bc = (vc <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
        closest = np.where(on_bc[..., None], b + np.clip(t_bc, 0, 1)[..., None] * bc, closest)
        on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        closest = np.where(on_ac[..., None], a + np.clip(t_ac, 0, 1)[..., None] * ac, closest)
        on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        closest = np.where(on_ab[..., None], a + np.clip(t_ab, 0, 1)[..., None] * ab, closest)
        closest = np.where(((d6 >= 0) & (d5 <= d6))[..., None], c, closest)
        closest = np.where(((d3 >= 0) & (d4 <= d3))[..., None], b, closest)
        closest = np.where(((d1 <= 0) & (d2 <= 0))[..., None], a, closest)

        out[s : s + chunk] = np.linalg.norm(p - closest, axis=2).min(axis=1)
    return out


class _ColumnGrid:
    """2D bucket grid over the xy plane for vertical (+z) ray parity.

    Shared, read-only acceleration structure: the octree volume sampler and
    the tool-reach probes both cast vertical rays, and bucketing triangles by
    xy footprint makes each ray O(local triangles) instead of O(all).
    """

    def __init__(self, tc: np.ndarray, scale: float, res: int | None = None):
        self._tc = tc
        self._scale = max(scale, 1.0)
        xy = tc[..., :2]
        pad = 1e-9 * self._scale
        self._lo = xy.reshape(-1, 2).min(axis=0) - pad
        hi = xy.reshape(-1, 2).max(axis=0) + pad
        if res is None:
            res = int(np.clip(np.sqrt(len(tc) / 2.0), 4, 128))
        self._res = res
        self._cell = np.maximum((hi - self._lo) / res, 1e-12)

        tmin = xy.min(axis=1)
        tmax = xy.max(axis=1)
        i0 = np.clip(((tmin - self._lo) / self._cell).astype(int), 0, res - 1)
        i1 = np.clip(((tmax - self._lo) / self._cell).astype(int), 0, res - 1)
        buckets: list[list[int]] = [[] for _ in range(res * res)]
        for t in range(len(tc)):
            for ix in range(i0[t, 0], i1[t, 0] + 1):
                base = ix * res
                for iy in range(i0[t, 1], i1[t, 1] + 1):
                    buckets[base + iy].append(t)
        self._buckets = [np.array(b, dtype=np.int64) for b in buckets]

        # Precompute 2D edge setup per triangle.
        A, B, C = xy[:, 0], xy[:, 1], xy[:, 2]
        self._A, self._B, self._C = A, B, C
        self._denom = _cross2(B - A, C - A)
        self._zcoef = tc[..., 2]  # (M, 3) vertex z values
        self._flat2d = np.abs(self._denom) <= (1e-12 * self._scale**2)

    def _cells_of(self, xy: np.ndarray) -> np.ndarray:
        ij = np.floor((xy - self._lo) / self._cell).astype(np.int64)
        valid = (ij >= 0).all(axis=1) & (ij < self._res).all(axis=1)
        cell = np.where(valid, ij[:, 0] * self._res + ij[:, 1], -1)
        return cell

    def _hits(self, pts_xy: np.ndarray, tids: np.ndarray):
        """Barycentric evaluation of vertical lines against bucket triangles.

        Returns ``(z, strict, suspect)`` with shapes (P, T): surface height
        along each line, whether the line crosses the open triangle, and
        whether the answer is too close to an edge (or a vertical triangle)
        to trust.
        """
        A, B, C = self._A[tids], self._B[tids], self._C[tids]
        P = pts_xy[:, None, :]
        la = _cross2(B - P, C - P)
        lb = _cross2(C - P, A - P)
        lc = _cross2(A - P, B - P)
        denom = self._denom[tids][None, :]
        flat = self._flat2d[tids][None, :]
        zc = self._zcoef[tids]
        with np.errstate(divide="ignore", invalid="ignore"):
            la, lb, lc = la / denom, lb / denom, lc / denom
            z = la * zc[None, :, 0] + lb * zc[None, :, 1] + lc * zc[None, :, 2]
        z = np.where(flat, 0.0, z)  # flat triangles never count as crossings
        tol = 1e-9
        strict = ~flat & (la > tol) & (lb > tol) & (lc > tol)
        loose = ~flat & (la > -tol) & (lb > -tol) & (lc > -tol)
        # Vertical triangle whose footprint the point nearly touches: the
        # vertical ray runs inside its plane, so bail out to random casts.
        if flat.any():
            near_flat = flat & _near_tri_edges(pts_xy, A, B, C, 1e-9 * self._scale)
        else:
            near_flat = flat
        suspect = (loose ^ strict) | near_flat
        return z, strict, suspect

    def crossings_above(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Count surface crossings strictly above each point along +z."""
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
        counts = np.zeros(len(pts), dtype=np.int64)
        suspect = np.zeros(len(pts), dtype=bool)
        if len(pts) == 0:
            return counts, suspect
        cells = self._cells_of(pts[:, :2])
        order = np.argsort(cells, kind="stable")
        sorted_cells = cells[order]
        bounds = np.flatnonzero(np.diff(sorted_cells)) + 1
        ztol = _REL_TOL * self._scale
        for seg in np.split(order, bounds):
            cell = cells[seg[0]]
            if cell < 0:
                continue  # outside the grid footprint: zero crossings
            tids = self._buckets[cell]
            if len(tids) == 0:
                continue
            z, strict, sus = self._hits(pts[seg][:, :2], tids)
            dz = z - pts[seg][:, 2][:, None]
            counts[seg] = (strict & (dz > ztol)).sum(axis=1)
            suspect[seg] = sus.any(axis=1) | (strict & (np.abs(dz) <= ztol)).any(axis=1)
        return counts, suspect

    def z_crossings(self, x: float, y: float) -> tuple[np.ndarray, bool]:
        """All surface heights pierced by the full vertical line at (x, y)."""
        xy = np.array([[x, y]])
        cell = self._cells_of(xy)[0]
        if cell < 0:
            return np.empty(0), False
        tids = self._buckets[cell]
        if len(tids) == 0:
            return np.empty(0), False
        z, strict, suspect = self._hits(xy, tids)
        return np.sort(z[0][strict[0]]), bool(suspect[0].any())


def _cross2(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _near_tri_edges(pts_xy, A, B, C, pad):
    """(P, T) mask: point within ``pad`` of any edge of the projected triangle.

    A degenerate 2D projection collapses to a segment covered by its edges,
    so edge distance is the exact footprint distance there.
    """
    P = pts_xy[:, None, :]
    d2 = None
    for U, V in ((A, B), (B, C), (C, A)):
        e = V - U
        ee = np.maximum((e * e).sum(axis=-1), 1e-300)[None, :]
        t = np.clip(((P - U[None]) * e[None]).sum(axis=-1) / ee, 0.0, 1.0)
        q = U[None] + t[..., None] * e[None]
        dd = ((P - q) ** 2).sum(axis=-1)
        d2 = dd if d2 is None else np.minimum(d2, dd)
    return d2 <= pad * pad


# ---------------------------------------------------------------------------
# Triangle / box intersection


def triangle_box_intersect(triangle, box_min, box_max) -> bool:
    """Exact separating-axis test between one triangle and a closed AABB.

    Touching contact counts as intersection.  13 axes: 3 box normals, the
    triangle normal, and the 9 edge cross-products.
    """
    tri = np.asarray(triangle, dtype=np.float64).reshape(1, 3, 3)
    lo = np.asarray(box_min, dtype=np.float64)
    hi = np.asarray(box_max, dtype=np.float64)
    center = (0.5 * (lo + hi)).reshape(1, 3)
    half = (0.5 * (hi - lo)).reshape(1, 3)
    return bool(_tri_box_overlap(tri, center, half)[0, 0])


def _tri_box_overlap(tc: np.ndarray, centers: np.ndarray, halves: np.ndarray) -> np.ndarray:
    """Batched SAT: triangles (M,3,3) against boxes (B,3)+(B,3) -> (B,M) bool."""
    v = tc[None, :, :, :] - centers[:, None, None, :]  # (B, M, 3, 3)
    h = halves[:, None, :]  # (B, 1, 3)

    sep = (v.min(axis=2) > h) | (v.max(axis=2) < -h)
    sep = sep.any(axis=2)

    edges = (
        tc[:, 1] - tc[:, 0],
        tc[:, 2] - tc[:, 1],
        tc[:, 0] - tc[:, 2],
    )
    n = np.cross(edges[0], edges[1])  # (M, 3)
    d = np.einsum("mk,bmk->bm", n, v[:, :, 0, :])
    r = np.einsum("bk,mk->bm", halves, np.abs(n))
    sep |= np.abs(d) > r

    zero = np.zeros(len(tc))
    for e in edges:
        axes = (
            np.stack([zero, -e[:, 2], e[:, 1]], axis=1),
            np.stack([e[:, 2], zero, -e[:, 0]], axis=1),
            np.stack([-e[:, 1], e[:, 0], zero], axis=1),
        )
        for a in axes:
            proj = np.einsum("mk,bmik->bmi", a, v)  # (B, M, 3)
            rad = np.einsum("bk,mk->bm", halves, np.abs(a))
            sep |= (proj.min(axis=2) > rad) | (proj.max(axis=2) < -rad)
    return ~sep
