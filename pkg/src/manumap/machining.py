"""Difficulty indexes for machining a part out of stock.

Global indexes grade the whole part (fit in the workspace, chip volume,
material hardness, required finish); the local tool-reach field grades each
grey octree box by how deep a vertical mill must descend to machine it and
whether any available tool can get there without colliding with the part.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyFieldError,
    MeshMismatchError,
    NonPositiveRoughnessError,
    NotWatertightError,
    ProfileError,
)
from .fields import LocalIndexField, clamp01, fit_ratio
from .mesh_io import TriMesh, as_metrics
from .spatial import Octree

_EPS_REL = 1e-6
_JITTER_REL = 1e-5
_MAX_COLUMN_ATTEMPTS = 8


@dataclass(frozen=True)
class SubtractiveProfile:
    """Capabilities of the milling setup used for grading.

    workspace:
        Machinable stock envelope (mm), any axis assignment allowed.
    tool_diameters:
        Available end-mill diameters (mm).
    max_aspect:
        Largest workable length-to-diameter ratio of a tool.
    hardness_limit_hb:
        Hardest material (Brinell) the setup can cut.
    roughness_best_um / roughness_coarse_um:
        Finest achievable and no-effort surface roughness (Ra, um).
    """

    workspace: tuple[float, float, float] = (800.0, 600.0, 500.0)
    tool_diameters: tuple[float, ...] = (2.0, 5.0, 10.0, 20.0)
    max_aspect: float = 10.0
    hardness_limit_hb: float = 600.0
    roughness_best_um: float = 0.4
    roughness_coarse_um: float = 6.4

    def __post_init__(self):
        ws = tuple(float(v) for v in self.workspace)
        if len(ws) != 3 or any(v <= 0 for v in ws):
            raise ProfileError(f"workspace must be three positive extents, got {self.workspace!r}")
        tools = tuple(sorted(float(d) for d in self.tool_diameters))
        if not tools or any(d <= 0 for d in tools):
            raise ProfileError("tool_diameters must be a non-empty list of positive diameters")
        if self.max_aspect <= 1:
            raise ProfileError(
                f"max_aspect must exceed 1 (a tool shorter than its diameter cannot plunge), got {self.max_aspect!r}"
            )
        if self.hardness_limit_hb <= 0:
            raise ProfileError("hardness_limit_hb must be positive")
        if not 0 < self.roughness_best_um < self.roughness_coarse_um:
            raise ProfileError(
                "roughness bounds need 0 < best < coarse, got "
                f"best={self.roughness_best_um!r} coarse={self.roughness_coarse_um!r}"
            )
        object.__setattr__(self, "workspace", ws)
        object.__setattr__(self, "tool_diameters", tools)


def max_dimension_index(mesh, profile: SubtractiveProfile) -> float:
    """How close the part comes to exceeding the stock envelope (1 = does not fit)."""
    return clamp01(fit_ratio(as_metrics(mesh).extents, profile.workspace))


def chip_volume_index(mesh) -> float:
    """Fraction of the bounding stock that must be removed as chips."""
    m = as_metrics(mesh)
    if not m.watertight:
        raise NotWatertightError("chip volume needs a closed mesh with a trustworthy volume")
    if m.bbox_volume <= 0:
        raise ValueError("degenerate bounding box, cannot grade chip volume")
    return clamp01((m.bbox_volume - abs(m.volume)) / m.bbox_volume)


def hardness_index(hardness_hb: float, profile: SubtractiveProfile) -> float:
    """Material hardness relative to the hardest the setup can cut."""
    if hardness_hb <= 0:
        raise ProfileError(f"hardness must be positive, got {hardness_hb!r}")
    return clamp01(hardness_hb / profile.hardness_limit_hb)


def roughness_index(required_ra_um: float, profile: SubtractiveProfile) -> float:
    """Difficulty of hitting the required finish, log-scaled between the
    no-effort roughness (0) and the finest the setup can do (1)."""
    if required_ra_um <= 0:
        raise NonPositiveRoughnessError(f"required Ra must be positive, got {required_ra_um!r}")
    coarse = profile.roughness_coarse_um
    best = profile.roughness_best_um
    if required_ra_um >= coarse:
        return 0.0
    if required_ra_um <= best:
        return 1.0
    return clamp01(math.log(coarse / required_ra_um) / math.log(coarse / best))


# ---------------------------------------------------------------------------
# Local tool-reach field


def tool_flexibility_field(
    mesh: TriMesh, octree: Octree, profile: SubtractiveProfile, workers: int = 1
) -> LocalIndexField:
    """Per-grey-leaf difficulty of reaching the box with a vertical end mill.

    For each grey leaf the required reach is the drop from the part's top
    plane to the leaf's top face.  Tools are tried largest first; a tool
    qualifies when five probe columns spread over its footprint (center plus
    four points at r/sqrt(2)) meet no part material between the leaf top and
    the part top.  The value is the reach of the largest qualifying tool in
    units of its allowed aspect ratio, clamped to 1; boxes no tool can reach
    from above score 1.
    """
    if mesh.content_hash() != octree.mesh_hash:
        raise MeshMismatchError("octree was built from a different mesh")
    leaves = octree.grey_leaves()
    if not leaves:
        raise EmptyFieldError("no grey leaves to grade")

    if workers <= 1 or len(leaves) < 64:
        values = _solve_leaves(mesh, octree, profile, leaves)
    else:
        chunk = (len(leaves) + workers - 1) // workers
        parts = [leaves[i : i + chunk] for i in range(0, len(leaves), chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda p: _solve_leaves(mesh, octree, profile, p), parts))
        values = np.concatenate(out)

    return LocalIndexField(
        index_id="tool_flexibility",
        values=values,
        volumes=np.array([n.part_volume or 0.0 for n in leaves]),
        octree_hash=octree.fingerprint()["content_hash"],
        path_keys=tuple(n.path_key for n in leaves),
    )


_PROBE_DIRS = np.array([(0.0, 0.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)])


def _solve_leaves(
    mesh: TriMesh, octree: Octree, profile: SubtractiveProfile, leaves
) -> np.ndarray:
    metrics = mesh.metrics
    part_top = metrics.bbox_max[2]
    eps = _EPS_REL * metrics.max_dimension

    tops = np.array([n.box_max[2] for n in leaves])
    centers = np.array([n.center[:2] for n in leaves])
    keys = np.array([n.path_key for n in leaves], dtype=np.int64)
    reach = part_top - tops

    values = np.full(len(leaves), 1.0)  # unreachable until proven otherwise
    values[reach <= eps] = 0.0  # top-plane boxes need no descent
    unresolved = reach > eps

    for diameter in sorted(profile.tool_diameters, reverse=True):
        if not unresolved.any():
            break
        idx = np.flatnonzero(unresolved)
        spread = diameter / (2.0 * math.sqrt(2.0))
        xy = centers[idx][:, None, :] + spread * _PROBE_DIRS[None, :, :]
        lo = np.repeat(tops[idx], len(_PROBE_DIRS))
        hi = np.full(len(lo), part_top)
        probe_keys = (keys[idx][:, None] * 8 + np.arange(len(_PROBE_DIRS))[None, :]).ravel()
        blocked = _columns_blocked(mesh, xy.reshape(-1, 2), lo, hi, octree.seed, probe_keys)
        free = ~blocked.reshape(len(idx), len(_PROBE_DIRS)).any(axis=1)
        ok = idx[free]
        values[ok] = np.minimum(1.0, reach[ok] / diameter / profile.max_aspect)
        unresolved[ok] = False
    return values


def _columns_blocked(
    mesh: TriMesh, xy: np.ndarray, lo: np.ndarray, hi: np.ndarray, seed: int, probe_keys: np.ndarray
) -> np.ndarray:
    """True where part material occupies any of the open column (lo, hi) at xy.

    Columns whose parity count is unreliable (grazing hits) are re-tried at
    deterministically jittered xy; ones that never settle count as blocked.
    """
    scale = mesh.metrics.max_dimension
    eps = _EPS_REL * scale
    blocked = np.zeros(len(xy), dtype=bool)
    pend = np.arange(len(xy))
    pxy = xy.copy()
    for attempt in range(_MAX_COLUMN_ATTEMPTS):
        pts_lo = np.column_stack([pxy[pend], lo[pend] + eps])
        pts_hi = np.column_stack([pxy[pend], hi[pend] - eps])
        pts_mid = np.column_stack([pxy[pend], 0.5 * (lo[pend] + hi[pend])])
        grid = mesh._column_grid()
        n_lo, s1 = grid.crossings_above(pts_lo)
        n_hi, s2 = grid.crossings_above(pts_hi)
        n_mid, s3 = grid.crossings_above(pts_mid)
        suspect = s1 | s2 | s3
        settled = ~suspect
        hit = (n_lo - n_hi > 0) | (n_mid % 2 == 1)
        blocked[pend[settled]] = hit[settled]
        pend = pend[suspect]
        if len(pend) == 0:
            return blocked
        step = _JITTER_REL * scale * (attempt + 1)
        for k in pend:
            rng = np.random.default_rng([max(seed, 0), int(probe_keys[k]), attempt])
            pxy[k] = xy[k] + rng.uniform(-step, step, 2)
    blocked[pend] = True
    return blocked
