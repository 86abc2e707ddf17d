"""Independent reference implementations used only to check the engine.

Each oracle answers a question the engine also answers, by a different
route: point containment via generalized winding numbers instead of ray
parity, triangle-box overlap via half-space polygon clipping instead of
separating axes, volumes via closed forms.  Nothing here imports engine
geometry code beyond the mesh container.
"""

from __future__ import annotations

import math

import numpy as np


def winding_numbers(mesh, points, chunk: int = 256) -> np.ndarray:
    """Generalized winding number of each point with respect to the mesh.

    Sum of signed solid angles of all triangles over 4*pi: about 1 inside a
    closed outward-oriented surface, about 0 outside, near 0.5 on it.
    """
    tc = mesh.tri_coords()
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.empty(len(pts))
    for start in range(0, len(pts), chunk):
        p = pts[start : start + chunk]
        a = tc[None, :, 0, :] - p[:, None, :]
        b = tc[None, :, 1, :] - p[:, None, :]
        c = tc[None, :, 2, :] - p[:, None, :]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        numer = np.einsum("pti,pti->pt", a, np.cross(b, c))
        denom = (
            la * lb * lc
            + np.einsum("pti,pti->pt", a, b) * lc
            + np.einsum("pti,pti->pt", b, c) * la
            + np.einsum("pti,pti->pt", c, a) * lb
        )
        omega = 2.0 * np.arctan2(numer, denom)
        out[start : start + chunk] = omega.sum(axis=1) / (4.0 * math.pi)
    return out


def winding_inside(mesh, points) -> np.ndarray:
    return winding_numbers(mesh, points) > 0.5


def clip_polygon_halfspace(poly, axis: int, bound: float, keep_greater: bool):
    """One Sutherland-Hodgman pass: keep the side of an axis plane."""
    sign = 1.0 if keep_greater else -1.0
    out = []
    n = len(poly)
    for i in range(n):
        cur = poly[i]
        nxt = poly[(i + 1) % n]
        d0 = sign * (cur[axis] - bound)
        d1 = sign * (nxt[axis] - bound)
        if d0 >= 0.0:
            out.append(cur)
        if (d0 < 0.0) != (d1 < 0.0):
            t = d0 / (d0 - d1)
            out.append(cur + t * (nxt - cur))
    return out


def triangle_box_overlap(triangle, box_min, box_max) -> bool:
    """Closed-box triangle overlap by clipping the triangle to the box.

    The triangle polygon is clipped against the six box half-spaces; any
    surviving geometry (even a single touching point) means overlap.
    """
    poly = [np.asarray(v, dtype=np.float64) for v in triangle]
    lo = np.asarray(box_min, dtype=np.float64)
    hi = np.asarray(box_max, dtype=np.float64)
    for axis in range(3):
        poly = clip_polygon_halfspace(poly, axis, lo[axis], keep_greater=True)
        if not poly:
            return False
        poly = clip_polygon_halfspace(poly, axis, hi[axis], keep_greater=False)
        if not poly:
            return False
    return True


def triangle_sample_points(triangle, per_edge: int = 40) -> np.ndarray:
    """Dense barycentric lattice over a triangle, corners included."""
    v0, v1, v2 = (np.asarray(v, dtype=np.float64) for v in triangle)
    pts = []
    for i in range(per_edge + 1):
        for j in range(per_edge + 1 - i):
            u = i / per_edge
            w = j / per_edge
            pts.append(v0 + u * (v1 - v0) + w * (v2 - v0))
    return np.array(pts)


def sphere_volume(radius: float) -> float:
    return 4.0 / 3.0 * math.pi * radius**3


def sphere_area(radius: float) -> float:
    return 4.0 * math.pi * radius**2


def torus_volume(major_radius: float, minor_radius: float) -> float:
    return 2.0 * math.pi**2 * major_radius * minor_radius**2
