"""2D primitives shared by synthesis, physics, solving and scoring."""

import logging
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from crosscut.config import TAU_AREA_REL, TAU_GEOM_REL, TAU_PAR
from crosscut.errors import GeometryError
from crosscut.models.geometry import ConvexPolygon, Line2

logger = logging.getLogger(__name__)

PolygonLike = Union[ConvexPolygon, np.ndarray, Sequence[Sequence[float]]]


def intersect_lines(l1: Line2, l2: Line2) -> Optional[np.ndarray]:
    """Unique intersection of two lines, or None when they are (near) parallel."""
    det = l1.a1 * l2.a2 - l1.a2 * l2.a1
    if abs(det) <= TAU_PAR:
        return None
    x = (l1.a2 * l2.a3 - l1.a3 * l2.a2) / det
    y = (l1.a3 * l2.a1 - l1.a1 * l2.a3) / det
    return np.array([x, y])


def _bbox_area(vertices: np.ndarray) -> float:
    span = np.ptp(vertices, axis=0)
    return float(span[0] * span[1])


def polygon_area(p: ConvexPolygon) -> float:
    """Positive shoelace area; rejects slivers below 1e-9 of the bounding box."""
    area = p.area()
    if area <= TAU_AREA_REL * _bbox_area(p.vertices):
        raise GeometryError(f"degenerate polygon with area {area!r}")
    return area


def _inside(edge_start: np.ndarray, edge_end: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # clockwise clip ring: inside is to the right of (or on) the edge
    d = edge_end - edge_start
    return d[0] * (pts[:, 1] - edge_start[1]) - d[1] * (pts[:, 0] - edge_start[0]) <= 0.0


def _segment_line_hit(s: np.ndarray, e: np.ndarray, c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    dc = c2 - c1
    ds = e - s
    denom = dc[0] * ds[1] - dc[1] * ds[0]
    t = (dc[0] * (c1[1] - s[1]) - dc[1] * (c1[0] - s[0])) / denom
    return s + t * ds


def clip_convex(p: ConvexPolygon, q: ConvexPolygon) -> Optional[ConvexPolygon]:
    """Intersection of two convex polygons by successive half-plane clipping, or None if empty."""
    output = [v for v in p.vertices]
    clip = q.vertices
    for k in range(len(clip)):
        if not output:
            return None
        c1, c2 = clip[k], clip[(k + 1) % len(clip)]
        ring = np.array(output)
        inside = _inside(c1, c2, ring)
        output = []
        for i in range(len(ring)):
            s, e = ring[i - 1], ring[i]
            s_in, e_in = inside[i - 1], inside[i]
            if e_in:
                if not s_in:
                    output.append(_segment_line_hit(s, e, c1, c2))
                output.append(e)
            elif s_in:
                output.append(_segment_line_hit(s, e, c1, c2))
    if len(output) < 3:
        return None
    extent = max(float(np.ptp(p.vertices, axis=0).max()), float(np.ptp(clip, axis=0).max()))
    try:
        result = ConvexPolygon.cleaned(output, TAU_GEOM_REL * extent)
    except GeometryError:
        return None
    if result.area() <= TAU_AREA_REL * min(_bbox_area(p.vertices), _bbox_area(clip)):
        return None
    return result


def intersection_area(p: ConvexPolygon, q: ConvexPolygon) -> float:
    clipped = clip_convex(p, q)
    return 0.0 if clipped is None else clipped.area()


def convex_hull(points: Iterable[Sequence[float]]) -> ConvexPolygon:
    """Minimal convex polygon containing the points, clockwise."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise GeometryError("a hull needs at least 3 points")
    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise GeometryError(f"hull input is degenerate (collinear?): {e}") from e
    # qhull returns 2D hull vertices counter-clockwise
    return ConvexPolygon(pts[hull.vertices][::-1])


def diameter(shape: Union[PolygonLike, Iterable[ConvexPolygon]]) -> float:
    """Largest distance between any two vertices."""
    if isinstance(shape, ConvexPolygon):
        pts = shape.vertices
    elif isinstance(shape, np.ndarray):
        pts = shape
    else:
        items = list(shape)
        if items and isinstance(items[0], ConvexPolygon):
            pts = np.vstack([poly.vertices for poly in items])
        else:
            pts = np.asarray(items, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[0] < 2:
        raise GeometryError("diameter needs at least 2 points")
    if pts.shape[0] > 64:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    return float(pdist(pts).max())


def chord(line: Line2, poly: ConvexPolygon) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """The segment of `line` inside `poly`, or None when it misses the interior."""
    d = line.direction
    p0 = line.point()
    lo, hi = -np.inf, np.inf
    v = poly.vertices
    for k in range(len(v)):
        a, b = v[k], v[(k + 1) % len(v)]
        e = b - a
        # interior: e x (x - a) <= 0; along the line: num + t * den <= 0
        num = e[0] * (p0[1] - a[1]) - e[1] * (p0[0] - a[0])
        den = e[0] * d[1] - e[1] * d[0]
        if abs(den) <= TAU_PAR:
            if num > 0:
                return None
            continue
        t = -num / den
        if den > 0:
            hi = min(hi, t)
        else:
            lo = max(lo, t)
    if not hi > lo:
        return None
    return p0 + lo * d, p0 + hi * d
