"""Line, convex polygon and pose value types.

Orientation convention (repo-wide): y axis points up, polygon vertices are
ordered clockwise, so the shoelace signed area is negative.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from crosscut.config import TAU_GEOM_REL
from crosscut.errors import GeometryError


def signed_area(vertices: np.ndarray) -> float:
    """Shoelace signed area; negative for clockwise rings."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _as_vertex_array(points: Iterable[Sequence[float]]) -> np.ndarray:
    arr = np.array([[float(p[0]), float(p[1])] for p in points], dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise GeometryError(f"a polygon needs at least 3 vertices, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("polygon vertices must be finite")
    return arr


@dataclass(frozen=True)
class Line2:
    """Line a1*x + a2*y + a3 = 0, normalized so a1^2 + a2^2 = 1 with a canonical sign."""

    a1: float
    a2: float
    a3: float

    def __post_init__(self) -> None:
        norm = math.hypot(self.a1, self.a2)
        if norm == 0.0 or not math.isfinite(norm) or not math.isfinite(self.a3):
            raise GeometryError(f"degenerate line coefficients ({self.a1}, {self.a2}, {self.a3})")
        a1, a2, a3 = self.a1 / norm, self.a2 / norm, self.a3 / norm
        lead = a1 if abs(a1) > 1e-15 else a2
        if lead < 0:
            a1, a2, a3 = -a1, -a2, -a3
        object.__setattr__(self, "a1", a1 + 0.0)
        object.__setattr__(self, "a2", a2 + 0.0)
        object.__setattr__(self, "a3", a3 + 0.0)

    @classmethod
    def through(cls, p: Sequence[float], q: Sequence[float]) -> "Line2":
        """Line through two distinct points."""
        dx, dy = q[0] - p[0], q[1] - p[1]
        if dx == 0.0 and dy == 0.0:
            raise GeometryError("a line needs two distinct points")
        return cls(dy, -dx, dx * p[1] - dy * p[0])

    @classmethod
    def exact(cls, a1: float, a2: float, a3: float) -> "Line2":
        """Rebuild a stored, already normalized line without renormalizing it."""
        if abs(math.hypot(a1, a2) - 1.0) > 1e-12 or not math.isfinite(a3):
            raise GeometryError(f"line ({a1}, {a2}, {a3}) is not normalized")
        line = object.__new__(cls)
        object.__setattr__(line, "a1", float(a1))
        object.__setattr__(line, "a2", float(a2))
        object.__setattr__(line, "a3", float(a3))
        return line

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a1, self.a2])

    @property
    def direction(self) -> np.ndarray:
        return np.array([-self.a2, self.a1])

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return points[:, 0] * self.a1 + points[:, 1] * self.a2 + self.a3

    def point(self) -> np.ndarray:
        """The point of the line closest to the origin."""
        return -self.a3 * self.normal

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.a1, self.a2, self.a3)


class ConvexPolygon:
    """Immutable strictly convex polygon with clockwise vertices.

    The constructor reorients counter-clockwise input and rejects rings that
    are not convex within a tolerance relative to the polygon's extent.
    """

    __slots__ = ("_vertices",)

    def __init__(self, vertices: Iterable[Sequence[float]]):
        arr = _as_vertex_array(vertices)
        if signed_area(arr) > 0:
            arr = arr[::-1].copy()
        _check_convex(arr)
        arr.setflags(write=False)
        self._vertices = arr

    @classmethod
    def cleaned(cls, vertices: Iterable[Sequence[float]], tol: float) -> "ConvexPolygon":
        """Build from a ring that may repeat points or carry collinear vertices."""
        arr = np.asarray(list(vertices), dtype=float)
        kept = []
        for v in arr:
            if not kept or np.hypot(*(v - kept[-1])) > tol:
                kept.append(v)
        while len(kept) > 1 and np.hypot(*(kept[0] - kept[-1])) <= tol:
            kept.pop()
        changed = True
        while changed and len(kept) >= 3:
            changed = False
            for i in range(len(kept)):
                a, b, c = kept[i - 1], kept[i], kept[(i + 1) % len(kept)]
                ab, bc = b - a, c - b
                if abs(ab[0] * bc[1] - ab[1] * bc[0]) <= tol * (np.hypot(*ab) + np.hypot(*bc)):
                    kept.pop(i)
                    changed = True
                    break
        return cls(kept)

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    def __len__(self) -> int:
        return self._vertices.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConvexPolygon):
            return NotImplemented
        return self._vertices.shape == other._vertices.shape and bool(
            np.array_equal(self._vertices, other._vertices)
        )

    def __hash__(self) -> int:
        return hash(self._vertices.tobytes())

    def __repr__(self) -> str:
        return f"ConvexPolygon({self._vertices.tolist()!r})"

    def edge(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        """Edge j runs from vertex j to vertex j+1 (cyclically)."""
        n = len(self)
        return self._vertices[j % n], self._vertices[(j + 1) % n]

    def edge_lengths(self) -> np.ndarray:
        d = np.roll(self._vertices, -1, axis=0) - self._vertices
        return np.hypot(d[:, 0], d[:, 1])

    def interior_angles(self) -> np.ndarray:
        """Interior angle at every vertex, in (0, pi) for a convex ring."""
        v = self._vertices
        to_prev = np.roll(v, 1, axis=0) - v
        to_next = np.roll(v, -1, axis=0) - v
        cross = to_prev[:, 0] * to_next[:, 1] - to_prev[:, 1] * to_next[:, 0]
        dot = np.einsum("ij,ij->i", to_prev, to_next)
        return np.abs(np.arctan2(cross, dot))

    def area(self) -> float:
        return -signed_area(self._vertices)

    def centroid(self) -> np.ndarray:
        """Area centroid (center of mass for uniform density)."""
        v = self._vertices
        nxt = np.roll(v, -1, axis=0)
        cross = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
        a = 0.5 * cross.sum()
        cx = ((v[:, 0] + nxt[:, 0]) * cross).sum() / (6.0 * a)
        cy = ((v[:, 1] + nxt[:, 1]) * cross).sum() / (6.0 * a)
        return np.array([cx, cy])

    def vertex_mean(self) -> np.ndarray:
        return self._vertices.mean(axis=0)

    def transformed(self, pose: "Pose") -> "ConvexPolygon":
        return ConvexPolygon(pose.apply(self._vertices))

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """True for points inside or within tol of the boundary."""
        points = np.atleast_2d(points)
        v = self._vertices
        edges = np.roll(v, -1, axis=0) - v
        rel = points[:, None, :] - v[None, :, :]
        cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        # clockwise ring: interior lies to the right of every edge
        return np.all(cross <= tol * lengths[None, :], axis=1)


def _check_convex(arr: np.ndarray) -> None:
    extent = float(np.ptp(arr, axis=0).max())
    if extent <= 0:
        raise GeometryError("polygon has zero extent")
    tol = TAU_GEOM_REL
    prev = arr - np.roll(arr, 1, axis=0)
    nxt = np.roll(arr, -1, axis=0) - arr
    lp = np.hypot(prev[:, 0], prev[:, 1])
    ln = np.hypot(nxt[:, 0], nxt[:, 1])
    if np.any(ln <= tol * extent):
        raise GeometryError("polygon has repeated vertices")
    cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
    if np.any(cross > tol * lp * ln):
        raise GeometryError("polygon is not convex")
    turning = np.arctan2(cross, np.einsum("ij,ij->i", prev, nxt)).sum()
    if abs(turning + 2.0 * math.pi) > 1e-6:
        raise GeometryError("polygon ring is not simple")


@dataclass(frozen=True)
class Pose:
    """Rigid motion x -> R(angle) x + (tx, ty)."""

    angle: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    @classmethod
    def from_matrix(cls, rotation: np.ndarray, translation: Sequence[float]) -> "Pose":
        angle = math.atan2(float(rotation[1, 0]), float(rotation[0, 0]))
        return cls(angle, float(translation[0]), float(translation[1]))

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.tx, self.ty])

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def compose(self, inner: "Pose") -> "Pose":
        """self after inner."""
        t = self.rotation @ inner.translation + self.translation
        return Pose(_wrap(self.angle + inner.angle), float(t[0]), float(t[1]))

    def inverse(self) -> "Pose":
        r_inv = self.rotation.T
        t = -r_inv @ self.translation
        return Pose(_wrap(-self.angle), float(t[0]), float(t[1]))


def _wrap(angle: float) -> float:
    return math.atan2(math.sin(angle), math.cos(angle))
