"""Puzzle content, topology and ground-truth types."""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

from crosscut.errors import GeometryError, MatingConflictError, NoiseError
from crosscut.models.geometry import ConvexPolygon, Line2, Pose

FORMAT_VERSION = "1"


@dataclass(frozen=True, order=True)
class EdgeRef:
    """Edge `edge_index` of piece `piece_id`: from vertex j to vertex j+1."""

    piece_id: int
    edge_index: int

    def __str__(self) -> str:
        return f"{self.piece_id}:{self.edge_index}"


@dataclass(frozen=True, order=True)
class Mating:
    """Unordered pair of edges on two different pieces, stored with a <= b."""

    a: EdgeRef
    b: EdgeRef

    def __post_init__(self) -> None:
        if self.a.piece_id == self.b.piece_id:
            raise MatingConflictError(
                f"a mating joins two different pieces, got {self.a} and {self.b}"
            )
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @property
    def edges(self) -> Tuple[EdgeRef, EdgeRef]:
        return (self.a, self.b)

    @property
    def pieces(self) -> Tuple[int, int]:
        return (self.a.piece_id, self.b.piece_id)

    def other(self, edge: EdgeRef) -> EdgeRef:
        if edge == self.a:
            return self.b
        if edge == self.b:
            return self.a
        raise KeyError(str(edge))

    def __str__(self) -> str:
        return f"{{{self.a}, {self.b}}}"


@dataclass(frozen=True)
class EdgeGeom:
    """Measured length of an edge, its neighbours' lengths and the interior angles at both ends.

    angle_start is at vertex j (shared with the previous edge), angle_end at
    vertex j+1 (shared with the next edge).
    """

    length: float
    prev_length: float
    next_length: float
    angle_start: float
    angle_end: float


def check_mate_uniqueness(matings: Iterable[Mating]) -> None:
    """Raise MatingConflictError if any edge appears in more than one mating."""
    seen: Dict[EdgeRef, Mating] = {}
    for m in matings:
        for e in m.edges:
            if e in seen and seen[e] != m:
                raise MatingConflictError(f"edge {e} is used by both {seen[e]} and {m}")
            seen[e] = m


@dataclass(frozen=True)
class NoiseSpec:
    """Relative bound xi, absolute bound epsilon = xi * diameter."""

    xi: float
    epsilon: float
    diameter: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.xi < 1.0:
            raise NoiseError(f"xi must be in [0, 1), got {self.xi}")
        if not self.diameter > 0:
            raise NoiseError(f"diameter must be positive, got {self.diameter}")
        if self.epsilon != self.xi * self.diameter:
            raise NoiseError(
                f"epsilon {self.epsilon!r} != xi * diameter {self.xi * self.diameter!r}"
            )

    @classmethod
    def from_xi(cls, xi: float, diameter: float) -> "NoiseSpec":
        return cls(xi=xi, epsilon=xi * diameter, diameter=diameter)


@dataclass(frozen=True)
class CutSet:
    shape: ConvexPolygon
    cuts: Tuple[Line2, ...]


@dataclass
class GroundTruth:
    """What the generator knows about the solved puzzle.

    poses map each local-frame piece into solved coordinates. clean_pieces
    are the local-frame pieces before noise. boundary_edges lie on the shape
    border and have no mate. The counts describe the cut arrangement.
    """

    matings: FrozenSet[Mating]
    poses: Dict[int, Pose]
    clean_pieces: Dict[int, ConvexPolygon] = field(default_factory=dict)
    boundary_edges: FrozenSet[EdgeRef] = frozenset()
    cuts: Tuple[Line2, ...] = ()
    n_intersections: Optional[int] = None
    n_cut_edges: Optional[int] = None
    cut_length: Optional[float] = None

    def __post_init__(self) -> None:
        check_mate_uniqueness(self.matings)

    def solved_pieces(self, pieces: Mapping[int, ConvexPolygon]) -> Dict[int, ConvexPolygon]:
        return {pid: pieces[pid].transformed(self.poses[pid]) for pid in sorted(self.poses)}


@dataclass
class PuzzleBundle:
    """A puzzle as distributed: local-frame pieces, noise bound, optional truth."""

    pieces: Dict[int, ConvexPolygon]
    noise: NoiseSpec
    shape: ConvexPolygon
    shape_kind: str = "polygon"
    seed: Optional[int] = None
    ground_truth: Optional[GroundTruth] = None
    format_version: str = FORMAT_VERSION

    def __post_init__(self) -> None:
        if not self.pieces:
            raise GeometryError("a puzzle needs at least one piece")
        if self.ground_truth is not None:
            unknown = sorted(set(self.ground_truth.poses) ^ set(self.pieces))
            if unknown:
                raise GeometryError(f"ground-truth poses and pieces disagree on ids {unknown}")

    @property
    def n_cuts(self) -> Optional[int]:
        return len(self.ground_truth.cuts) if self.ground_truth is not None else None

    def piece_areas(self) -> Dict[int, float]:
        return {pid: poly.area() for pid, poly in self.pieces.items()}

    def without_ground_truth(self) -> "PuzzleBundle":
        return PuzzleBundle(
            pieces=self.pieces,
            noise=self.noise,
            shape=self.shape,
            shape_kind=self.shape_kind,
            seed=self.seed,
            ground_truth=None,
            format_version=self.format_version,
        )
