"""Rigid bodies and zero-length springs for placement by relaxation."""

from dataclasses import dataclass, field

import numpy as np

from crosscut.models.geometry import Pose


@dataclass(frozen=True)
class Spring:
    """Zero-rest-length spring between vertex a_vertex of a_piece and b_vertex of b_piece."""

    a_piece: int
    a_vertex: int
    b_piece: int
    b_vertex: int


@dataclass
class Body:
    """A piece as a rigid body.

    local_vertices are in the piece's own frame; centroid is the area centroid
    in that frame. pose maps the piece frame to the world.
    """

    piece_id: int
    local_vertices: np.ndarray
    centroid: np.ndarray
    mass: float
    inertia: float
    pose: Pose = field(default_factory=Pose)
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    angular_velocity: float = 0.0

    @property
    def radius(self) -> float:
        """Bounding circle radius about the centroid."""
        return float(np.hypot(*(self.local_vertices - self.centroid).T).max())

    def world_vertices(self) -> np.ndarray:
        return self.pose.apply(self.local_vertices)
