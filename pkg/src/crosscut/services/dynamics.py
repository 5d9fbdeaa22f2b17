"""Spring-mass relaxation of rigid convex pieces, with optional non-penetration."""

import json
import logging
import math
from dataclasses import replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.spatial import cKDTree

from crosscut.config import ARENA_RADIUS_REL, RelaxConfig
from crosscut.errors import MatingConflictError, PhysicsError
from crosscut.models import ConvexPolygon, Mating, Pose, RelaxResult, TwoPhaseResult
from crosscut.models.physics import Body, Spring
from crosscut.models.puzzle import check_mate_uniqueness
from crosscut.services.geometry import diameter as diameter_of

logger = logging.getLogger(__name__)

COLLISION_SLOP_REL = 1e-9


def second_moment(poly: ConvexPolygon) -> float:
    """Polar second moment of area about the area centroid."""
    v = poly.vertices - poly.centroid()
    nxt = np.roll(v, -1, axis=0)
    cross = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
    terms = (v**2).sum(axis=1) + (v * nxt).sum(axis=1) + (nxt**2).sum(axis=1)
    return abs(float((cross * terms).sum()) / 12.0)


def springs_from_matings(
    pieces: Mapping[int, ConvexPolygon], matings: Iterable[Mating]
) -> List[Spring]:
    """Two springs per mating, joining the ends of the antiparallel mates.

    For mates A:j and B:l, vertex j of A meets vertex l+1 of B and vertex j+1 of A
    meets vertex l of B.
    """
    matings = sorted(matings)
    check_mate_uniqueness(matings)
    springs = []
    for m in matings:
        for e in m.edges:
            if e.piece_id not in pieces or not 0 <= e.edge_index < len(pieces[e.piece_id]):
                raise MatingConflictError(f"mating {m} references a missing edge {e}")
        na, nb = len(pieces[m.a.piece_id]), len(pieces[m.b.piece_id])
        j, l = m.a.edge_index, m.b.edge_index
        springs.append(Spring(m.a.piece_id, j, m.b.piece_id, (l + 1) % nb))
        springs.append(Spring(m.a.piece_id, (j + 1) % na, m.b.piece_id, l))
    return springs


def make_bodies(
    pieces: Mapping[int, ConvexPolygon],
    poses: Mapping[int, Pose],
    density: float = 1.0,
) -> List[Body]:
    """Uniform-density bodies, ordered by piece id."""
    bodies = []
    for pid in sorted(pieces):
        poly = pieces[pid]
        bodies.append(
            Body(
                piece_id=pid,
                local_vertices=poly.vertices,
                centroid=poly.centroid(),
                mass=density * poly.area(),
                inertia=density * second_moment(poly),
                pose=poses.get(pid, Pose()),
            )
        )
    return bodies


def potential_energy(bodies: Sequence[Body], springs: Sequence[Spring], k: float = 1.0) -> float:
    """Sum of 1/2 k d^2 over springs, d the distance between the posed endpoints."""
    by_id = {b.piece_id: b for b in bodies}
    total = 0.0
    for s in springs:
        pa = by_id[s.a_piece].pose.apply(by_id[s.a_piece].local_vertices[s.a_vertex])
        pb = by_id[s.b_piece].pose.apply(by_id[s.b_piece].local_vertices[s.b_vertex])
        total += 0.5 * k * float(((pa - pb) ** 2).sum())
    return total


def spring_distances_sq(
    pieces: Mapping[int, ConvexPolygon], poses: Mapping[int, Pose], springs: Sequence[Spring]
) -> float:
    """Sum of squared spring lengths at the given poses."""
    total = 0.0
    for s in springs:
        pa = poses[s.a_piece].apply(pieces[s.a_piece].vertices[s.a_vertex])
        pb = poses[s.b_piece].apply(pieces[s.b_piece].vertices[s.b_vertex])
        total += float(((pa - pb) ** 2).sum())
    return total


def random_poses(
    pieces: Mapping[int, ConvexPolygon], diameter: float, rng: np.random.Generator
) -> Dict[int, Pose]:
    """Uniform random angles, centroids uniform in a disk of radius 2 D about the origin."""
    radius = ARENA_RADIUS_REL * diameter
    poses = {}
    for pid in sorted(pieces):
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        r = radius * math.sqrt(float(rng.uniform()))
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        target = np.array([r * math.cos(phi), r * math.sin(phi)])
        rot = Pose(theta).rotation
        t = target - rot @ pieces[pid].centroid()
        poses[pid] = Pose(theta, float(t[0]), float(t[1]))
    return poses


def sat_mtv(a: np.ndarray, b: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    """Separating-axis test for two convex rings.

    Returns (unit normal pointing from a to b, penetration depth) when they
    overlap, else None.
    """
    best_depth = math.inf
    best_axis = None
    for ring in (a, b):
        edges = np.roll(ring, -1, axis=0) - ring
        normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        lengths = np.hypot(normals[:, 0], normals[:, 1])
        normals = normals[lengths > 0] / lengths[lengths > 0, None]
        pa = a @ normals.T
        pb = b @ normals.T
        overlap = np.minimum(pa.max(axis=0), pb.max(axis=0)) - np.maximum(
            pa.min(axis=0), pb.min(axis=0)
        )
        k = int(np.argmin(overlap))
        if overlap[k] <= 0.0:
            return None
        if overlap[k] < best_depth:
            best_depth = float(overlap[k])
            best_axis = normals[k]
    assert best_axis is not None
    if float((b.mean(axis=0) - a.mean(axis=0)) @ best_axis) < 0:
        best_axis = -best_axis
    return best_axis, best_depth


class SpringSystem:
    """Vectorized rigid-body state for one relaxation.

    Bodies integrate about their area centroids with semi-implicit Euler and a
    per-step velocity multiplier. The shared density is chosen so that the
    stiffest body's natural frequency times dt equals cfg.stability_phase.
    """

    def __init__(self, bodies: Sequence[Body], springs: Sequence[Spring], cfg: RelaxConfig):
        if not bodies:
            raise PhysicsError("relaxation needs at least one body")
        self.cfg = cfg
        self.ids = [b.piece_id for b in bodies]
        index = {pid: i for i, pid in enumerate(self.ids)}
        self.local = [np.asarray(b.local_vertices, dtype=float) for b in bodies]
        self.centroids = np.array([b.centroid for b in bodies])
        self.offsets = [v - c for v, c in zip(self.local, self.centroids)]
        self.radii = np.array([float(np.hypot(*o.T).max()) for o in self.offsets])

        self.ia = np.array([index[s.a_piece] for s in springs], dtype=int)
        self.ib = np.array([index[s.b_piece] for s in springs], dtype=int)
        self.ra = np.array([self.offsets[index[s.a_piece]][s.a_vertex] for s in springs]).reshape(
            -1, 2
        )
        self.rb = np.array([self.offsets[index[s.b_piece]][s.b_vertex] for s in springs]).reshape(
            -1, 2
        )

        self.mass, self.inertia = self._scaled_mass(bodies)
        self.angle = np.array([b.pose.angle for b in bodies], dtype=float)
        cos, sin = np.cos(self.angle), np.sin(self.angle)
        rot_c = np.column_stack(
            [cos * self.centroids[:, 0] - sin * self.centroids[:, 1],
             sin * self.centroids[:, 0] + cos * self.centroids[:, 1]]
        )
        self.x = np.array([[b.pose.tx, b.pose.ty] for b in bodies], dtype=float) + rot_c
        self.v = np.array([np.asarray(b.velocity, dtype=float) for b in bodies]).reshape(-1, 2)
        self.w = np.array([b.angular_velocity for b in bodies], dtype=float)
        extent = float(np.ptp(np.vstack(self.local), axis=0).max()) if self.local else 1.0
        self.slop = COLLISION_SLOP_REL * max(extent, 1.0)

    def _scaled_mass(self, bodies: Sequence[Body]) -> Tuple[np.ndarray, np.ndarray]:
        areas = np.array([b.mass for b in bodies], dtype=float)
        moments = np.array([b.inertia for b in bodies], dtype=float)
        n_springs = np.zeros(len(bodies))
        lever = np.zeros(len(bodies))
        np.add.at(n_springs, self.ia, 1.0)
        np.add.at(n_springs, self.ib, 1.0)
        np.add.at(lever, self.ia, (self.ra**2).sum(axis=1))
        np.add.at(lever, self.ib, (self.rb**2).sum(axis=1))
        stiffest = max(
            float((n_springs / areas).max(initial=0.0)), float((lever / moments).max(initial=0.0))
        )
        if stiffest == 0.0:
            return areas, moments
        density = self.cfg.k * stiffest * (self.cfg.dt / self.cfg.stability_phase) ** 2
        return density * areas, density * moments

    def _rotated(self, local: np.ndarray, idx: np.ndarray) -> np.ndarray:
        cos, sin = np.cos(self.angle[idx]), np.sin(self.angle[idx])
        return np.column_stack(
            [cos * local[:, 0] - sin * local[:, 1], sin * local[:, 0] + cos * local[:, 1]]
        )

    def spring_vectors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        wa = self._rotated(self.ra, self.ia)
        wb = self._rotated(self.rb, self.ib)
        d = (self.x[self.ib] + wb) - (self.x[self.ia] + wa)
        return d, wa, wb

    def potential(self) -> float:
        if self.ia.size == 0:
            return 0.0
        d, _, _ = self.spring_vectors()
        return 0.5 * self.cfg.k * float((d**2).sum())

    def kinetic(self) -> float:
        return 0.5 * float((self.mass * (self.v**2).sum(axis=1)).sum()) + 0.5 * float(
            (self.inertia * self.w**2).sum()
        )

    def step(self) -> None:
        cfg = self.cfg
        if self.ia.size:
            d, wa, wb = self.spring_vectors()
            f = cfg.k * d
            force = np.zeros_like(self.x)
            torque = np.zeros(len(self.ids))
            np.add.at(force, self.ia, f)
            np.add.at(force, self.ib, -f)
            np.add.at(torque, self.ia, wa[:, 0] * f[:, 1] - wa[:, 1] * f[:, 0])
            np.add.at(torque, self.ib, -(wb[:, 0] * f[:, 1] - wb[:, 1] * f[:, 0]))
            self.v += cfg.dt * force / self.mass[:, None]
            self.w += cfg.dt * torque / self.inertia
        self.v *= cfg.damping
        self.w *= cfg.damping
        self.x += cfg.dt * self.v
        self.angle += cfg.dt * self.w
        if cfg.collision_mode:
            for _ in range(cfg.collision_iterations):
                if not self.resolve_contacts():
                    break

    def world_rings(self) -> List[np.ndarray]:
        rings = []
        for i, off in enumerate(self.offsets):
            c, s = math.cos(self.angle[i]), math.sin(self.angle[i])
            rot = np.array([[c, -s], [s, c]])
            rings.append(off @ rot.T + self.x[i])
        return rings

    def candidate_pairs(self) -> List[Tuple[int, int]]:
        """Body pairs whose bounding circles overlap."""
        if len(self.ids) < 2:
            return []
        tree = cKDTree(self.x)
        pairs = []
        for i, j in sorted(tree.query_pairs(2.0 * float(self.radii.max()))):
            reach = self.radii[i] + self.radii[j]
            if float(((self.x[j] - self.x[i]) ** 2).sum()) < reach * reach:
                pairs.append((i, j))
        return pairs

    def resolve_contacts(self) -> bool:
        """Project overlapping pairs apart by their minimum translation, split by inverse mass."""
        rings = None
        moved = False
        inv_m = 1.0 / self.mass
        for i, j in self.candidate_pairs():
            if rings is None:
                rings = self.world_rings()
            hit = sat_mtv(rings[i], rings[j])
            if hit is None:
                continue
            normal, depth = hit
            if depth <= self.slop:
                continue
            share = inv_m[i] + inv_m[j]
            push = (depth - self.slop) * normal
            self.x[i] -= push * (inv_m[i] / share)
            self.x[j] += push * (inv_m[j] / share)
            rings[i] = rings[i] - push * (inv_m[i] / share)
            rings[j] = rings[j] + push * (inv_m[j] / share)
            closing = float((self.v[j] - self.v[i]) @ normal)
            if closing < 0.0:
                impulse = -closing / share
                self.v[i] -= impulse * inv_m[i] * normal
                self.v[j] += impulse * inv_m[j] * normal
            moved = True
        return moved

    def poses(self) -> Dict[int, Pose]:
        rot_c = self._rotated(self.centroids, np.arange(len(self.ids)))
        t = self.x - rot_c
        return {
            pid: Pose(math.atan2(math.sin(a), math.cos(a)), float(t[i, 0]), float(t[i, 1]))
            for i, (pid, a) in enumerate(zip(self.ids, self.angle))
        }

    def finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.x))
            and np.all(np.isfinite(self.angle))
            and np.all(np.isfinite(self.v))
            and np.all(np.isfinite(self.w))
        )


def _trace_record(system: SpringSystem, step: int, energy: float) -> str:
    poses = {str(pid): [p.angle, p.tx, p.ty] for pid, p in system.poses().items()}
    return json.dumps({"step": step, "energy": energy, "poses": poses}, sort_keys=True)


def relax(
    bodies: Sequence[Body],
    springs: Sequence[Spring],
    cfg: RelaxConfig,
    trace: Optional[TextIO] = None,
) -> RelaxResult:
    """Integrate until total energy changes by less than the tolerance over a window of steps."""
    system = SpringSystem(bodies, springs, cfg)
    if system.ia.size == 0 and not cfg.collision_mode:
        return RelaxResult(poses=system.poses(), energy=0.0, converged=True, steps=0)

    history: List[float] = []
    converged = False
    steps = 0
    energy = system.potential()
    for steps in range(1, cfg.max_steps + 1):
        system.step()
        if not system.finite():
            raise PhysicsError(f"relaxation state became non-finite at step {steps}")
        energy = system.potential()
        total = energy + system.kinetic()
        history.append(total)
        if trace is not None and cfg.trace_every and steps % cfg.trace_every == 0:
            trace.write(_trace_record(system, steps, energy) + "\n")
        if len(history) > cfg.window:
            previous = history[-cfg.window - 1]
            if abs(previous - total) <= cfg.energy_tol + cfg.rel_energy_tol * total:
                converged = True
                break
            history = history[-cfg.window - 1 :]
    if not converged:
        logger.warning("relaxation did not converge in %d steps (energy %.3g)", steps, energy)
    else:
        logger.debug("relaxation converged in %d steps (energy %.3g)", steps, energy)
    return RelaxResult(poses=system.poses(), energy=energy, converged=converged, steps=steps)


def run_two_phase(
    pieces: Mapping[int, ConvexPolygon],
    matings: Iterable[Mating],
    cfg: RelaxConfig,
    rng: np.random.Generator,
    diameter: Optional[float] = None,
    initial_poses: Optional[Mapping[int, Pose]] = None,
    trace: Optional[TextIO] = None,
) -> TwoPhaseResult:
    """Relax from random poses with overlaps allowed, then again with overlaps forbidden."""
    springs = springs_from_matings(pieces, matings)
    if initial_poses is None:
        if diameter is None:
            diameter = diameter_of(pieces.values())
        initial_poses = random_poses(pieces, diameter, rng)
    free = cfg if not cfg.collision_mode else _with_collisions(cfg, False)
    phase1 = relax(make_bodies(pieces, initial_poses), springs, free, trace=trace)
    phase2 = relax(
        make_bodies(pieces, phase1.poses), springs, _with_collisions(cfg, True), trace=trace
    )
    return TwoPhaseResult(phase1=phase1, phase2=phase2)


def _with_collisions(cfg: RelaxConfig, on: bool) -> RelaxConfig:
    return replace(cfg, collision_mode=on)
