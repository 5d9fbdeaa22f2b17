"""Puzzle synthesis: cut arrangement, face extraction, ground truth, noise."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from crosscut.config import (
    CIRCLE_RADIUS,
    CIRCLE_SIDES,
    CUT_RETRIES,
    DATASETS,
    HULL_POINTS_RANGE,
    MIN_CHORD_REL,
    NOISE_RETRIES,
    TAU_GEOM_REL,
    WORKSPACE_H,
    WORKSPACE_W,
)
from crosscut.errors import ConfigError, GeometryError, NoiseError, NonGenericError
from crosscut.models import (
    ConvexPolygon,
    CutSet,
    EdgeRef,
    GroundTruth,
    Line2,
    Mating,
    NoiseSpec,
    Pose,
    PuzzleBundle,
)
from crosscut.models.geometry import signed_area
from crosscut.services.geometry import chord, convex_hull, diameter, intersect_lines

logger = logging.getLogger(__name__)

SHAPE_KINDS = ("circle", "polygon")


@dataclass
class PlanarGraph:
    """Nodes and links of the arrangement of cuts and shape edges inside S.

    Line indices below n_cuts are cuts; the rest are shape-edge lines.
    adjacency lists each node's neighbours sorted counter-clockwise by angle.
    """

    nodes: np.ndarray
    links: Dict[Tuple[int, int], int]
    adjacency: Dict[int, List[int]]
    n_cuts: int
    n_intersections: int
    lines: Tuple[Line2, ...] = field(default=(), repr=False)

    def link_line(self, u: int, v: int) -> int:
        return self.links[(u, v) if u < v else (v, u)]

    @property
    def n_cut_links(self) -> int:
        return sum(1 for line in self.links.values() if line < self.n_cuts)


def build_planar_graph(cs: CutSet) -> PlanarGraph:
    """Intersect all line pairs inside S and link consecutive nodes along each line."""
    shape = cs.shape
    n = len(shape)
    shape_lines = tuple(Line2.through(*shape.edge(k)) for k in range(n))
    lines = tuple(cs.cuts) + shape_lines
    a = len(cs.cuts)
    tol = TAU_GEOM_REL * diameter(shape)

    points: List[np.ndarray] = []
    owners: List[Tuple[int, int]] = []
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            if i >= a and j >= a and not (j == i + 1 or (i == a and j == a + n - 1)):
                continue  # shape edge lines meet only at shape vertices
            p = intersect_lines(lines[i], lines[j])
            if p is None or not shape.contains(p, tol)[0]:
                continue
            points.append(p)
            owners.append((i, j))

    nodes = np.array(points)
    close = cKDTree(nodes).query_pairs(tol)
    if close:
        involved = sorted({line for pair in close for node in pair for line in owners[node]})
        raise NonGenericError(
            f"{len(close)} pair(s) of intersection points coincide (concurrent lines)",
            lines=tuple(involved),
        )

    on_line: Dict[int, List[int]] = {}
    for node_id, (i, j) in enumerate(owners):
        on_line.setdefault(i, []).append(node_id)
        on_line.setdefault(j, []).append(node_id)

    links: Dict[Tuple[int, int], int] = {}
    for line_id, members in on_line.items():
        d = lines[line_id].direction
        ordered = sorted(members, key=lambda nid: float(nodes[nid] @ d))
        for u, v in zip(ordered, ordered[1:]):
            links[(min(u, v), max(u, v))] = line_id

    neighbours: Dict[int, List[int]] = {nid: [] for nid in range(len(nodes))}
    for u, v in links:
        neighbours[u].append(v)
        neighbours[v].append(u)
    adjacency = {}
    for nid, nbrs in neighbours.items():
        rel = nodes[nbrs] - nodes[nid]
        order = np.argsort(np.arctan2(rel[:, 1], rel[:, 0]), kind="stable")
        adjacency[nid] = [nbrs[k] for k in order]

    interior = sum(1 for i, j in owners if i < a and j < a)
    return PlanarGraph(
        nodes=nodes,
        links=links,
        adjacency=adjacency,
        n_cuts=a,
        n_intersections=interior,
        lines=lines,
    )


def extract_faces(g: PlanarGraph) -> List[Tuple[int, ...]]:
    """Node rings of the bounded faces, clockwise, each starting at its lowest node id.

    Wedge chaining: arriving at v from u, the face continues along the
    neighbour that follows u counter-clockwise around v.
    """
    used = set()
    faces: List[Tuple[int, ...]] = []
    for u0, v0 in sorted(list(g.links) + [(v, u) for u, v in g.links]):
        if (u0, v0) in used:
            continue
        ring = []
        u, v = u0, v0
        while (u, v) not in used:
            used.add((u, v))
            ring.append(u)
            nbrs = g.adjacency[v]
            w = nbrs[(nbrs.index(u) + 1) % len(nbrs)]
            u, v = v, w
        pts = g.nodes[ring]
        x, y = pts[:, 0], pts[:, 1]
        signed = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        if signed >= 0:
            continue  # the unbounded face
        start = ring.index(min(ring))
        faces.append(tuple(ring[start:] + ring[:start]))
    faces.sort()
    return faces


def extract_pieces(g: PlanarGraph) -> List[ConvexPolygon]:
    """All bounded faces as clockwise convex polygons in solved coordinates."""
    pieces = []
    for ring in extract_faces(g):
        try:
            pieces.append(ConvexPolygon(g.nodes[list(ring)]))
        except GeometryError as e:
            raise NonGenericError(f"face {ring} is degenerate: {e}") from e
    return pieces


def face_edge_tags(g: PlanarGraph, faces: Sequence[Tuple[int, ...]]) -> List[List[str]]:
    """'cut' or 'boundary' for every edge of every face."""
    tags = []
    for ring in faces:
        n = len(ring)
        tags.append(
            [
                "cut" if g.link_line(ring[j], ring[(j + 1) % n]) < g.n_cuts else "boundary"
                for j in range(n)
            ]
        )
    return tags


def extract_ground_truth(pieces: Sequence[ConvexPolygon]) -> GroundTruth:
    """Matings are pairs of coincident, antiparallel edges on different pieces."""
    if not pieces:
        return GroundTruth(matings=frozenset(), poses={})
    tol = TAU_GEOM_REL * diameter(pieces)
    refs: List[EdgeRef] = []
    starts, ends = [], []
    for pid, poly in enumerate(pieces):
        v = poly.vertices
        for j in range(len(v)):
            refs.append(EdgeRef(pid, j))
            starts.append(v[j])
            ends.append(v[(j + 1) % len(v)])
    starts_arr, ends_arr = np.array(starts), np.array(ends)
    mids = 0.5 * (starts_arr + ends_arr)
    matings = set()
    for i, j in sorted(cKDTree(mids).query_pairs(max(tol, 1e-300))):
        if refs[i].piece_id == refs[j].piece_id:
            continue
        if (
            np.hypot(*(starts_arr[i] - ends_arr[j])) <= tol
            and np.hypot(*(ends_arr[i] - starts_arr[j])) <= tol
        ):
            matings.add(Mating(refs[i], refs[j]))
    poses = {pid: Pose() for pid in range(len(pieces))}
    return GroundTruth(matings=frozenset(matings), poses=poses)


def canonicalize(
    pieces: Sequence[ConvexPolygon], rng: np.random.Generator
) -> Tuple[List[ConvexPolygon], Dict[int, Pose]]:
    """Center each piece on its area centroid and rotate it by a uniform random angle.

    Returns the local pieces and, per piece, the pose that maps local back to solved.
    """
    local, poses = [], {}
    for pid, poly in enumerate(pieces):
        center = poly.centroid()
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        to_local = Pose(theta).compose(Pose(0.0, -center[0], -center[1]))
        local.append(poly.transformed(to_local))
        poses[pid] = to_local.inverse()
    return local, poses


def apply_noise(piece: ConvexPolygon, ns: NoiseSpec, rng: np.random.Generator) -> ConvexPolygon:
    """Move every vertex inward by up to epsilon, direction uniform in its interior wedge."""
    if ns.epsilon == 0.0:
        return piece
    original = piece.vertices
    n = len(original)
    angles = piece.interior_angles()
    tol = TAU_GEOM_REL * ns.diameter
    current = original.copy()
    for j in range(n):
        to_next = original[(j + 1) % n] - original[j]
        base = math.atan2(to_next[1], to_next[0])
        for attempt in range(NOISE_RETRIES):
            r = rng.uniform(0.0, ns.epsilon)
            phi = base - rng.uniform(0.0, 1.0) * angles[j]
            trial = current.copy()
            trial[j] = original[j] + r * np.array([math.cos(phi), math.sin(phi)])
            if signed_area(trial) >= 0:
                continue
            try:
                candidate = ConvexPolygon(trial)
            except GeometryError:
                logger.debug("noise retry %d at vertex %d: convexity lost", attempt + 1, j)
                continue
            if len(candidate) == n and piece.contains(trial[j : j + 1], tol)[0]:
                current = trial
                break
        else:
            raise NoiseError(f"vertex {j} could not be noised in {NOISE_RETRIES} attempts")
    return ConvexPolygon(current)


def regular_polygon(sides: int = CIRCLE_SIDES, radius: float = CIRCLE_RADIUS) -> ConvexPolygon:
    phi = -2.0 * math.pi * np.arange(sides) / sides
    return ConvexPolygon(np.column_stack([radius * np.cos(phi), radius * np.sin(phi)]))


def _circle_cut(shape: ConvexPolygon, rng: np.random.Generator) -> Line2:
    phi1, phi2 = rng.uniform(0.0, 2.0 * math.pi, size=2)
    p = CIRCLE_RADIUS * np.array([math.cos(phi1), math.sin(phi1)])
    q = CIRCLE_RADIUS * np.array([math.cos(phi2), math.sin(phi2)])
    return Line2.through(p, q)


def _interior_point(shape: ConvexPolygon, rng: np.random.Generator) -> np.ndarray:
    lo = shape.vertices.min(axis=0)
    hi = shape.vertices.max(axis=0)
    while True:
        p = rng.uniform(lo, hi)
        if shape.contains(p)[0]:
            return p


def _polygon_cut(shape: ConvexPolygon, rng: np.random.Generator) -> Line2:
    return Line2.through(_interior_point(shape, rng), _interior_point(shape, rng))


def _random_hull(rng: np.random.Generator) -> ConvexPolygon:
    lo, hi = HULL_POINTS_RANGE
    while True:
        count = int(rng.integers(lo, hi + 1))
        pts = rng.uniform((0.0, 0.0), (WORKSPACE_W, WORKSPACE_H), size=(count, 2))
        try:
            return convex_hull(pts)
        except GeometryError:
            continue


def _sample_cuts(shape: ConvexPolygon, a: int, sampler, rng: np.random.Generator) -> List[Line2]:
    """Draw a cuts whose chords are long enough and whose arrangement is generic."""
    min_chord = MIN_CHORD_REL * diameter(shape)

    def draw() -> Line2:
        for _ in range(CUT_RETRIES):
            line = sampler(shape, rng)
            seg = chord(line, shape)
            if seg is not None and np.hypot(*(seg[1] - seg[0])) >= min_chord:
                return line
        raise NonGenericError(f"no acceptable cut in {CUT_RETRIES} draws")

    cuts = [draw() for _ in range(a)]
    for _ in range(CUT_RETRIES):
        try:
            extract_pieces(build_planar_graph(CutSet(shape, tuple(cuts))))
            return cuts
        except NonGenericError as e:
            offending = [i for i in e.lines if i < a] or list(range(a))
            redo = max(offending)
            logger.debug("resampling cut %d: %s", redo, e)
            cuts[redo] = draw()
    raise NonGenericError(f"could not draw a generic cut set in {CUT_RETRIES} attempts")


def synthesize(
    shape: ConvexPolygon,
    cuts: Sequence[Line2],
    xi: float,
    rng: np.random.Generator,
    shape_kind: str = "polygon",
    seed: Optional[int] = None,
) -> PuzzleBundle:
    """Run the full pipeline on a given cut set: faces, truth, local frames, noise."""
    cs = CutSet(shape, tuple(cuts))
    g = build_planar_graph(cs)
    faces = extract_faces(g)
    solved = extract_pieces(g)
    truth = extract_ground_truth(solved)
    tags = face_edge_tags(g, faces)
    boundary = frozenset(
        EdgeRef(pid, j) for pid, piece_tags in enumerate(tags) for j, t in enumerate(piece_tags)
        if t == "boundary"
    )
    cut_length = 0.0
    for line in cs.cuts:
        seg = chord(line, shape)
        if seg is not None:
            cut_length += float(np.hypot(*(seg[1] - seg[0])))

    local, poses = canonicalize(solved, rng)
    ns = NoiseSpec.from_xi(xi, diameter(shape))
    pieces: Dict[int, ConvexPolygon] = {}
    for pid, poly in enumerate(local):
        try:
            pieces[pid] = apply_noise(poly, ns, rng)
        except NoiseError as e:
            logger.warning("piece %d kept clean: %s", pid, e)
            pieces[pid] = poly

    ground_truth = GroundTruth(
        matings=truth.matings,
        poses=poses,
        clean_pieces=dict(enumerate(local)),
        boundary_edges=boundary,
        cuts=cs.cuts,
        n_intersections=g.n_intersections,
        n_cut_edges=g.n_cut_links,
        cut_length=cut_length,
    )
    logger.debug(
        "synthesized %s puzzle: a=%d, %d pieces, %d matings, %d intersections",
        shape_kind,
        len(cs.cuts),
        len(pieces),
        len(truth.matings),
        g.n_intersections,
    )
    return PuzzleBundle(
        pieces=pieces,
        noise=ns,
        shape=shape,
        shape_kind=shape_kind,
        seed=seed,
        ground_truth=ground_truth,
    )


def gen_circle_puzzle(
    a: int, rng: np.random.Generator, xi: float = 0.0, seed: Optional[int] = None
) -> PuzzleBundle:
    """A 32-gon approximating the unit circle, cut by chords through random circumference points."""
    if a < 0:
        raise ConfigError(f"cut count must be >= 0, got {a}")
    shape = regular_polygon()
    cuts = _sample_cuts(shape, a, _circle_cut, rng)
    return synthesize(shape, cuts, xi, rng, shape_kind="circle", seed=seed)


def gen_polygon_puzzle(
    a: int, rng: np.random.Generator, xi: float = 0.0, seed: Optional[int] = None
) -> PuzzleBundle:
    """The hull of 4 to 50 random work-space points, cut by lines through two interior points."""
    if a < 0:
        raise ConfigError(f"cut count must be >= 0, got {a}")
    shape = _random_hull(rng)
    cuts = _sample_cuts(shape, a, _polygon_cut, rng)
    return synthesize(shape, cuts, xi, rng, shape_kind="polygon", seed=seed)


def spawn_seeds(seed: Optional[int], count: int) -> List[int]:
    """Independent per-item integer seeds; the same for any worker count."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def _generate_one(job: Tuple[str, int, float, int]) -> PuzzleBundle:
    shape_kind, a, xi, seed = job
    return PuzzleGenerator.generate(shape_kind, a, xi, seed)


class PuzzleGenerator:
    """Seeded single and batch puzzle generation."""

    def __init__(self, jobs: int = 1):
        if jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {jobs}")
        self.jobs = jobs

    @staticmethod
    def generate(shape_kind: str, a: int, xi: float, seed: int) -> PuzzleBundle:
        if shape_kind not in SHAPE_KINDS:
            raise ConfigError(f"unknown shape {shape_kind!r}; expected one of {SHAPE_KINDS}")
        if not 0.0 <= xi < 1.0:
            raise ConfigError(f"xi must be in [0, 1), got {xi}")
        rng = np.random.default_rng(seed)
        maker = gen_circle_puzzle if shape_kind == "circle" else gen_polygon_puzzle
        return maker(a, rng, xi=xi, seed=seed)

    @staticmethod
    def dataset_params(name: str) -> Tuple[str, int, float]:
        try:
            return DATASETS[name]
        except KeyError:
            raise ConfigError(f"unknown dataset {name!r}; expected one of {sorted(DATASETS)}")

    def generate_batch(
        self, shape_kind: str, a: int, xi: float, seed: Optional[int], count: int
    ) -> List[PuzzleBundle]:
        """count puzzles seeded from `seed`; order and content do not depend on jobs."""
        jobs = [(shape_kind, a, xi, s) for s in spawn_seeds(seed, count)]
        if self.jobs == 1 or count <= 1:
            bundles = [_generate_one(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                bundles = list(pool.map(_generate_one, jobs))
        logger.info(
            "Generated %d %s puzzle(s) with a=%d, xi=%s", len(bundles), shape_kind, a, xi
        )
        return bundles
