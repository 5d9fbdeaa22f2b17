"""Reconstruction: greedy clean solver and the hierarchical-loop noisy pipeline."""

import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    TextIO,
    Tuple,
)

import numpy as np
from shapely.geometry import Polygon
from shapely.ops import unary_union

from crosscut.config import SolverConfig
from crosscut.errors import InconsistencyError, NonGenericError, PhysicsError
from crosscut.models import (
    Aggregate,
    ConvexPolygon,
    EdgeRef,
    LoopNode,
    Mating,
    NoiseSpec,
    Pose,
    SolutionBundle,
    SolverReport,
)
from crosscut.models.puzzle import check_mate_uniqueness
from crosscut.services.constraints import candidate_matings, candidates_by_edge
from crosscut.services.dynamics import run_two_phase, spring_distances_sq, springs_from_matings
from crosscut.services.geometry import diameter as diameter_of
from crosscut.services.puzzlegen import spawn_seeds

logger = logging.getLogger(__name__)


def _extent(pieces: Mapping[int, ConvexPolygon]) -> float:
    """Scale of the local-frame pieces; a lower bound on the puzzle diameter."""
    return diameter_of(list(pieces.values()))


def mate_pose(
    placed: ConvexPolygon, placed_pose: Pose, edge: int, other: ConvexPolygon, other_edge: int
) -> Pose:
    """Pose of `other` that lays its edge antiparallel onto `edge` of the posed `placed` piece."""
    a0, a1 = placed_pose.apply(np.array(placed.edge(edge)))
    b0, b1 = other.edge(other_edge)
    target = a0 - a1
    source = b1 - b0
    angle = math.atan2(target[1], target[0]) - math.atan2(source[1], source[0])
    angle = math.atan2(math.sin(angle), math.cos(angle))
    rot = Pose(angle).rotation
    t = 0.5 * (a0 + a1) - rot @ (0.5 * (b0 + b1))
    return Pose(angle, float(t[0]), float(t[1]))


POSE_AGREEMENT_REL = 1e-6


def _poses_agree(p: Pose, q: Pose, diameter: float) -> bool:
    d_angle = math.atan2(math.sin(p.angle - q.angle), math.cos(p.angle - q.angle))
    shift = math.hypot(p.tx - q.tx, p.ty - q.ty)
    return abs(d_angle) <= POSE_AGREEMENT_REL and shift <= POSE_AGREEMENT_REL * diameter


def solve_clean(
    pieces: Mapping[int, ConvexPolygon], rng: Optional[np.random.Generator] = None
) -> Tuple[FrozenSet[Mating], Dict[int, Pose]]:
    """Greedy exact reconstruction of a noise-free puzzle.

    Starting from one piece, every unassigned edge of a placed piece is matched
    to the only unassigned edge passing the length and angle tests, and the mate's
    piece is posed by aligning the two edges. Edges with no candidate are taken
    to lie on the shape border.
    """
    if not pieces:
        return frozenset(), {}
    ids = sorted(pieces)
    start = ids[int(rng.integers(len(ids)))] if rng is not None else ids[0]
    if len(ids) == 1:
        return frozenset(), {start: Pose()}

    diameter = _extent(pieces)
    index = candidates_by_edge(candidate_matings(pieces, NoiseSpec.from_xi(0.0, diameter)))

    poses: Dict[int, Pose] = {start: Pose()}
    assigned: Set[EdgeRef] = set()
    matings: Set[Mating] = set()
    queue = deque([start])
    while queue:
        pid = queue.popleft()
        for j in range(len(pieces[pid])):
            edge = EdgeRef(pid, j)
            if edge in assigned:
                continue
            options = [m for m in index.get(edge, ()) if m.other(edge) not in assigned]
            if not options:
                continue
            if len(options) > 1:
                raise NonGenericError(
                    f"edge {edge} has {len(options)} exact mates: "
                    + ", ".join(str(m) for m in options)
                )
            m = options[0]
            mate = m.other(edge)
            pose = mate_pose(pieces[pid], poses[pid], j, pieces[mate.piece_id], mate.edge_index)
            if mate.piece_id in poses:
                if not _poses_agree(poses[mate.piece_id], pose, diameter):
                    raise InconsistencyError(
                        f"mating {m} places piece {mate.piece_id} away from its earlier pose"
                    )
            else:
                poses[mate.piece_id] = pose
                queue.append(mate.piece_id)
            matings.add(m)
            assigned.update(m.edges)

    missing = sorted(set(ids) - set(poses))
    if missing:
        raise InconsistencyError(f"pieces {missing} could not be attached to the reconstruction")
    logger.info("Clean solve placed %d piece(s) with %d mating(s)", len(poses), len(matings))
    return frozenset(matings), poses


def enumerate_zero_loops(
    matings: Iterable[Mating], pieces: Mapping[int, ConvexPolygon]
) -> List[LoopNode]:
    """All four-piece clockwise junction loops over the candidate matings.

    A walk enters piece B through edge i and leaves through edge (i - 1) mod N_B,
    visits four distinct pieces and returns to the starting edge's successor.
    Loops are stored starting at their lowest mating, so rotations coincide.
    """
    index = candidates_by_edge(frozenset(matings))
    found: Dict[Tuple[Mating, ...], LoopNode] = {}
    for start_edge in sorted(index):
        a = start_edge.piece_id
        n_a = len(pieces[a])
        closing = EdgeRef(a, (start_edge.edge_index + 1) % n_a)
        stack: List[Tuple[EdgeRef, Tuple[Mating, ...], Tuple[int, ...]]] = [
            (start_edge, (), (a,))
        ]
        while stack:
            edge, path, visited = stack.pop()
            for m in index.get(edge, ()):
                entry = m.other(edge)
                if len(path) == 3:
                    if entry == closing:
                        _store_zero_loop(found, path + (m,), visited)
                    continue
                if entry.piece_id in visited:
                    continue
                n_p = len(pieces[entry.piece_id])
                exit_edge = EdgeRef(entry.piece_id, (entry.edge_index - 1) % n_p)
                stack.append((exit_edge, path + (m,), visited + (entry.piece_id,)))
    loops = [found[k] for k in sorted(found)]
    for node in loops:
        node.boundary = loop_boundary(node.pieces, node.used_edges, pieces)
    logger.info("Found %d 0-loop(s)", len(loops))
    return loops


def _store_zero_loop(
    found: Dict[Tuple[Mating, ...], LoopNode], walk: Tuple[Mating, ...], visited: Tuple[int, ...]
) -> None:
    k = walk.index(min(walk))
    ordered = walk[k:] + walk[:k]
    if ordered not in found:
        found[ordered] = LoopNode(level=0, matings=ordered, pieces=frozenset(visited))


def loop_boundary(
    members: Iterable[int], used: FrozenSet[EdgeRef], pieces: Mapping[int, ConvexPolygon]
) -> Tuple[EdgeRef, ...]:
    """Edges of member pieces not taken by a mating of the loop."""
    return tuple(
        EdgeRef(pid, j)
        for pid in sorted(members)
        for j in range(len(pieces[pid]))
        if EdgeRef(pid, j) not in used
    )


def _enclose(node: LoopNode, loop: LoopNode, pieces: Mapping[int, ConvexPolygon], level: int):
    """node grown by a 0-loop that shares at least one of its matings, or None."""
    node_matings = set(node.matings)
    shared = node_matings.intersection(loop.matings)
    added = [m for m in loop.matings if m not in node_matings]
    if not shared or not added:
        return None
    used = node.used_edges
    if any(e in used for m in added for e in m.edges):
        return None
    matings = tuple(sorted(node_matings.union(added)))
    members = node.pieces | loop.pieces
    used = used | loop.used_edges
    return LoopNode(
        level=level,
        matings=matings,
        pieces=members,
        boundary=loop_boundary(members, used, pieces),
        parent=node,
    )


def grow_loops(
    previous: Sequence[LoopNode],
    zero_loops: Sequence[LoopNode],
    pieces: Mapping[int, ConvexPolygon],
    cfg: SolverConfig = SolverConfig(),
    truncations: Optional[List[str]] = None,
) -> List[LoopNode]:
    """All loops one level up: each lower loop enclosed by a 0-loop at one of its boundary edges.

    The 0-loop must use the boundary edge and share a mating with the lower
    loop. Results with the same pieces and matings are kept once. The
    branch and per-level caps bound the search; when either drops loops a
    warning is logged and a note appended to `truncations`.
    """
    if not previous or not zero_loops:
        return []
    level = previous[0].level + 1
    by_edge: Dict[EdgeRef, List[LoopNode]] = {}
    for loop in zero_loops:
        for e in sorted(loop.used_edges):
            by_edge.setdefault(e, []).append(loop)

    notes: List[str] = []
    grown: Dict[tuple, LoopNode] = {}
    capped_nodes = 0
    for node in previous:
        branches = 0
        dropped = 0
        for edge in node.boundary:
            for loop in by_edge.get(edge, ()):
                bigger = _enclose(node, loop, pieces, level)
                if bigger is None or bigger.key in grown:
                    continue
                if branches >= cfg.max_branches:
                    dropped += 1
                    continue
                grown[bigger.key] = bigger
                branches += 1
        if dropped:
            capped_nodes += 1
    if capped_nodes:
        notes.append(
            f"level {level}: branch cap {cfg.max_branches} reached for {capped_nodes} loop(s)"
        )
    result = sorted(grown.values(), key=lambda n: n.matings)
    if len(result) > cfg.max_loops_per_level:
        notes.append(
            f"level {level}: kept {cfg.max_loops_per_level} of {len(result)} loops"
        )
        result = result[: cfg.max_loops_per_level]
    for note in notes:
        logger.warning("Loop search truncated at %s", note)
    if truncations is not None:
        truncations.extend(notes)
    return result


def overlap_quality(pieces: Mapping[int, ConvexPolygon], poses: Mapping[int, Pose]) -> float:
    """Sum over pieces of the share of each piece's area covered by the others."""
    shapes = {
        pid: Polygon(poses[pid].apply(pieces[pid].vertices)) for pid in sorted(pieces)
    }
    total = 0.0
    for pid, shape in shapes.items():
        others = unary_union([s for q, s in shapes.items() if q != pid])
        total += shape.intersection(others).area / shape.area
    return total


def rank_loop(
    node: LoopNode,
    pieces: Mapping[int, ConvexPolygon],
    cfg: SolverConfig,
    rng: np.random.Generator,
    diameter: float,
) -> float:
    """Q = w1 * Q_overlap (overlaps allowed) + w2 * Q_dist / D^2 (overlaps forbidden).

    A loop whose relaxation fails or runs out of steps gets an infinite Q.
    """
    sub = {pid: pieces[pid] for pid in sorted(node.pieces)}
    try:
        result = run_two_phase(sub, node.matings, cfg.rank_relax, rng, diameter=diameter)
    except PhysicsError as e:
        logger.debug("loop %s discarded: %s", node.key, e)
        return math.inf
    if not result.converged:
        return math.inf
    q_overlap = overlap_quality(sub, result.phase1.poses)
    springs = springs_from_matings(sub, node.matings)
    q_dist = spring_distances_sq(sub, result.phase2.poses, springs) / diameter**2
    return cfg.w1 * q_overlap + cfg.w2 * q_dist


def _rank_job(job) -> float:
    node, pieces, cfg, seed, diameter = job
    return rank_loop(node, pieces, cfg, np.random.default_rng(seed), diameter)


def rank_loops(
    loops: Sequence[LoopNode],
    pieces: Mapping[int, ConvexPolygon],
    cfg: SolverConfig,
    seed: Optional[int],
    diameter: float,
) -> None:
    """Fill in quality for every loop; per-loop seeds keep results independent of cfg.jobs."""
    seeds = spawn_seeds(seed, len(loops))
    jobs = [
        (
            LoopNode(n.level, n.matings, n.pieces, n.boundary),
            {pid: pieces[pid] for pid in n.pieces},
            cfg,
            s,
            diameter,
        )
        for n, s in zip(loops, seeds)
    ]
    if cfg.jobs == 1 or len(jobs) <= 1:
        qualities = [_rank_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            qualities = list(pool.map(_rank_job, jobs))
    for node, q in zip(loops, qualities):
        node.quality = q
        logger.debug("level %d loop over %d pieces: Q=%.3g", node.level, len(node.pieces), q)


def _admissible(agg: Aggregate, loop: LoopNode) -> bool:
    if not agg.pieces & loop.pieces or loop.pieces <= agg.pieces:
        return False
    used = agg.used_edges
    return all(m in agg.matings or not (set(m.edges) & used) for m in loop.matings)


def merge_loops(loops: Sequence[LoopNode]) -> Aggregate:
    """Aggregate ranked loops, best highest-level loop first.

    A loop joins when it shares a piece with the aggregate, brings a new piece,
    and none of its matings contradict an aggregated one. Scans repeat until a
    full pass leaves the aggregate's matings unchanged.
    """
    ordered = sorted((n for n in loops if math.isfinite(n.quality)), key=LoopNode.sort_key)
    if not ordered:
        return Aggregate()
    seed = ordered[0]
    agg = Aggregate(pieces=set(seed.pieces), matings=set(seed.matings))
    changed = True
    while changed:
        before = len(agg.matings)
        for loop in ordered[1:]:
            if _admissible(agg, loop):
                agg.pieces |= loop.pieces
                agg.matings |= set(loop.matings)
        changed = len(agg.matings) != before
    check_mate_uniqueness(agg.matings)
    return agg


def complete_unique(agg: Aggregate, candidates: FrozenSet[Mating]) -> int:
    """Add candidate matings whose two edges are free and have no other free candidate.

    One of the mating's pieces must already be aggregated. Returns how many were added.
    """
    added = 0
    changed = True
    while changed:
        changed = False
        used = agg.used_edges
        free = [m for m in sorted(candidates) if not (set(m.edges) & used)]
        per_edge: Dict[EdgeRef, int] = {}
        for m in free:
            for e in m.edges:
                per_edge[e] = per_edge.get(e, 0) + 1
        for m in free:
            if per_edge[m.a] != 1 or per_edge[m.b] != 1:
                continue
            if not set(m.pieces) & agg.pieces:
                continue
            agg.matings.add(m)
            agg.pieces.update(m.pieces)
            added += 1
            changed = True
    return added


def measured_xi_bar(pieces: Mapping[int, ConvexPolygon], ns: NoiseSpec) -> Optional[float]:
    """Noise bound relative to the mean measured edge length."""
    lengths = np.concatenate([p.edge_lengths() for p in pieces.values()])
    mean = float(lengths.mean()) if lengths.size else 0.0
    return ns.epsilon / mean if mean > 0 else None


def solve_noisy(
    pieces: Mapping[int, ConvexPolygon],
    ns: NoiseSpec,
    cfg: SolverConfig = SolverConfig(),
    seed: Optional[int] = None,
    trace: Optional[TextIO] = None,
) -> SolutionBundle:
    """Candidates, 0-loops, loop growth, ranking, merging and a final placement."""
    diameter = ns.diameter
    candidates = candidate_matings(pieces, ns)
    report = SolverReport(
        mode="noisy", n_candidates=len(candidates), xi_bar=measured_xi_bar(pieces, ns)
    )
    logger.info("%d candidate mating(s) among %d pieces", len(candidates), len(pieces))

    zero = enumerate_zero_loops(candidates, pieces)
    if not zero:
        report.unplaced = sorted(pieces)
        report.diagnostic = "no 0-loop exists among the candidate matings"
        logger.warning("Puzzle unsolvable under the noise bound: %s", report.diagnostic)
        return SolutionBundle(matings=frozenset(), poses={}, report=report)

    levels = [zero]
    while len(levels) <= cfg.max_level:
        nxt = grow_loops(levels[-1], zero, pieces, cfg, report.truncations)
        if not nxt:
            break
        levels.append(nxt)
    else:
        note = f"level {cfg.max_level}: growth stopped at the maximum level"
        logger.warning("Loop search truncated at %s", note)
        report.truncations.append(note)
    report.x_max = len(levels) - 1
    report.loops_per_level = [len(level) for level in levels]
    logger.info("Loops per level: %s (x_max=%d)", report.loops_per_level, report.x_max)

    everything = [node for level in levels for node in level]
    rank_seed, place_seed = spawn_seeds(seed, 2)
    rank_loops(everything, pieces, cfg, rank_seed, diameter)

    agg = merge_loops(everything)
    if not agg.matings:
        report.unplaced = sorted(pieces)
        report.diagnostic = "every loop failed to relax"
        logger.warning("Puzzle unsolvable: %s", report.diagnostic)
        return SolutionBundle(matings=frozenset(), poses={}, report=report)
    report.merged_loops = sum(
        1 for n in everything if set(n.matings) <= agg.matings and math.isfinite(n.quality)
    )
    if cfg.complete_unique:
        report.completed_matings = complete_unique(agg, candidates)
    logger.info("Aggregate: %d piece(s), %d mating(s)", len(agg.pieces), len(agg.matings))

    sub = {pid: pieces[pid] for pid in sorted(agg.pieces)}
    result = run_two_phase(
        sub,
        agg.matings,
        cfg.relax,
        np.random.default_rng(place_seed),
        diameter=diameter,
        trace=trace,
    )
    report.final_energy = result.phase2.energy
    report.converged = result.converged
    report.unplaced = sorted(set(pieces) - agg.pieces)
    if report.unplaced:
        logger.warning("%d piece(s) left unplaced: %s", len(report.unplaced), report.unplaced)
    return SolutionBundle(matings=frozenset(agg.matings), poses=result.poses, report=report)


def solve_known_matings(
    pieces: Mapping[int, ConvexPolygon],
    matings: FrozenSet[Mating],
    cfg: SolverConfig = SolverConfig(),
    seed: Optional[int] = None,
    trace: Optional[TextIO] = None,
    diameter: Optional[float] = None,
) -> SolutionBundle:
    """Placement only, with the matings given."""
    diameter = diameter if diameter is not None else _extent(pieces)
    result = run_two_phase(
        pieces, matings, cfg.relax, np.random.default_rng(seed), diameter=diameter, trace=trace
    )
    report = SolverReport(
        mode="known-matings",
        n_candidates=len(matings),
        final_energy=result.phase2.energy,
        converged=result.converged,
    )
    return SolutionBundle(matings=frozenset(matings), poses=result.poses, report=report)


def solve_clean_bundle(
    pieces: Mapping[int, ConvexPolygon], seed: Optional[int] = None
) -> SolutionBundle:
    rng = np.random.default_rng(seed) if seed is not None else None
    matings, poses = solve_clean(pieces, rng)
    report = SolverReport(mode="clean", n_candidates=len(matings), converged=True)
    return SolutionBundle(matings=matings, poses=poses, report=report)
