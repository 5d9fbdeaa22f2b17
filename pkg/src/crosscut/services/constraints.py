"""Mating predicates for clean and noisy pieces, and candidate enumeration."""

import logging
import math
from typing import Dict, FrozenSet, List, Mapping, Tuple

import numpy as np

from crosscut.config import TAU_ANG, TAU_GEOM_REL
from crosscut.models import ConvexPolygon, EdgeGeom, EdgeRef, Mating, NoiseSpec

logger = logging.getLogger(__name__)


def edge_geoms(piece: ConvexPolygon) -> List[EdgeGeom]:
    lengths = piece.edge_lengths()
    angles = piece.interior_angles()
    n = len(lengths)
    return [
        EdgeGeom(
            length=float(lengths[j]),
            prev_length=float(lengths[j - 1]),
            next_length=float(lengths[(j + 1) % n]),
            angle_start=float(angles[j]),
            angle_end=float(angles[(j + 1) % n]),
        )
        for j in range(n)
    ]


def c1(e: EdgeGeom, f: EdgeGeom, diameter: float) -> bool:
    """Clean mates have equal length, to within TAU_GEOM_REL of the puzzle diameter."""
    return abs(e.length - f.length) <= TAU_GEOM_REL * diameter


def mate_angle_pairs(e: EdgeGeom, f: EdgeGeom) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """The two (alpha, beta) pairs that meet when e and f are laid antiparallel.

    Vertex j of e's piece meets vertex l+1 of f's piece, and vice versa.
    """
    return (e.angle_start, f.angle_end), (e.angle_end, f.angle_start)


def c2(e: EdgeGeom, f: EdgeGeom, tol: float = TAU_ANG) -> bool:
    """Both pairs of angles that meet across the mates are supplementary."""
    (a1, b1), (a2, b2) = mate_angle_pairs(e, f)
    return abs(math.pi - (a1 + b1)) <= tol and abs(math.pi - (a2 + b2)) <= tol


def delta_theta(length: float, eps: float) -> float:
    """Largest rotation of an edge of clean length L whose ends move inward by up to eps."""
    if eps == 0.0:
        return 0.0
    if length <= 2.0 * eps:
        return math.inf
    return math.asin(eps / (length - eps))


def delta_theta_measured(ltilde: float, eps: float) -> float:
    """delta_theta at the smallest clean length compatible with a measured length."""
    return delta_theta(ltilde - 2.0 * eps, eps)


def c1_noisy(ltilde_e: float, ltilde_f: float, eps: float, tol: float = 0.0) -> bool:
    return abs(ltilde_e - ltilde_f) <= 4.0 * eps + tol


def c2_noisy(e: EdgeGeom, f: EdgeGeom, eps: float, tol: float = TAU_ANG) -> bool:
    """Angle deviations stay within the summed rotation bounds of the four edges at each vertex.

    An infinite term means that inequality carries no information and passes.
    """
    own = delta_theta_measured(e.length, eps) + delta_theta_measured(f.length, eps)
    bound1 = own + (
        delta_theta_measured(e.prev_length, eps) + delta_theta_measured(f.next_length, eps)
    )
    bound2 = own + (
        delta_theta_measured(e.next_length, eps) + delta_theta_measured(f.prev_length, eps)
    )
    (a1, b1), (a2, b2) = mate_angle_pairs(e, f)
    ok1 = math.isinf(bound1) or abs(math.pi - (a1 + b1)) <= bound1 + tol
    ok2 = math.isinf(bound2) or abs(math.pi - (a2 + b2)) <= bound2 + tol
    return ok1 and ok2


def candidate_matings(
    pieces: Mapping[int, ConvexPolygon], ns: NoiseSpec
) -> FrozenSet[Mating]:
    """All cross-piece edge pairs passing the noisy length and angle tests.

    Edges are sorted by measured length so only pairs inside a 4*eps window are
    tested for angles.
    """
    refs: List[EdgeRef] = []
    geoms: List[EdgeGeom] = []
    for pid in sorted(pieces):
        for j, g in enumerate(edge_geoms(pieces[pid])):
            refs.append(EdgeRef(pid, j))
            geoms.append(g)
    if not refs:
        return frozenset()

    tol = TAU_GEOM_REL * ns.diameter
    lengths = np.array([g.length for g in geoms])
    order = np.argsort(lengths, kind="stable")
    sorted_lengths = lengths[order]
    window = 4.0 * ns.epsilon + tol
    upper = np.searchsorted(sorted_lengths, sorted_lengths + window, side="right")

    found = set()
    for pos, i in enumerate(order):
        for k in range(pos + 1, int(upper[pos])):
            j = order[k]
            if refs[i].piece_id == refs[j].piece_id:
                continue
            if not c1_noisy(geoms[i].length, geoms[j].length, ns.epsilon, tol):
                continue
            if c2_noisy(geoms[i], geoms[j], ns.epsilon):
                found.add(Mating(refs[i], refs[j]))
    logger.debug(
        "candidate matings: %d among %d edges (eps=%s)", len(found), len(refs), ns.epsilon
    )
    return frozenset(found)


def candidates_by_edge(matings: FrozenSet[Mating]) -> Dict[EdgeRef, List[Mating]]:
    """Index from every edge to the candidate matings that use it, sorted."""
    index: Dict[EdgeRef, List[Mating]] = {}
    for m in sorted(matings):
        for e in m.edges:
            index.setdefault(e, []).append(m)
    return index


def mates_per_edge(matings: FrozenSet[Mating], n_edges: int) -> float:
    """Average number of candidate mates per edge; each mating counts once for each of its edges."""
    return 2.0 * len(matings) / n_edges if n_edges else 0.0
