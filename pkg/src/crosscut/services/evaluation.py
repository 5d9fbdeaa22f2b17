"""Scoring of solutions against ground truth: global alignment, positions, matings."""

import logging
from typing import Dict, FrozenSet, Mapping, Optional, Tuple

import numpy as np

from crosscut.config import EvalConfig
from crosscut.errors import BundleFormatError, GeometryError, MissingGroundTruthError
from crosscut.models import ConvexPolygon, EvalReport, GroundTruth, Mating, Pose, PuzzleBundle
from crosscut.models import SolutionBundle
from crosscut.services.geometry import intersection_area

logger = logging.getLogger(__name__)


def weighted_rigid_transform(
    source: np.ndarray, target: np.ndarray, weights: np.ndarray
) -> Pose:
    """(R, t) minimizing sum w_k |R source_k + t - target_k|^2, with det R = +1."""
    distinct = np.unique(np.round(source, 12), axis=0)
    if distinct.shape[0] < 2:
        raise GeometryError("alignment needs at least two distinct correspondence points")
    w = weights / weights.sum()
    centroid_s = w @ source
    centroid_t = w @ target
    h = (source - centroid_s).T @ ((target - centroid_t) * w[:, None])
    u, _, vt = np.linalg.svd(h)
    v = vt.T
    d = np.sign(np.linalg.det(v @ u.T))
    if d == 0:
        d = 1.0
    rot = v @ np.diag([1.0, d]) @ u.T
    t = centroid_t - rot @ centroid_s
    return Pose.from_matrix(rot, t)


def _correspondences(
    pieces: Mapping[int, ConvexPolygon],
    poses: Mapping[int, Pose],
    truth: GroundTruth,
    areas: Mapping[int, float],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    common = sorted(set(poses) & set(truth.poses))
    if not common:
        raise GeometryError("solution and ground truth share no piece")
    total = sum(areas[pid] for pid in common)
    src, dst, wts = [], [], []
    for pid in common:
        v = pieces[pid].vertices
        src.append(poses[pid].apply(v))
        dst.append(truth.poses[pid].apply(v))
        wts.append(np.full(len(v), areas[pid] / total))
    return np.vstack(src), np.vstack(dst), np.concatenate(wts)


def alignment_objective(
    pose: Pose,
    pieces: Mapping[int, ConvexPolygon],
    poses: Mapping[int, Pose],
    truth: GroundTruth,
    areas: Mapping[int, float],
) -> float:
    src, dst, w = _correspondences(pieces, poses, truth, areas)
    return float((w * ((pose.apply(src) - dst) ** 2).sum(axis=1)).sum())


def align_global(
    pieces: Mapping[int, ConvexPolygon],
    poses: Mapping[int, Pose],
    truth: GroundTruth,
    areas: Optional[Mapping[int, float]] = None,
) -> Pose:
    """Area-weighted least-squares rigid motion taking solution vertices onto ground truth."""
    areas = areas if areas is not None else {pid: p.area() for pid, p in pieces.items()}
    src, dst, w = _correspondences(pieces, poses, truth, areas)
    return weighted_rigid_transform(src, dst, w)


def q_positions(
    pieces: Mapping[int, ConvexPolygon],
    poses: Mapping[int, Pose],
    truth: GroundTruth,
    alignment: Pose = Pose(),
) -> Tuple[float, Dict[int, float]]:
    """Area-weighted share of each placed piece lying on its true region.

    Returns the score and the per-piece overlap ratios. Pieces with no pose
    contribute zero.
    """
    clean = truth.clean_pieces or dict(pieces)
    true_regions = {pid: clean[pid].transformed(truth.poses[pid]) for pid in sorted(truth.poses)}
    total = sum(region.area() for region in true_regions.values())
    score = 0.0
    ratios: Dict[int, float] = {}
    for pid in sorted(poses):
        if pid not in true_regions:
            continue
        placed = pieces[pid].transformed(alignment.compose(poses[pid]))
        ratio = min(1.0, intersection_area(true_regions[pid], placed) / placed.area())
        ratios[pid] = ratio
        score += true_regions[pid].area() / total * ratio
    return min(1.0, score), ratios


def mating_weight(m: Mating, areas: Mapping[int, float], weighting: str) -> float:
    if weighting == "uniform":
        return 1.0
    return 0.5 * (areas[m.a.piece_id] + areas[m.b.piece_id])


def mating_precision_recall(
    found: FrozenSet[Mating],
    truth: FrozenSet[Mating],
    areas: Mapping[int, float],
    cfg: EvalConfig = EvalConfig(),
) -> Tuple[float, Optional[float]]:
    """Weighted precision and recall of a mating set.

    Each mating weighs the mean area of its two pieces, normalized over its own
    set. An empty found set has precision 1; an empty truth set has no recall.
    """

    def share(subset: FrozenSet[Mating], of: FrozenSet[Mating]) -> float:
        total = sum(mating_weight(m, areas, cfg.weighting) for m in of)
        hit = sum(mating_weight(m, areas, cfg.weighting) for m in subset)
        return hit / total if total > 0 else 0.0

    correct = frozenset(found & truth)
    precision = share(correct, found) if found else 1.0
    recall = share(correct, truth) if truth else None
    return precision, recall


def evaluate(
    solution: SolutionBundle, bundle: PuzzleBundle, cfg: EvalConfig = EvalConfig()
) -> EvalReport:
    """Align the solution to the ground truth and score it."""
    truth = bundle.ground_truth
    if truth is None:
        raise MissingGroundTruthError("evaluation needs a bundle with ground truth")
    unknown = sorted(
        set(solution.poses).union(p for m in solution.matings for p in m.pieces)
        - set(bundle.pieces)
    )
    if unknown:
        raise BundleFormatError(f"solution references pieces missing from the puzzle: {unknown}")

    areas = bundle.piece_areas()
    precision, recall = mating_precision_recall(solution.matings, truth.matings, areas, cfg)
    if not solution.poses:
        report = EvalReport(q_positions=0.0, precision=precision, recall=recall,
                            global_alignment=Pose())
    else:
        alignment = align_global(bundle.pieces, solution.poses, truth, areas)
        score, ratios = q_positions(bundle.pieces, solution.poses, truth, alignment)
        report = EvalReport(
            q_positions=score,
            precision=precision,
            recall=recall,
            global_alignment=alignment,
            overlap_ratios=ratios,
        )
    logger.info(
        "q_positions=%.4f precision=%.4f recall=%s",
        report.q_positions,
        report.precision,
        "n/a" if recall is None else f"{recall:.4f}",
    )
    return report
