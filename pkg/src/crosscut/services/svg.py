"""Deterministic SVG drawings of puzzles and solutions."""

import logging
import math
import xml.etree.ElementTree as ET
from typing import Dict, List, Optional, Tuple

import numpy as np

from crosscut.errors import ConfigError, MissingGroundTruthError
from crosscut.models import ConvexPolygon, Pose, PuzzleBundle, SolutionBundle

logger = logging.getLogger(__name__)

VIEWS = ("bag", "solved", "solution")
SVG_NS = "http://www.w3.org/2000/svg"
CANVAS_PX = 800
MARGIN_REL = 0.05
BAG_SPACING = 1.25


def piece_color(pid: int) -> str:
    """Stable pastel fill per piece id (golden-angle hue steps)."""
    hue = (pid * 137.508) % 360.0
    return f"hsl({hue:.1f},55%,75%)"


def _fmt(value: float) -> str:
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def _points(ring: np.ndarray) -> str:
    # SVG y grows downward
    return " ".join(f"{_fmt(x)},{_fmt(-y)}" for x, y in ring)


def bag_layout(pieces: Dict[int, ConvexPolygon]) -> Dict[int, Pose]:
    """Grid placement of local-frame pieces, row-major by id."""
    ids = sorted(pieces)
    cols = max(1, math.ceil(math.sqrt(len(ids))))
    extent = max(float(np.ptp(p.vertices, axis=0).max()) for p in pieces.values())
    cell = BAG_SPACING * extent
    poses = {}
    for k, pid in enumerate(ids):
        row, col = divmod(k, cols)
        center = pieces[pid].vertex_mean()
        poses[pid] = Pose(0.0, col * cell - float(center[0]), -row * cell - float(center[1]))
    return poses


def _scene(
    puzzle: PuzzleBundle, solution: Optional[SolutionBundle], view: str
) -> Dict[int, np.ndarray]:
    if view == "bag":
        poses = bag_layout(puzzle.pieces)
    elif view == "solved":
        if puzzle.ground_truth is None:
            raise MissingGroundTruthError("the solved view needs ground truth")
        poses = puzzle.ground_truth.poses
    else:
        if solution is None:
            raise ConfigError("the solution view needs a solution bundle")
        align = solution.evaluation.global_alignment if solution.evaluation else Pose()
        poses = {pid: align.compose(p) for pid, p in solution.poses.items()}
    return {pid: poses[pid].apply(puzzle.pieces[pid].vertices) for pid in sorted(poses)}


def _truth_rings(puzzle: PuzzleBundle) -> List[np.ndarray]:
    gt = puzzle.ground_truth
    if gt is None:
        raise MissingGroundTruthError("a ground-truth overlay needs ground truth")
    clean = gt.clean_pieces or puzzle.pieces
    return [gt.poses[pid].apply(clean[pid].vertices) for pid in sorted(gt.poses)]


def _view_box(rings: List[np.ndarray]) -> Tuple[float, float, float, float]:
    pts = np.vstack(rings)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    pad = MARGIN_REL * span
    return (float(lo[0]) - pad, -float(hi[1]) - pad, float(hi[0] - lo[0]) + 2 * pad,
            float(hi[1] - lo[1]) + 2 * pad)


def render_svg(
    puzzle: PuzzleBundle,
    solution: Optional[SolutionBundle] = None,
    view: str = "bag",
    overlay_truth: bool = False,
    labels: bool = True,
) -> str:
    """SVG text for one view; identical inputs give byte-identical output.

    bag lays the local pieces out on a grid, solved places them by the ground
    truth, and solution by the solver's poses (aligned when evaluated).
    """
    if view not in VIEWS:
        raise ConfigError(f"unknown view {view!r}; expected one of {VIEWS}")
    rings = _scene(puzzle, solution, view)
    truth = _truth_rings(puzzle) if overlay_truth else []
    drawn = list(rings.values()) + truth
    x, y, w, h = _view_box(drawn) if drawn else (0.0, 0.0, 1.0, 1.0)
    stroke = 0.002 * max(w, h)

    root = ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "viewBox": " ".join(_fmt(v) for v in (x, y, w, h)),
            "width": str(CANVAS_PX),
            "height": str(max(1, round(CANVAS_PX * h / w))),
        },
    )
    pieces_g = ET.SubElement(root, "g", {"id": "pieces", "stroke": "#333",
                                         "stroke-width": _fmt(stroke)})
    for pid, ring in rings.items():
        ET.SubElement(
            pieces_g,
            "polygon",
            {"id": f"piece-{pid}", "points": _points(ring), "fill": piece_color(pid)},
        )
    if truth:
        truth_g = ET.SubElement(
            root,
            "g",
            {"id": "truth", "fill": "none", "stroke": "#c0392b",
             "stroke-width": _fmt(stroke), "stroke-dasharray": _fmt(4 * stroke)},
        )
        for ring in truth:
            ET.SubElement(truth_g, "polygon", {"points": _points(ring)})
    if labels and rings:
        font = 0.02 * max(w, h)
        label_g = ET.SubElement(
            root, "g", {"id": "labels", "font-size": _fmt(font), "text-anchor": "middle",
                        "font-family": "sans-serif"}
        )
        for pid, ring in rings.items():
            cx, cy = ring.mean(axis=0)
            text = ET.SubElement(label_g, "text", {"x": _fmt(cx), "y": _fmt(-cy)})
            text.text = str(pid)
    logger.debug("Rendered %s view with %d piece(s)", view, len(rings))
    return ET.tostring(root, encoding="unicode") + "\n"
