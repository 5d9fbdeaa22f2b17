"""Tests for SVG rendering."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from crosscut.errors import ConfigError, MissingGroundTruthError
from crosscut.models import EvalReport, Pose, SolutionBundle, SolverReport
from crosscut.services.bundle_io import dumps, loads
from crosscut.services.puzzlegen import synthesize
from crosscut.services.svg import VIEWS, bag_layout, piece_color, render_svg

NS = {"svg": "http://www.w3.org/2000/svg"}


def _polygons(svg_text, group):
    root = ET.fromstring(svg_text)
    g = root.find(f"svg:g[@id='{group}']", NS)
    return [] if g is None else g.findall("svg:polygon", NS)


class TestRenderSvg:
    """Views, overlays and determinism."""

    @pytest.mark.parametrize("view", ["bag", "solved"])
    def test_one_polygon_per_piece(self, six_piece_puzzle, view):
        polygons = _polygons(render_svg(six_piece_puzzle, view=view), "pieces")
        ids = sorted(p.get("id") for p in polygons)
        assert ids == sorted(f"piece-{pid}" for pid in six_piece_puzzle.pieces)

    def test_single_piece_puzzle(self, quad):
        bundle = synthesize(quad, [], 0.0, np.random.default_rng(0))
        assert len(_polygons(render_svg(bundle), "pieces")) == 1

    def test_byte_identical_output(self, six_piece_puzzle):
        first = render_svg(six_piece_puzzle, view="solved", overlay_truth=True)
        again = render_svg(loads(dumps(six_piece_puzzle)), view="solved", overlay_truth=True)
        assert first == again

    def test_truth_overlay(self, four_piece_puzzle):
        svg = render_svg(four_piece_puzzle, view="bag", overlay_truth=True)
        assert len(_polygons(svg, "truth")) == len(four_piece_puzzle.pieces)
        assert _polygons(render_svg(four_piece_puzzle), "truth") == []

    def test_labels_can_be_dropped(self, four_piece_puzzle):
        root = ET.fromstring(render_svg(four_piece_puzzle, labels=False))
        assert root.find("svg:g[@id='labels']", NS) is None
        labelled = ET.fromstring(render_svg(four_piece_puzzle))
        texts = labelled.findall("svg:g[@id='labels']/svg:text", NS)
        assert sorted(t.text for t in texts) == sorted(str(p) for p in four_piece_puzzle.pieces)

    def test_solution_view_uses_the_alignment(self, four_piece_puzzle):
        gt = four_piece_puzzle.ground_truth
        motion = Pose(0.5, 3.0, 1.0)
        moved = {pid: motion.compose(p) for pid, p in gt.poses.items()}
        evaluation = EvalReport(q_positions=1.0, precision=1.0, recall=1.0,
                                global_alignment=motion.inverse())
        solution = SolutionBundle(matings=gt.matings, poses=moved,
                                  report=SolverReport(mode="clean"), evaluation=evaluation)
        drawn = _polygons(render_svg(four_piece_puzzle, solution, view="solution"), "pieces")
        truth = _polygons(render_svg(four_piece_puzzle, view="solved"), "pieces")
        assert [p.get("points") for p in drawn] == [p.get("points") for p in truth]


class TestRenderErrors:
    """Views that cannot be drawn."""

    def test_solved_view_needs_ground_truth(self, four_piece_puzzle):
        with pytest.raises(MissingGroundTruthError):
            render_svg(four_piece_puzzle.without_ground_truth(), view="solved")

    def test_overlay_needs_ground_truth(self, four_piece_puzzle):
        with pytest.raises(MissingGroundTruthError):
            render_svg(four_piece_puzzle.without_ground_truth(), overlay_truth=True)

    def test_solution_view_needs_a_solution(self, four_piece_puzzle):
        with pytest.raises(ConfigError):
            render_svg(four_piece_puzzle, view="solution")

    def test_unknown_view(self, four_piece_puzzle):
        assert "exploded" not in VIEWS
        with pytest.raises(ConfigError, match="unknown view"):
            render_svg(four_piece_puzzle, view="exploded")


class TestLayout:
    """Bag layout and colours."""

    def test_pieces_get_separate_cells(self, six_piece_puzzle):
        poses = bag_layout(six_piece_puzzle.pieces)
        centers = [
            poses[pid].apply(piece.vertex_mean()) for pid, piece in six_piece_puzzle.pieces.items()
        ]
        assert len({(round(x, 9), round(y, 9)) for x, y in centers}) == len(centers)

    def test_colours_are_stable(self):
        assert piece_color(3) == piece_color(3)
        assert piece_color(0) != piece_color(1)
