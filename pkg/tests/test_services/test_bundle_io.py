"""Tests for reading and writing puzzle and solution bundles."""

import io
import json

import pytest

from crosscut.errors import BundleFormatError, FormatVersionError
from crosscut.models import EvalReport, Pose, PuzzleBundle, SolutionBundle, SolverReport
from crosscut.services.bundle_io import (
    PUZZLE_SUFFIX,
    SOLUTION_SUFFIX,
    dumps,
    loads,
    read_bundle,
    read_puzzle,
    read_solution,
    write_bundle,
)
from crosscut.services.puzzlegen import PuzzleGenerator


@pytest.fixture
def noisy_bundle() -> PuzzleBundle:
    return PuzzleGenerator.generate("polygon", 5, 0.005, seed=21)


@pytest.fixture
def solution(noisy_bundle) -> SolutionBundle:
    gt = noisy_bundle.ground_truth
    report = SolverReport(mode="noisy", n_candidates=12, x_max=1, loops_per_level=[3, 1],
                          final_energy=1.5e-7, converged=True, xi_bar=0.0123)
    evaluation = EvalReport(q_positions=0.97, precision=1.0, recall=None,
                            global_alignment=Pose(0.1, 0.2, 0.3), overlap_ratios={0: 0.97})
    return SolutionBundle(matings=gt.matings, poses=dict(gt.poses), report=report,
                          evaluation=evaluation)


def _edited(bundle, edit) -> str:
    doc = json.loads(dumps(bundle))
    edit(doc)
    return json.dumps(doc)


class TestRoundTrip:
    """Written bundles read back unchanged."""

    def test_puzzle(self, noisy_bundle):
        back = loads(dumps(noisy_bundle))
        assert isinstance(back, PuzzleBundle)
        assert back.pieces == noisy_bundle.pieces
        assert back.noise == noisy_bundle.noise
        assert back.shape == noisy_bundle.shape
        assert back.seed == 21
        gt, back_gt = noisy_bundle.ground_truth, back.ground_truth
        assert back_gt.matings == gt.matings
        assert back_gt.poses == gt.poses
        assert back_gt.clean_pieces == gt.clean_pieces
        assert back_gt.boundary_edges == gt.boundary_edges
        assert back_gt.cuts == gt.cuts
        assert back_gt.cut_length == gt.cut_length

    def test_serialization_is_stable(self, noisy_bundle):
        assert dumps(loads(dumps(noisy_bundle))) == dumps(noisy_bundle)

    def test_solution(self, solution):
        back = loads(dumps(solution))
        assert isinstance(back, SolutionBundle)
        assert back.matings == solution.matings
        assert back.poses == solution.poses
        assert back.report == solution.report
        assert back.evaluation == solution.evaluation

    def test_files(self, noisy_bundle, solution, tmp_root):
        puzzle_path = tmp_root / "nested" / f"p{PUZZLE_SUFFIX}"
        solution_path = tmp_root / f"p{SOLUTION_SUFFIX}"
        write_bundle(noisy_bundle, puzzle_path)
        write_bundle(solution, solution_path)
        puzzle = read_puzzle(puzzle_path)
        assert puzzle.pieces == noisy_bundle.pieces
        assert read_solution(solution_path, puzzle).poses == solution.poses

    def test_streams(self, noisy_bundle):
        buffer = io.StringIO()
        write_bundle(noisy_bundle, buffer)
        buffer.seek(0)
        assert read_bundle(buffer).pieces == noisy_bundle.pieces

    def test_without_ground_truth(self, noisy_bundle):
        back = loads(dumps(noisy_bundle.without_ground_truth()))
        assert back.ground_truth is None
        assert back.pieces == noisy_bundle.pieces


class TestRejects:
    """Malformed input is refused with a located message."""

    def test_truncated_file(self, noisy_bundle):
        text = dumps(noisy_bundle)
        with pytest.raises(BundleFormatError, match=r"^cut\.ccpuzzle:\d+:\d+: "):
            loads(text[: len(text) // 2], "cut.ccpuzzle")

    @pytest.mark.parametrize("value", ["2", "2.0.1", "not-a-version"])
    def test_unsupported_version(self, noisy_bundle, value):
        text = _edited(noisy_bundle, lambda d: d.update(format_version=value))
        with pytest.raises(FormatVersionError, match="format_version"):
            loads(text)

    def test_minor_version_is_readable(self, noisy_bundle):
        text = _edited(noisy_bundle, lambda d: d.update(format_version="1.4"))
        assert loads(text).format_version == "1.4"

    def test_counter_clockwise_piece(self, noisy_bundle):
        def flip(doc):
            doc["pieces"][0]["vertices"].reverse()

        with pytest.raises(BundleFormatError, match=r"pieces\[0\]\.vertices: .*clockwise"):
            loads(_edited(noisy_bundle, flip))

    def test_missing_field(self, noisy_bundle):
        text = _edited(noisy_bundle, lambda d: d.pop("noise"))
        with pytest.raises(BundleFormatError, match=r"\.noise: missing"):
            loads(text, "p")

    def test_inconsistent_noise(self, noisy_bundle):
        def skew(doc):
            doc["noise"]["epsilon"] = doc["noise"]["epsilon"] * 2

        with pytest.raises(BundleFormatError, match="epsilon"):
            loads(_edited(noisy_bundle, skew))

    def test_mating_to_missing_edge(self, noisy_bundle):
        def stray(doc):
            doc["ground_truth"]["matings"][0][0] = "0:99"

        with pytest.raises(BundleFormatError, match="missing edge"):
            loads(_edited(noisy_bundle, stray))

    def test_unknown_kind(self, noisy_bundle):
        text = _edited(noisy_bundle, lambda d: d.update(kind="banana"))
        with pytest.raises(BundleFormatError, match="unknown bundle kind"):
            loads(text)

    def test_puzzle_reader_refuses_solutions(self, solution, tmp_root):
        path = tmp_root / f"s{SOLUTION_SUFFIX}"
        write_bundle(solution, path)
        with pytest.raises(BundleFormatError, match="expected a puzzle"):
            read_puzzle(path)

    def test_solution_with_foreign_pieces(self, noisy_bundle, solution, tmp_root):
        solution.poses[999] = Pose()
        path = tmp_root / f"s{SOLUTION_SUFFIX}"
        write_bundle(solution, path)
        with pytest.raises(BundleFormatError, match="unknown pieces"):
            read_solution(path, noisy_bundle)

    def test_missing_file(self, tmp_root):
        with pytest.raises(BundleFormatError, match="cannot read"):
            read_bundle(tmp_root / "absent.ccpuzzle")
