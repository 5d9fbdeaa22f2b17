"""Tests for closed-form statistics, Monte Carlo checks and the stats suite."""

import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from crosscut.errors import ConfigError, GeometryError, MissingGroundTruthError
from crosscut.models import EdgeRef
from crosscut.services.puzzlegen import PuzzleGenerator
from crosscut.services.stats import (
    analytic_expected_cut_length,
    analytic_intersection_probability,
    chord_length,
    expected_avg_edge_length,
    expected_edges,
    expected_intersections,
    expected_pieces,
    histogram_tail,
    max_pieces,
    measure_puzzle,
    noise_vs_edge_length,
    run_stats_suite,
    sample_chord_intersections,
    sample_chord_lengths,
    sides_per_piece,
    summarize,
    taylor_second_order,
    write_stats_csv,
)


class TestClosedForms:
    """Analytic expectations."""

    def test_expected_cut_length(self):
        assert analytic_expected_cut_length() == pytest.approx(4.0 / math.pi)
        assert analytic_expected_cut_length() == pytest.approx(1.273, abs=1e-3)

    def test_diameter_chord(self):
        assert chord_length(math.pi) == pytest.approx(2.0)

    def test_intersection_probability(self):
        assert analytic_intersection_probability() == pytest.approx(1.0 / 3.0)
        assert expected_intersections(10) == pytest.approx(15.0)

    def test_expected_edges(self):
        assert expected_edges(10) == pytest.approx(40.0)
        assert expected_edges(0) == 0.0

    def test_expected_avg_edge_length(self):
        assert expected_avg_edge_length(10) == pytest.approx(1.0 / math.pi)
        with pytest.raises(ConfigError):
            expected_avg_edge_length(0)

    def test_expected_pieces(self):
        assert expected_pieces(0) == 1.0
        assert expected_pieces(20) == pytest.approx(84.33, abs=0.01)
        assert expected_pieces(30) == pytest.approx(176.0)

    def test_lazy_caterer(self):
        assert [max_pieces(a) for a in range(5)] == [1, 2, 4, 7, 11]

    def test_expected_to_max_ratio_tends_to_a_third(self):
        assert expected_pieces(10_000) / max_pieces(10_000) == pytest.approx(1 / 3, rel=1e-3)

    def test_noise_relative_to_edge_length(self):
        # xi measured against the diameter 2 vs. against 12 / (pi (a + 2))
        assert noise_vs_edge_length(0.01, 10) == pytest.approx(4 * 0.01 * math.pi)


class TestMonteCarlo:
    """Sampling checks of the geometric probabilities."""

    def test_chord_lengths(self, rng):
        est = sample_chord_lengths(100_000, rng)
        assert est.n == 100_000
        assert est.within(4.0 / math.pi, n_se=4.0)

    def test_chord_intersections(self, rng):
        est = sample_chord_intersections(100_000, rng)
        assert est.within(1.0 / 3.0, n_se=4.0)

    def test_taylor_term_needs_samples(self):
        assert taylor_second_order(np.array([1.0]), np.array([2.0])) is None
        assert taylor_second_order(np.array([1.0, 2.0]), np.array([0.0, 0.0])) is None

    def test_taylor_term_vanishes_for_constant_counts(self):
        gap = taylor_second_order(np.array([1.0, 2.0, 3.0]), np.array([4.0, 4.0, 4.0]))
        assert gap == pytest.approx(0.0)


class TestPuzzleMeasures:
    """Per-puzzle counts and the report built from them."""

    def test_sides_merge_boundary_runs(self):
        boundary = frozenset({EdgeRef(0, 1), EdgeRef(0, 2), EdgeRef(0, 3)})
        assert sides_per_piece(5, 0, boundary, merge_boundary_runs=False) == 5
        assert sides_per_piece(5, 0, boundary, merge_boundary_runs=True) == 3

    def test_sides_of_an_uncut_piece(self):
        boundary = frozenset(EdgeRef(0, j) for j in range(32))
        assert sides_per_piece(32, 0, boundary, merge_boundary_runs=True) == 1

    def test_sides_with_run_wrapping_around(self):
        boundary = frozenset({EdgeRef(0, 0), EdgeRef(0, 4)})
        assert sides_per_piece(5, 0, boundary, merge_boundary_runs=True) == 4

    def test_measure_follows_ground_truth(self, six_piece_puzzle):
        m = measure_puzzle(six_piece_puzzle)
        assert m.a == 3
        assert m.n_pieces == 6
        assert m.n_intersections == 2
        assert m.n_edges == 7
        assert sum(m.sides) == sum(len(p) for p in six_piece_puzzle.pieces.values())

    def test_measure_needs_ground_truth(self, six_piece_puzzle):
        with pytest.raises(MissingGroundTruthError):
            measure_puzzle(six_piece_puzzle.without_ground_truth())


    def test_broken_count_identity_is_rejected(self, six_piece_puzzle):
        gt = six_piece_puzzle.ground_truth
        corrupt = replace(six_piece_puzzle, ground_truth=replace(gt, n_intersections=1))
        with pytest.raises(GeometryError, match="breaks"):
            measure_puzzle(corrupt)
    def test_summarize_reports_means_and_formulas(self):
        bundles = [PuzzleGenerator.generate("circle", 6, 0.0, s) for s in range(5)]
        measures = [measure_puzzle(b) for b in bundles]
        report = summarize(6, 0.0, measures)
        assert report.n_puzzles == 5
        assert report.expected_pieces == pytest.approx(expected_pieces(6))
        assert report.n_pieces == pytest.approx(report.n_intersections + 7)
        assert sum(report.edges_per_piece_histogram.values()) == pytest.approx(1.0)
        assert report.mates_per_edge == pytest.approx(
            np.mean([m.mates_per_edge for m in measures])
        )

    def test_histogram_tail(self):
        assert histogram_tail({3: 0.5, 4: 0.3, 6: 0.15, 7: 0.05}) == pytest.approx(0.2)


class TestStatsSuite:
    """The batch runner and its CSV."""

    def test_suite_and_csv(self, tmp_root):
        reports = run_stats_suite([2, 4], 3, xi_values=[0.0, 0.01], seed=1)
        assert [(r.a, r.xi) for r in reports] == [(2, 0.0), (2, 0.01), (4, 0.0), (4, 0.01)]
        out = tmp_root / "stats.csv"
        write_stats_csv(reports, out)
        with open(out, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 4
        assert rows[0]["a"] == "2"
        assert any(key.startswith("epp_") for key in rows[0])

    def test_suite_is_seeded(self):
        first = run_stats_suite([3], 2, seed=5)
        second = run_stats_suite([3], 2, seed=5)
        assert first[0].n_pieces == second[0].n_pieces
        assert first[0].cut_length == second[0].cut_length

    def test_suite_rejects_empty_input(self):
        with pytest.raises(ConfigError):
            run_stats_suite([], 3)
        with pytest.raises(ConfigError):
            run_stats_suite([3], 0)

    @pytest.mark.slow
    def test_piece_counts_track_the_expectation(self):
        (report,) = run_stats_suite([20], 30, seed=2024)
        assert report.n_pieces == pytest.approx(expected_pieces(20), rel=0.1)
        assert report.n_intersections == pytest.approx(expected_intersections(20), rel=0.1)

    @pytest.mark.slow
    def test_average_edge_length_at_fifty_cuts(self):
        (report,) = run_stats_suite([50], 30, seed=7)
        assert report.avg_edge_length == pytest.approx(expected_avg_edge_length(50), rel=0.05)
