"""Tests for planar-graph construction, face extraction, ground truth and noise."""

import math

import numpy as np
import pytest

from crosscut.errors import ConfigError, NonGenericError
from crosscut.models import ConvexPolygon, CutSet, EdgeRef, Line2, Mating, NoiseSpec
from crosscut.services.constraints import c1, c2, edge_geoms
from crosscut.services.puzzlegen import (
    PuzzleGenerator,
    apply_noise,
    build_planar_graph,
    canonicalize,
    extract_faces,
    extract_ground_truth,
    extract_pieces,
    regular_polygon,
    spawn_seeds,
    synthesize,
)


def _check_counts(bundle):
    gt = bundle.ground_truth
    a = len(gt.cuts)
    assert len(bundle.pieces) == gt.n_intersections + a + 1
    assert gt.n_cut_edges == a + 2 * gt.n_intersections
    assert len(gt.matings) == gt.n_cut_edges


class TestPlanarGraph:
    """Arrangement of cuts and shape edges."""

    def test_square_without_cuts(self, unit_square):
        g = build_planar_graph(CutSet(unit_square, ()))
        assert len(g.nodes) == 4
        assert len(g.links) == 4
        assert g.n_intersections == 0

    def test_square_with_bisecting_cut(self, unit_square):
        g = build_planar_graph(CutSet(unit_square, (Line2(0.0, 1.0, -0.5),)))
        assert len(g.nodes) == 6
        assert len(g.links) == 7
        assert g.n_cut_links == 1

    def test_outside_intersection_is_dropped(self, quad):
        # the two cuts meet outside the shape
        cuts = (Line2.through((1.5, -1.0), (2.2, 5.0)), Line2.through((3.2, -1.0), (3.6, 5.0)))
        g = build_planar_graph(CutSet(quad, cuts))
        assert g.n_intersections == 0
        assert len(g.nodes) == 4 + 4

    def test_concurrent_cuts_rejected(self, unit_square):
        cuts = (
            Line2.through((0.0, 0.0), (1.0, 1.0)),
            Line2.through((0.0, 1.0), (1.0, 0.0)),
            Line2(1.0, 0.0, -0.5),
        )
        with pytest.raises(NonGenericError) as info:
            build_planar_graph(CutSet(unit_square, cuts))
        assert set(info.value.lines) >= {0, 1, 2}

    def test_neighbours_sorted_by_angle(self, quad):
        g = build_planar_graph(CutSet(quad, (Line2.through((0.7, -1.0), (4.1, 5.0)),)))
        for nid, nbrs in g.adjacency.items():
            rel = g.nodes[nbrs] - g.nodes[nid]
            angles = np.arctan2(rel[:, 1], rel[:, 0])
            assert list(angles) == sorted(angles)


class TestFaces:
    """Wedge-chained face extraction."""

    def test_square_without_cuts_is_one_piece(self, unit_square):
        pieces = extract_pieces(build_planar_graph(CutSet(unit_square, ())))
        assert len(pieces) == 1
        assert pieces[0].area() == pytest.approx(1.0)

    def test_faces_tile_the_shape(self, quad):
        cuts = (Line2.through((0.7, -1.0), (4.1, 5.0)), Line2.through((-1.0, 1.2), (6.0, 2.6)))
        g = build_planar_graph(CutSet(quad, cuts))
        pieces = extract_pieces(g)
        assert len(pieces) == 4
        assert sum(p.area() for p in pieces) == pytest.approx(quad.area())

    def test_faces_start_at_lowest_node(self, quad):
        g = build_planar_graph(CutSet(quad, (Line2.through((0.7, -1.0), (4.1, 5.0)),)))
        for ring in extract_faces(g):
            assert ring[0] == min(ring)

    def test_two_generic_chords_of_the_32_gon_make_four_pieces(self):
        shape = regular_polygon()
        cuts = (
            Line2.through((math.cos(0.3), math.sin(0.3)), (math.cos(3.0), math.sin(3.0))),
            Line2.through((math.cos(1.7), math.sin(1.7)), (math.cos(4.9), math.sin(4.9))),
        )
        assert len(extract_pieces(build_planar_graph(CutSet(shape, cuts)))) == 4


class TestGroundTruth:
    """Matings found from coincident antiparallel edges."""

    def test_two_squares_mate_once(self, two_squares):
        gt = extract_ground_truth([two_squares[0], two_squares[1]])
        assert gt.matings == frozenset({Mating(EdgeRef(0, 2), EdgeRef(1, 0))})

    def test_three_piece_puzzle_has_two_matings(self, three_piece_puzzle):
        gt = three_piece_puzzle.ground_truth
        assert len(three_piece_puzzle.pieces) == 3
        assert len(gt.matings) == 2
        assert gt.n_intersections == 0

    def test_single_piece_has_no_matings(self, quad):
        assert extract_ground_truth([quad]).matings == frozenset()

    def test_counts_follow_the_identities(self, four_piece_puzzle, six_piece_puzzle):
        _check_counts(four_piece_puzzle)
        _check_counts(six_piece_puzzle)
        assert six_piece_puzzle.ground_truth.n_intersections == 2

    def test_ground_truth_mates_pass_clean_predicates(self, six_piece_puzzle):
        geoms = {pid: edge_geoms(p) for pid, p in six_piece_puzzle.pieces.items()}
        for m in six_piece_puzzle.ground_truth.matings:
            e = geoms[m.a.piece_id][m.a.edge_index]
            f = geoms[m.b.piece_id][m.b.edge_index]
            assert c1(e, f, six_piece_puzzle.noise.diameter)
            assert c2(e, f)

    def test_boundary_edges_have_no_mate(self, six_piece_puzzle):
        gt = six_piece_puzzle.ground_truth
        mated = {e for m in gt.matings for e in m.edges}
        assert not mated & gt.boundary_edges
        total = sum(len(p) for p in six_piece_puzzle.pieces.values())
        assert len(mated) + len(gt.boundary_edges) == total


class TestCanonicalize:
    """Local frames and the poses back to solved coordinates."""

    def test_pose_maps_local_back_to_solved(self, quad, rng):
        solved = [quad]
        local, poses = canonicalize(solved, rng)
        back = poses[0].apply(local[0].vertices)
        assert back == pytest.approx(quad.vertices)

    def test_local_pieces_are_centered(self, six_piece_puzzle):
        for piece in six_piece_puzzle.ground_truth.clean_pieces.values():
            assert piece.centroid() == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_asymmetric_piece_is_centered_on_its_area_centroid(self, rng):
        trapezoid = ConvexPolygon([(0.0, 0.0), (0.0, 1.0), (4.0, 1.0), (10.0, 0.0)])
        local, poses = canonicalize([trapezoid], rng)
        assert local[0].centroid() == pytest.approx([0.0, 0.0], abs=1e-12)
        assert poses[0].apply(np.zeros(2)) == pytest.approx(trapezoid.centroid())

    def test_different_seeds_rotate_differently(self, quad):
        local_a, _ = canonicalize([quad], np.random.default_rng(1))
        local_b, _ = canonicalize([quad], np.random.default_rng(2))
        assert not np.allclose(local_a[0].vertices, local_b[0].vertices)
        assert local_a[0].area() == pytest.approx(local_b[0].area())


class TestApplyNoise:
    """Inward vertex perturbation."""

    def test_zero_epsilon_keeps_piece(self, quad):
        assert apply_noise(quad, NoiseSpec.from_xi(0.0, 6.0), np.random.default_rng(0)) is quad

    def test_noisy_piece_stays_inside_and_convex(self, quad, rng):
        ns = NoiseSpec.from_xi(0.01, 6.0)
        noisy = apply_noise(quad, ns, rng)
        assert isinstance(noisy, ConvexPolygon)
        assert len(noisy) == len(quad)
        assert quad.contains(noisy.vertices, tol=1e-8).all()
        moved = np.hypot(*(noisy.vertices - quad.vertices).T)
        assert (moved <= ns.epsilon + 1e-12).all()
        assert noisy.area() < quad.area()


class TestPuzzleGenerator:
    """Seeded generation."""

    def test_zero_cuts_give_one_piece(self):
        bundle = PuzzleGenerator.generate("circle", 0, 0.0, seed=1)
        assert len(bundle.pieces) == 1
        assert bundle.ground_truth.matings == frozenset()

    @pytest.mark.parametrize("shape_kind", ["circle", "polygon"])
    def test_generated_counts_follow_the_identities(self, shape_kind):
        for seed in range(3):
            _check_counts(PuzzleGenerator.generate(shape_kind, 6, 0.0, seed=seed))

    def test_piece_count_within_bounds(self):
        bundle = PuzzleGenerator.generate("polygon", 5, 0.0, seed=11)
        assert 6 <= len(bundle.pieces) <= 16

    def test_same_seed_same_puzzle(self):
        a = PuzzleGenerator.generate("circle", 5, 0.005, seed=42)
        b = PuzzleGenerator.generate("circle", 5, 0.005, seed=42)
        assert a.pieces == b.pieces
        assert a.ground_truth.matings == b.ground_truth.matings

    def test_noise_is_recorded(self):
        bundle = PuzzleGenerator.generate("circle", 4, 0.01, seed=5)
        assert bundle.noise.xi == 0.01
        assert bundle.noise.diameter == pytest.approx(2.0)
        assert bundle.noise.epsilon == pytest.approx(0.02)

    def test_batch_is_independent_of_jobs(self):
        serial = PuzzleGenerator(jobs=1).generate_batch("circle", 4, 0.0, seed=9, count=3)
        parallel = PuzzleGenerator(jobs=2).generate_batch("circle", 4, 0.0, seed=9, count=3)
        assert [b.pieces for b in serial] == [b.pieces for b in parallel]

    def test_unknown_shape_rejected(self):
        with pytest.raises(ConfigError):
            PuzzleGenerator.generate("star", 3, 0.0, seed=1)

    def test_unknown_dataset_rejected(self):
        with pytest.raises(ConfigError):
            PuzzleGenerator.dataset_params("D9")
        assert PuzzleGenerator.dataset_params("D1") == ("polygon", 8, 0.01)

    def test_spawned_seeds_are_stable(self):
        assert spawn_seeds(7, 4) == spawn_seeds(7, 4)
        assert len(set(spawn_seeds(7, 4))) == 4

    def test_synthesize_with_given_cuts(self, quad):
        bundle = synthesize(quad, [], 0.0, np.random.default_rng(0))
        assert len(bundle.pieces) == 1
        assert bundle.ground_truth.boundary_edges == frozenset(
            EdgeRef(0, j) for j in range(len(quad))
        )
