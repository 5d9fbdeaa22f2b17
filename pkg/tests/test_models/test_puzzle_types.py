"""Tests for edge references, matings, noise specs, bundles and loop records."""

import math

import pytest

from crosscut.config import RelaxConfig, SolverConfig
from crosscut.errors import ConfigError, GeometryError, MatingConflictError, NoiseError
from crosscut.models import (
    EdgeRef,
    Estimate,
    GroundTruth,
    LoopNode,
    Mating,
    NoiseSpec,
    Pose,
    PuzzleBundle,
    SolutionBundle,
    SolverReport,
)
from crosscut.models.puzzle import check_mate_uniqueness


class TestMating:
    """Canonical order and mate uniqueness."""

    def test_edges_are_stored_sorted(self):
        m = Mating(EdgeRef(3, 1), EdgeRef(0, 2))
        assert m.a == EdgeRef(0, 2) and m.b == EdgeRef(3, 1)
        assert m == Mating(EdgeRef(0, 2), EdgeRef(3, 1))

    def test_same_piece_rejected(self):
        with pytest.raises(MatingConflictError):
            Mating(EdgeRef(1, 0), EdgeRef(1, 2))

    def test_other_end(self):
        m = Mating(EdgeRef(0, 2), EdgeRef(1, 0))
        assert m.other(EdgeRef(1, 0)) == EdgeRef(0, 2)
        with pytest.raises(KeyError):
            m.other(EdgeRef(2, 0))

    def test_string_form(self):
        assert str(Mating(EdgeRef(1, 0), EdgeRef(0, 2))) == "{0:2, 1:0}"

    def test_uniqueness_violation_detected(self):
        shared = EdgeRef(0, 1)
        with pytest.raises(MatingConflictError, match="0:1"):
            check_mate_uniqueness([Mating(shared, EdgeRef(1, 0)), Mating(shared, EdgeRef(2, 3))])

    def test_uniqueness_allows_repeats_of_one_mating(self):
        m = Mating(EdgeRef(0, 1), EdgeRef(1, 0))
        check_mate_uniqueness([m, m])


class TestNoiseSpec:
    """Noise bounds."""

    def test_from_xi_scales_by_diameter(self):
        ns = NoiseSpec.from_xi(0.01, 2.0)
        assert ns.epsilon == 0.02

    def test_xi_out_of_range_rejected(self):
        with pytest.raises(NoiseError):
            NoiseSpec.from_xi(1.0, 2.0)
        with pytest.raises(NoiseError):
            NoiseSpec.from_xi(-0.1, 2.0)

    def test_inconsistent_epsilon_rejected(self):
        with pytest.raises(NoiseError):
            NoiseSpec(xi=0.01, epsilon=0.5, diameter=2.0)


class TestBundles:
    """Bundle-level invariants."""

    def test_ground_truth_rejects_shared_edges(self):
        e = EdgeRef(0, 0)
        with pytest.raises(MatingConflictError):
            GroundTruth(
                matings=frozenset({Mating(e, EdgeRef(1, 0)), Mating(e, EdgeRef(2, 0))}),
                poses={},
            )

    def test_puzzle_needs_pieces(self, unit_square):
        with pytest.raises(GeometryError):
            PuzzleBundle(pieces={}, noise=NoiseSpec.from_xi(0.0, 1.0), shape=unit_square)

    def test_truth_poses_must_match_pieces(self, unit_square):
        truth = GroundTruth(matings=frozenset(), poses={0: Pose(), 7: Pose()})
        with pytest.raises(GeometryError, match="7"):
            PuzzleBundle(
                pieces={0: unit_square},
                noise=NoiseSpec.from_xi(0.0, 1.0),
                shape=unit_square,
                ground_truth=truth,
            )

    def test_without_ground_truth(self, four_piece_puzzle):
        stripped = four_piece_puzzle.without_ground_truth()
        assert stripped.ground_truth is None
        assert stripped.pieces is four_piece_puzzle.pieces
        assert stripped.n_cuts is None
        assert four_piece_puzzle.n_cuts == 2

    def test_solution_checks_mate_uniqueness(self):
        e = EdgeRef(0, 0)
        with pytest.raises(MatingConflictError):
            SolutionBundle(
                matings=frozenset({Mating(e, EdgeRef(1, 0)), Mating(e, EdgeRef(2, 0))}),
                poses={},
                report=SolverReport(mode="noisy"),
            )


class TestLoopNode:
    """Loop keys and merge order."""

    def _node(self, level, quality, *pairs):
        matings = tuple(Mating(EdgeRef(*a), EdgeRef(*b)) for a, b in pairs)
        pieces = frozenset(p for m in matings for p in m.pieces)
        return LoopNode(level=level, matings=matings, pieces=pieces, quality=quality)

    def test_key_ignores_order(self):
        a = self._node(0, 1.0, ((0, 0), (1, 0)), ((1, 1), (2, 0)))
        b = self._node(0, 2.0, ((1, 1), (2, 0)), ((0, 0), (1, 0)))
        assert a.key == b.key

    def test_sort_key_prefers_higher_level_then_lower_quality(self):
        low = self._node(0, 0.1, ((0, 0), (1, 0)))
        high_bad = self._node(2, 5.0, ((0, 1), (1, 1)))
        high_good = self._node(2, 1.0, ((0, 2), (1, 2)))
        ordered = sorted([low, high_bad, high_good], key=LoopNode.sort_key)
        assert ordered == [high_good, high_bad, low]

    def test_unranked_loop_has_infinite_quality(self):
        node = LoopNode(level=0, matings=(), pieces=frozenset())
        assert math.isinf(node.quality)


class TestConfig:
    """Config dataclass validation."""

    def test_relax_rejects_bad_damping(self):
        with pytest.raises(ConfigError):
            RelaxConfig(damping=1.0)

    def test_relax_rejects_negative_relative_tolerance(self):
        with pytest.raises(ConfigError):
            RelaxConfig(rel_energy_tol=-1e-6)
        assert RelaxConfig(rel_energy_tol=0.0).rel_energy_tol == 0.0

    def test_relax_for_diameter_scales_tolerance(self):
        cfg = RelaxConfig.for_diameter(10.0, k=2.0)
        assert cfg.energy_tol == pytest.approx(1e-9 * 2.0 * 100.0)

    def test_rank_relax_caps_steps(self):
        cfg = SolverConfig(relax=RelaxConfig(max_steps=100_000, window=500))
        assert cfg.rank_relax.max_steps == 10_000
        small = SolverConfig(relax=RelaxConfig(max_steps=1_000, window=500))
        assert small.rank_relax.max_steps == 500

    def test_solver_rejects_negative_weights(self):
        with pytest.raises(ConfigError):
            SolverConfig(w1=-1.0)

    def test_estimate_within(self):
        assert Estimate(mean=1.0, se=0.1, n=10).within(1.25)
        assert not Estimate(mean=1.0, se=0.1, n=10).within(1.5)
