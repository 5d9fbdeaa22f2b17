"""Shared fixtures for crosscut tests."""

from pathlib import Path

import numpy as np
import pytest

from crosscut.config import RelaxConfig, SolverConfig
from crosscut.models import ConvexPolygon, Line2, PuzzleBundle
from crosscut.services.puzzlegen import synthesize

# A generic quadrilateral: no two sides share a length or an angle.
QUAD = [(0.0, 0.0), (0.4, 3.5), (4.6, 4.0), (5.0, 0.3)]


@pytest.fixture
def tmp_root(tmp_path: Path) -> Path:
    """A temporary directory for bundles, logs and drawings."""
    return tmp_path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square() -> ConvexPolygon:
    return ConvexPolygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


@pytest.fixture
def two_squares():
    """Unit squares side by side; edge 2 of piece 0 mates edge 0 of piece 1."""
    return {
        0: ConvexPolygon([(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]),
        1: ConvexPolygon([(1.0, 0.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)]),
    }


@pytest.fixture
def quad() -> ConvexPolygon:
    return ConvexPolygon(QUAD)


@pytest.fixture
def three_piece_puzzle(quad) -> PuzzleBundle:
    """Two cuts that do not cross: three pieces, two matings, no junction."""
    cuts = [Line2.through((1.5, -1.0), (2.2, 5.0)), Line2.through((3.2, -1.0), (3.6, 5.0))]
    return synthesize(quad, cuts, 0.0, np.random.default_rng(3), seed=3)


@pytest.fixture
def four_piece_puzzle(quad) -> PuzzleBundle:
    """Two crossing cuts: four pieces around one junction."""
    cuts = [Line2.through((0.7, -1.0), (4.1, 5.0)), Line2.through((-1.0, 1.2), (6.0, 2.6))]
    return synthesize(quad, cuts, 0.0, np.random.default_rng(4), seed=4)


@pytest.fixture
def six_piece_puzzle(quad) -> PuzzleBundle:
    """Three cuts with two junctions."""
    cuts = [
        Line2.through((0.7, -1.0), (4.1, 5.0)),
        Line2.through((-1.0, 1.2), (6.0, 2.6)),
        Line2.through((3.9, -1.0), (4.3, 5.0)),
    ]
    return synthesize(quad, cuts, 0.0, np.random.default_rng(6), seed=6)


@pytest.fixture
def fast_relax() -> RelaxConfig:
    """Relaxation settings sized for small test puzzles."""
    return RelaxConfig.for_diameter(6.0, max_steps=40_000, window=200)


@pytest.fixture
def fast_solver(fast_relax) -> SolverConfig:
    return SolverConfig(relax=fast_relax, max_level=4)
