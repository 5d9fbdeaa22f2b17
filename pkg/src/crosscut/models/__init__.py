"""Data structures for crosscut."""

from crosscut.models.geometry import ConvexPolygon, Line2, Pose
from crosscut.models.loop import Aggregate, LoopNode
from crosscut.models.physics import Body, Spring
from crosscut.models.puzzle import (
    FORMAT_VERSION,
    CutSet,
    EdgeGeom,
    EdgeRef,
    GroundTruth,
    Mating,
    NoiseSpec,
    PuzzleBundle,
)
from crosscut.models.report import (
    Estimate,
    EvalReport,
    RelaxResult,
    RunRecord,
    SolutionBundle,
    SolverReport,
    StatsReport,
    TwoPhaseResult,
)

__all__ = [
    "FORMAT_VERSION",
    "Aggregate",
    "Body",
    "ConvexPolygon",
    "CutSet",
    "EdgeGeom",
    "EdgeRef",
    "Estimate",
    "EvalReport",
    "GroundTruth",
    "Line2",
    "LoopNode",
    "Mating",
    "NoiseSpec",
    "Pose",
    "PuzzleBundle",
    "RelaxResult",
    "RunRecord",
    "SolutionBundle",
    "SolverReport",
    "Spring",
    "StatsReport",
    "TwoPhaseResult",
]
