"""Result records: relaxation, solver, evaluation, statistics and solutions."""

from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, List, Optional

from crosscut.models.geometry import Pose
from crosscut.models.puzzle import FORMAT_VERSION, Mating, check_mate_uniqueness


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    se: float
    n: int

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_se * self.se


@dataclass
class RelaxResult:
    poses: Dict[int, Pose]
    energy: float
    converged: bool
    steps: int


@dataclass
class TwoPhaseResult:
    """Both phases of a placement run; phase 2 is the answer."""

    phase1: RelaxResult
    phase2: RelaxResult

    @property
    def poses(self) -> Dict[int, Pose]:
        return self.phase2.poses

    @property
    def converged(self) -> bool:
        return self.phase1.converged and self.phase2.converged


@dataclass
class SolverReport:
    mode: str
    n_candidates: int = 0
    x_max: Optional[int] = None
    loops_per_level: List[int] = field(default_factory=list)
    merged_loops: int = 0
    completed_matings: int = 0
    unplaced: List[int] = field(default_factory=list)
    final_energy: Optional[float] = None
    converged: Optional[bool] = None
    xi_bar: Optional[float] = None
    diagnostic: Optional[str] = None
    truncations: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvalReport:
    q_positions: float
    precision: float
    recall: Optional[float]
    global_alignment: Pose
    overlap_ratios: Dict[int, float] = field(default_factory=dict)


@dataclass
class SolutionBundle:
    matings: FrozenSet[Mating]
    poses: Dict[int, Pose]
    report: SolverReport
    evaluation: Optional[EvalReport] = None
    format_version: str = FORMAT_VERSION

    def __post_init__(self) -> None:
        check_mate_uniqueness(self.matings)


@dataclass
class StatsReport:
    """Empirical means (with standard errors) beside the closed-form values for one (a, xi)."""

    a: int
    xi: float
    n_puzzles: int
    n_pieces: float
    n_pieces_se: float
    n_edges: float
    n_edges_se: float
    n_intersections: float
    n_intersections_se: float
    avg_edge_length: float
    avg_edge_length_se: float
    cut_length: float
    cut_length_se: float
    edges_per_piece_histogram: Dict[int, float]
    expected_pieces: float
    max_pieces: int
    expected_edges: float
    expected_intersections: float
    expected_avg_edge_length: Optional[float]
    expected_cut_length: float
    taylor_gap: Optional[float] = None
    xi_bar: Optional[float] = None
    mates_per_edge: Optional[float] = None
    mates_per_edge_se: Optional[float] = None

    def as_row(self) -> Dict[str, object]:
        """Flat CSV row; histogram classes become epp_<n> columns."""
        row = {k: v for k, v in asdict(self).items() if k != "edges_per_piece_histogram"}
        for n_edges, freq in sorted(self.edges_per_piece_histogram.items()):
            row[f"epp_{n_edges}"] = freq
        return row


@dataclass
class RunRecord:
    """Outcome of one pipeline step on one item (a puzzle or solution file)."""

    success: bool
    message: str
    item: Optional[str] = None
    evaluation: Optional[EvalReport] = None
    outputs: List[str] = field(default_factory=list)
