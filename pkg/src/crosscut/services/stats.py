"""Closed-form puzzle statistics and their Monte Carlo / synthetic counterparts."""

import csv
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from crosscut.errors import ConfigError, GeometryError, MissingGroundTruthError
from crosscut.models import EdgeRef, Estimate, PuzzleBundle, StatsReport
from crosscut.services.constraints import candidate_matings, mates_per_edge
from crosscut.services.puzzlegen import PuzzleGenerator, spawn_seeds

logger = logging.getLogger(__name__)


def analytic_expected_cut_length() -> float:
    """Mean length of a unit-circle chord through two uniform circumference points."""
    return 4.0 / math.pi


def chord_length(theta: float) -> float:
    """Unit-circle chord length for central angle theta."""
    return 2.0 * math.sin(theta / 2.0)


def analytic_intersection_probability() -> float:
    return 1.0 / 3.0


def expected_intersections(a: int) -> float:
    return a * (a - 1) / 6.0


def expected_edges(a: int) -> float:
    """Expected number of cut-borne edges, (a^2 + 2a) / 3."""
    return (a * a + 2.0 * a) / 3.0


def expected_avg_edge_length(a: int) -> float:
    """First-order approximation 12 / (pi (a + 2)) of the mean cut-edge length."""
    if a < 1:
        raise ConfigError(f"average edge length needs at least one cut, got a={a}")
    return 12.0 / (math.pi * (a + 2))


def expected_pieces(a: int) -> float:
    return a * a / 6.0 + 5.0 * a / 6.0 + 1.0


def max_pieces(a: int) -> int:
    """Lazy caterer's number: the most pieces a cuts can make."""
    return (a * a + a) // 2 + 1


def noise_vs_edge_length(xi: float, a: int) -> float:
    """Noise level relative to the expected average edge length instead of the diameter."""
    return 4.0 * xi * math.pi * (a + 2) / 12.0


def _estimate(samples: np.ndarray) -> Estimate:
    n = int(samples.size)
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(mean=float(samples.mean()), se=se, n=n)


def _random_chords(n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    phi = rng.uniform(0.0, 2.0 * math.pi, size=(n, 2))
    return phi.min(axis=1), phi.max(axis=1)


def sample_chord_lengths(n: int, rng: np.random.Generator) -> Estimate:
    lo, hi = _random_chords(n, rng)
    return _estimate(2.0 * np.abs(np.sin((hi - lo) / 2.0)))


def sample_chord_intersections(n: int, rng: np.random.Generator) -> Estimate:
    """Fraction of random chord pairs that cross.

    Two chords cross when exactly one end of the second lies on the first one's arc.
    """
    lo1, hi1 = _random_chords(n, rng)
    lo2, hi2 = _random_chords(n, rng)
    in_first = (lo2 > lo1) & (lo2 < hi1)
    in_second = (hi2 > lo1) & (hi2 < hi1)
    return _estimate((in_first ^ in_second).astype(float))


def taylor_second_order(total_lengths: np.ndarray, edge_counts: np.ndarray) -> Optional[float]:
    """Empirical second-order term of E[sum l / N] around E[sum l] / E[N]."""
    if total_lengths.size < 2:
        return None
    mean_n = float(edge_counts.mean())
    if mean_n == 0.0:
        return None
    cov = float(np.cov(total_lengths, edge_counts, ddof=1)[0, 1])
    var_n = float(edge_counts.var(ddof=1))
    return -cov / mean_n**2 + var_n * float(total_lengths.mean()) / mean_n**3


def sides_per_piece(
    n_edges: int, pid: int, boundary: FrozenSet[EdgeRef], merge_boundary_runs: bool
) -> int:
    """Edge count of a piece; a run of consecutive border sides can count as one arc side."""
    flags = [EdgeRef(pid, j) in boundary for j in range(n_edges)]
    if not merge_boundary_runs or not any(flags):
        return n_edges
    if all(flags):
        return 1
    runs = sum(1 for j in range(n_edges) if flags[j] and not flags[j - 1])
    return flags.count(False) + runs


@dataclass
class PuzzleMeasure:
    a: int
    n_pieces: int
    n_edges: int
    n_intersections: int
    cut_length: float
    sides: List[int]
    mates_per_edge: float


def measure_puzzle(bundle: PuzzleBundle) -> PuzzleMeasure:
    """Counts and lengths of one generated puzzle; needs its ground truth.

    Raises GeometryError when the counts break the piece or edge identity.
    """
    gt = bundle.ground_truth
    if gt is None or gt.n_intersections is None or gt.n_cut_edges is None:
        raise MissingGroundTruthError("puzzle statistics need the generator's ground truth")
    a = len(gt.cuts)
    merge = bundle.shape_kind == "circle"
    sides = [
        sides_per_piece(len(poly), pid, gt.boundary_edges, merge)
        for pid, poly in sorted(bundle.pieces.items())
    ]
    n_piece_edges = sum(len(poly) for poly in bundle.pieces.values())
    candidates = candidate_matings(bundle.pieces, bundle.noise)
    measure = PuzzleMeasure(
        a=a,
        n_pieces=len(bundle.pieces),
        n_edges=gt.n_cut_edges,
        n_intersections=gt.n_intersections,
        cut_length=float(gt.cut_length or 0.0),
        sides=sides,
        mates_per_edge=mates_per_edge(candidates, n_piece_edges),
    )
    if measure.n_pieces != measure.n_intersections + a + 1:
        raise GeometryError(
            f"piece count {measure.n_pieces} breaks N_intersect + a + 1 = "
            f"{measure.n_intersections + a + 1}"
        )
    if measure.n_edges != a + 2 * measure.n_intersections:
        raise GeometryError(
            f"edge count {measure.n_edges} breaks a + 2 N_intersect = "
            f"{a + 2 * measure.n_intersections}"
        )
    return measure


def _measure_job(job: Tuple[str, int, float, int]) -> PuzzleMeasure:
    shape_kind, a, xi, seed = job
    return measure_puzzle(PuzzleGenerator.generate(shape_kind, a, xi, seed))


def summarize(a: int, xi: float, measures: Sequence[PuzzleMeasure]) -> StatsReport:
    """Reduce per-puzzle measures of one (a, xi) configuration into a report."""
    pieces = np.array([m.n_pieces for m in measures], dtype=float)
    edges = np.array([m.n_edges for m in measures], dtype=float)
    inters = np.array([m.n_intersections for m in measures], dtype=float)
    lengths = np.array([m.cut_length for m in measures], dtype=float)
    with_edges = edges > 0
    avg_len = lengths[with_edges] / edges[with_edges]
    per_cut = lengths / a if a > 0 else np.zeros_like(lengths)
    mpe = np.array([m.mates_per_edge for m in measures], dtype=float)

    counts: Counter = Counter()
    for m in measures:
        counts.update(m.sides)
    total = sum(counts.values())
    histogram = {k: counts[k] / total for k in sorted(counts)} if total else {}

    e_pieces, e_edges, e_inter = _estimate(pieces), _estimate(edges), _estimate(inters)
    e_len = _estimate(avg_len) if avg_len.size else Estimate(0.0, 0.0, 0)
    e_cut, e_mpe = _estimate(per_cut), _estimate(mpe)
    return StatsReport(
        a=a,
        xi=xi,
        n_puzzles=len(measures),
        n_pieces=e_pieces.mean,
        n_pieces_se=e_pieces.se,
        n_edges=e_edges.mean,
        n_edges_se=e_edges.se,
        n_intersections=e_inter.mean,
        n_intersections_se=e_inter.se,
        avg_edge_length=e_len.mean,
        avg_edge_length_se=e_len.se,
        cut_length=e_cut.mean,
        cut_length_se=e_cut.se,
        edges_per_piece_histogram=histogram,
        expected_pieces=expected_pieces(a),
        max_pieces=max_pieces(a),
        expected_edges=expected_edges(a),
        expected_intersections=expected_intersections(a),
        expected_avg_edge_length=expected_avg_edge_length(a) if a >= 1 else None,
        expected_cut_length=analytic_expected_cut_length(),
        taylor_gap=taylor_second_order(lengths, edges),
        xi_bar=noise_vs_edge_length(xi, a),
        mates_per_edge=e_mpe.mean,
        mates_per_edge_se=e_mpe.se,
    )


def run_stats_suite(
    a_values: Sequence[int],
    puzzles_per_a: int,
    xi_values: Sequence[float] = (0.0,),
    seed: Optional[int] = None,
    jobs: int = 1,
    shape_kind: str = "circle",
) -> List[StatsReport]:
    """One report per (a, xi) over puzzles_per_a seeded puzzles."""
    if not a_values:
        raise ConfigError("a_values must not be empty")
    if puzzles_per_a < 1:
        raise ConfigError(f"puzzles_per_a must be >= 1, got {puzzles_per_a}")
    configs = [(a, xi) for a in a_values for xi in xi_values]
    seeds = spawn_seeds(seed, len(configs))
    work: List[Tuple[str, int, float, int]] = []
    for (a, xi), config_seed in zip(configs, seeds):
        work.extend((shape_kind, a, xi, s) for s in spawn_seeds(config_seed, puzzles_per_a))

    if jobs == 1:
        measures = [_measure_job(job) for job in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            measures = list(pool.map(_measure_job, work))

    reports = []
    for k, (a, xi) in enumerate(configs):
        chunk = measures[k * puzzles_per_a : (k + 1) * puzzles_per_a]
        report = summarize(a, xi, chunk)
        logger.info(
            "a=%d xi=%s: pieces %.2f (expected %.2f), edges %.2f (expected %.2f)",
            a,
            xi,
            report.n_pieces,
            report.expected_pieces,
            report.n_edges,
            report.expected_edges,
        )
        reports.append(report)
    return reports


def _cell(value: object) -> object:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_stats_csv(reports: Sequence[StatsReport], path: Path) -> None:
    """One row per (a, xi); histogram classes are spread into epp_<n> columns."""
    rows = [r.as_row() for r in reports]
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    fixed = [c for c in columns if not c.startswith("epp_")]
    epp = sorted((c for c in columns if c.startswith("epp_")), key=lambda c: int(c[4:]))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fixed + epp, restval=0.0)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
    logger.info("Wrote %d stats row(s) to %s", len(rows), path)


def histogram_tail(histogram: Dict[int, float], above: int = 5) -> float:
    """Share of pieces with more than `above` sides."""
    return sum(freq for sides, freq in histogram.items() if sides > above)
