"""CrosscutPipeline: runs the generate, solve, evaluate, stats and render commands."""

import csv
import logging
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from crosscut.config import EvalConfig, RelaxConfig, SolverConfig
from crosscut.errors import ConfigError, MissingGroundTruthError, UnsolvableError
from crosscut.models import EvalReport, PuzzleBundle, SolutionBundle, StatsReport
from crosscut.reporting import RunSummary
from crosscut.services import bundle_io
from crosscut.services.evaluation import evaluate
from crosscut.services.puzzlegen import PuzzleGenerator
from crosscut.services.solver import solve_clean_bundle, solve_known_matings, solve_noisy
from crosscut.services.stats import run_stats_suite, write_stats_csv
from crosscut.services.svg import render_svg

logger = logging.getLogger(__name__)

SOLVE_MODES = ("clean", "noisy", "known-matings")


class CrosscutPipeline:
    """Main orchestrator behind the CLI subcommands."""

    def __init__(
        self,
        solver_config: Optional[SolverConfig] = None,
        eval_config: Optional[EvalConfig] = None,
        relax_overrides: Optional[dict] = None,
        jobs: int = 1,
    ):
        if jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {jobs}")
        self.solver_config = solver_config or SolverConfig(jobs=jobs)
        self.eval_config = eval_config or EvalConfig()
        self.relax_overrides = dict(relax_overrides or {})
        self.jobs = jobs
        self.summary = RunSummary()

    def _solver_config_for(self, bundle: PuzzleBundle) -> SolverConfig:
        relax = RelaxConfig.for_diameter(bundle.noise.diameter, **self.relax_overrides)
        return replace(self.solver_config, relax=relax)

    @staticmethod
    def _output_paths(out: Path, count: int, suffix: str) -> List[Path]:
        if count == 1 and out.suffix == suffix:
            return [out]
        return [out / f"puzzle_{k:04d}{suffix}" for k in range(count)]

    def generate(
        self,
        out: Path,
        shape_kind: str = "circle",
        a: int = 10,
        xi: float = 0.0,
        seed: Optional[int] = None,
        count: int = 1,
        dataset: Optional[str] = None,
    ) -> List[Path]:
        """Write `count` puzzle bundles; a file path for one puzzle, else a directory."""
        self.summary.title = "Generate"
        if dataset is not None:
            shape_kind, a, xi = PuzzleGenerator.dataset_params(dataset)
        if a < 0:
            raise ConfigError(f"cuts must be >= 0, got {a}")
        if count < 1:
            raise ConfigError(f"count must be >= 1, got {count}")
        bundles = PuzzleGenerator(jobs=self.jobs).generate_batch(shape_kind, a, xi, seed, count)
        paths = self._output_paths(out, count, bundle_io.PUZZLE_SUFFIX)
        for path, bundle in zip(paths, bundles):
            bundle_io.write_bundle(bundle, path)
            self.summary.log_operation(
                True,
                f"Wrote {path} ({len(bundle.pieces)} pieces)",
                item=path.name,
                outputs=[str(path)],
            )
        return paths

    def solve(
        self,
        source: Path,
        out: Path,
        mode: str = "noisy",
        seed: Optional[int] = None,
        trace_path: Optional[Path] = None,
    ) -> SolutionBundle:
        """Solve one puzzle bundle and write the solution.

        An empty noisy solution is still written before UnsolvableError is raised.
        """
        self.summary.title = "Solve"
        if mode not in SOLVE_MODES:
            raise ConfigError(f"unknown solve mode {mode!r}; expected one of {SOLVE_MODES}")
        bundle = bundle_io.read_puzzle(source)
        seed = seed if seed is not None else bundle.seed
        cfg = self._solver_config_for(bundle)
        logger.info("Solving %s in %s mode (%d pieces)", source, mode, len(bundle.pieces))

        trace_ctx = open(trace_path, "w", encoding="utf-8") if trace_path else nullcontext()
        try:
            with trace_ctx as trace:
                if mode == "clean":
                    solution = solve_clean_bundle(bundle.pieces, seed)
                elif mode == "known-matings":
                    if bundle.ground_truth is None:
                        raise MissingGroundTruthError(
                            f"{source}: known-matings mode needs ground-truth matings"
                        )
                    solution = solve_known_matings(
                        bundle.pieces,
                        bundle.ground_truth.matings,
                        cfg,
                        seed,
                        diameter=bundle.noise.diameter,
                        trace=trace,
                    )
                else:
                    solution = solve_noisy(bundle.pieces, bundle.noise, cfg, seed, trace=trace)
        except Exception as e:
            logger.error("Solving %s failed: %s", source, e)
            self.summary.log_operation(False, f"{type(e).__name__}: {e}", item=source.name)
            raise

        bundle_io.write_bundle(solution, out)
        self.summary.log_operation(
            True,
            f"Wrote {out} ({len(solution.matings)} matings, {len(solution.poses)} poses)",
            item=source.name,
            outputs=[str(out)],
        )
        if mode == "noisy" and not solution.matings:
            raise UnsolvableError(f"{source}: {solution.report.diagnostic}")
        return solution

    def evaluate(
        self,
        solutions: Sequence[Path],
        truths: Sequence[Path],
        out_dir: Optional[Path] = None,
        csv_path: Optional[Path] = None,
    ) -> List[EvalReport]:
        """Score solution/puzzle pairs; optionally rewrite solutions with their scores."""
        self.summary.title = "Evaluate"
        if len(solutions) != len(truths):
            raise ConfigError(
                f"got {len(solutions)} solution(s) but {len(truths)} ground-truth bundle(s)"
            )
        reports = []
        for sol_path, truth_path in zip(solutions, truths):
            try:
                puzzle = bundle_io.read_puzzle(truth_path)
                solution = bundle_io.read_solution(sol_path)
                report = evaluate(solution, puzzle, self.eval_config)
            except Exception as e:
                logger.error("Evaluating %s failed: %s", sol_path, e)
                raise
            outputs = []
            if out_dir is not None:
                target = out_dir / sol_path.name
                bundle_io.write_bundle(replace(solution, evaluation=report), target)
                outputs.append(str(target))
            self.summary.log_operation(
                True,
                f"Evaluated {sol_path.name}",
                item=sol_path.stem,
                evaluation=report,
                outputs=outputs,
            )
            reports.append(report)
        if csv_path is not None:
            self._write_scores_csv(csv_path)
        return reports

    def _write_scores_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["item", "q_positions", "precision", "recall"])
            for op in self.summary.evaluations():
                ev = op.evaluation
                writer.writerow(
                    [op.item, repr(ev.q_positions), repr(ev.precision),
                     "" if ev.recall is None else repr(ev.recall)]
                )
        self.summary.log_operation(True, f"Wrote {path}", outputs=[str(path)])

    def stats(
        self,
        out: Path,
        a_values: Sequence[int],
        count: int,
        xi_values: Sequence[float] = (0.0,),
        seed: Optional[int] = None,
        shape_kind: str = "circle",
    ) -> List[StatsReport]:
        self.summary.title = "Stats"
        reports = run_stats_suite(
            a_values, count, xi_values, seed=seed, jobs=self.jobs, shape_kind=shape_kind
        )
        out.parent.mkdir(parents=True, exist_ok=True)
        write_stats_csv(reports, out)
        self.summary.log_operation(
            True, f"Wrote {out} ({len(reports)} row(s))", item=out.name, outputs=[str(out)]
        )
        return reports

    def render(
        self,
        puzzle_path: Path,
        out: Path,
        view: str = "bag",
        solution_path: Optional[Path] = None,
        overlay_truth: bool = False,
    ) -> str:
        self.summary.title = "Render"
        puzzle = bundle_io.read_puzzle(puzzle_path)
        solution = (
            bundle_io.read_solution(solution_path, puzzle) if solution_path is not None else None
        )
        text = render_svg(puzzle, solution, view=view, overlay_truth=overlay_truth)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        self.summary.log_operation(
            True, f"Wrote {out} ({view} view)", item=puzzle_path.name, outputs=[str(out)]
        )
        return text
