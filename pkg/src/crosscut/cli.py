"""CLI for crosscut: argparse subcommands, logging setup and exit codes."""

import argparse
import logging
import os
from pathlib import Path
from typing import List, Optional

from crosscut import __version__
from crosscut.config import (
    DATASETS,
    DEFAULT_LOG_LEVEL,
    DEFAULT_MAX_LEVEL,
    DEFAULT_TRACE_EVERY,
    DEFAULT_W1,
    DEFAULT_W2,
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_IO,
    EXIT_OK,
    EXIT_SOLVE,
    SEED_ENV_VAR,
    EvalConfig,
    SolverConfig,
    default_log_file_for_command,
)
from crosscut.errors import (
    ConfigError,
    CrosscutError,
    InconsistencyError,
    NonGenericError,
    PhysicsError,
    UnsolvableError,
)
from crosscut.orchestration import SOLVE_MODES, CrosscutPipeline
from crosscut.services.puzzlegen import SHAPE_KINDS
from crosscut.services.svg import VIEWS

logger = logging.getLogger(__name__)

_DOC = """
Crossing cuts puzzles

Synthesize convex polygon jigsaw puzzles cut by straight lines, solve them
with or without geometric noise, score solutions and reproduce the
statistics of random cuts.

Usage:
    crosscut generate --out DIR [--shape circle|polygon] [--cuts A] [--xi XI] [--count N]
    crosscut solve PUZZLE --out SOLUTION [--mode clean|noisy|known-matings]
    crosscut evaluate --solution S [S ...] --truth P [P ...]
    crosscut stats --cuts 10 20 30 --count 30 --out stats.csv
    crosscut render PUZZLE --out picture.svg [--view bag|solved|solution]

Common options:
    --seed N           Seed (falls back to $CROSSCUT_SEED)
    --jobs N           Worker processes for batch work
    --log-level LEVEL  DEBUG|INFO|WARNING|ERROR|CRITICAL
    --log-file PATH    Log file path (default: crosscut_<command>.log)

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solve failure,
5 output could not be written.
"""


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, configure logging, run one subcommand and return its exit code."""
    parser = _make_parser()
    args = parser.parse_args(argv)

    log_file = args.log_file or default_log_file_for_command(args.command)
    _configure_logging(level=args.log_level, log_file=log_file)
    logger.info("crosscut %s: %s", __version__, args.command)
    logger.info("Log file: %s", log_file)

    pipeline: Optional[CrosscutPipeline] = None
    try:
        seed = _resolve_seed(args.seed)
        pipeline = _make_pipeline(args)
        _run(pipeline, args, seed)
    except (CrosscutError, OSError) as e:
        logger.error("An error occurred: %s", e)
        code = exit_code_for(e, args.command)
    else:
        code = EXIT_OK
    if pipeline is not None:
        print(pipeline.summary.get_summary())
    return code


def exit_code_for(error: Exception, command: str) -> int:
    """Stable exit code for an error raised while running `command`."""
    if isinstance(error, OSError):
        return EXIT_IO
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, NonGenericError):
        return EXIT_SOLVE if command == "solve" else EXIT_DATA
    if isinstance(error, (InconsistencyError, PhysicsError, UnsolvableError)):
        return EXIT_SOLVE
    return EXIT_DATA


def _resolve_seed(seed: Optional[int]) -> Optional[int]:
    if seed is not None:
        return seed
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from e


def _make_pipeline(args: argparse.Namespace) -> CrosscutPipeline:
    relax = {}
    for flag, key in (
        ("dt", "dt"),
        ("damping", "damping"),
        ("stiffness", "k"),
        ("max_steps", "max_steps"),
        ("trace_every", "trace_every"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            relax[key] = value
    if getattr(args, "trace", None) is not None:
        relax.setdefault("trace_every", DEFAULT_TRACE_EVERY)
    elif relax.get("trace_every"):
        raise ConfigError("--trace-every needs --trace")
    solver = SolverConfig(
        w1=getattr(args, "w1", DEFAULT_W1),
        w2=getattr(args, "w2", DEFAULT_W2),
        max_level=getattr(args, "max_level", DEFAULT_MAX_LEVEL),
        complete_unique=not getattr(args, "no_completion", False),
        jobs=args.jobs,
    )
    return CrosscutPipeline(
        solver_config=solver,
        eval_config=EvalConfig(weighting=getattr(args, "weighting", "mean_area")),
        relax_overrides=relax,
        jobs=args.jobs,
    )


def _run(pipeline: CrosscutPipeline, args: argparse.Namespace, seed: Optional[int]) -> None:
    if args.command == "generate":
        if args.dataset and (args.cuts is not None or args.xi is not None):
            raise ConfigError("--dataset sets the cuts and noise; drop --cuts/--xi")
        pipeline.generate(
            out=args.out,
            shape_kind=args.shape,
            a=args.cuts if args.cuts is not None else 10,
            xi=args.xi if args.xi is not None else 0.0,
            seed=seed,
            count=args.count,
            dataset=args.dataset,
        )
    elif args.command == "solve":
        pipeline.solve(args.puzzle, args.out, mode=args.mode, seed=seed, trace_path=args.trace)
    elif args.command == "evaluate":
        pipeline.evaluate(args.solution, args.truth, out_dir=args.out_dir, csv_path=args.csv)
    elif args.command == "stats":
        pipeline.stats(
            args.out,
            args.cuts,
            args.count,
            xi_values=args.xi,
            seed=seed,
            shape_kind=args.shape,
        )
    elif args.command == "render":
        pipeline.render(
            args.puzzle,
            args.out,
            view=args.view,
            solution_path=args.solution,
            overlay_truth=args.truth,
        )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help=f"Seed (default: ${SEED_ENV_VAR})")
    p.add_argument("--jobs", type=int, default=1, help="Worker processes for batch work")
    p.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=DEFAULT_LOG_LEVEL,
        help="Logging level",
    )
    p.add_argument(
        "--log-file",
        type=Path,
        default=None,
        help="Log file path (default: crosscut_<command>.log)",
    )


def _make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="crosscut",
        description=_DOC.strip(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Synthesize puzzle bundles")
    gen.add_argument("--out", type=Path, required=True,
                     help="Output .ccpuzzle file (one puzzle) or directory")
    gen.add_argument("--shape", choices=SHAPE_KINDS, default="circle", help="Global shape")
    gen.add_argument("--cuts", type=int, default=None, help="Number of cuts a (default: 10)")
    gen.add_argument("--xi", type=float, default=None, help="Relative noise bound (default: 0)")
    gen.add_argument("--count", type=int, default=1, help="Number of puzzles")
    gen.add_argument("--dataset", choices=sorted(DATASETS), default=None,
                     help="Benchmark preset setting shape, cuts and noise")
    _add_common(gen)

    solve = sub.add_parser("solve", help="Reconstruct a puzzle")
    solve.add_argument("puzzle", type=Path, help="Input .ccpuzzle bundle")
    solve.add_argument("--out", type=Path, required=True, help="Output .ccsol file")
    solve.add_argument("--mode", choices=SOLVE_MODES, default="noisy", help="Solver")
    solve.add_argument("--w1", type=float, default=DEFAULT_W1, help="Loop overlap weight")
    solve.add_argument("--w2", type=float, default=DEFAULT_W2, help="Loop distance weight")
    solve.add_argument("--max-level", type=int, default=DEFAULT_MAX_LEVEL,
                       help="Highest loop level to grow")
    solve.add_argument("--no-completion", action="store_true",
                       help="Skip unique-candidate completion after merging")
    solve.add_argument("--dt", type=float, default=None, help="Integrator time step")
    solve.add_argument("--damping", type=float, default=None, help="Velocity factor per step")
    solve.add_argument("--stiffness", type=float, default=None, help="Spring constant k")
    solve.add_argument("--max-steps", type=int, default=None, help="Relaxation step cap")
    solve.add_argument("--trace", type=Path, default=None,
                       help="Write a line-delimited JSON relaxation trace here")
    solve.add_argument("--trace-every", type=int, default=None,
                       help=f"Trace every N steps (default with --trace: {DEFAULT_TRACE_EVERY})")
    _add_common(solve)

    ev = sub.add_parser("evaluate", help="Score solutions against ground truth")
    ev.add_argument("--solution", type=Path, nargs="+", required=True, help=".ccsol files")
    ev.add_argument("--truth", type=Path, nargs="+", required=True,
                    help=".ccpuzzle files with ground truth, in the same order")
    ev.add_argument("--out-dir", type=Path, default=None,
                    help="Rewrite solutions with their scores into this directory")
    ev.add_argument("--csv", type=Path, default=None, help="Write a per-puzzle score table")
    ev.add_argument("--weighting", choices=["mean_area", "uniform"], default="mean_area",
                    help="Per-mating weight for precision and recall")
    _add_common(ev)

    st = sub.add_parser("stats", help="Empirical vs. closed-form puzzle statistics")
    st.add_argument("--cuts", type=int, nargs="+", required=True, help="Values of a")
    st.add_argument("--count", type=int, default=30, help="Puzzles per configuration")
    st.add_argument("--xi", type=float, nargs="+", default=[0.0], help="Noise levels")
    st.add_argument("--shape", choices=SHAPE_KINDS, default="circle", help="Global shape")
    st.add_argument("--out", type=Path, required=True, help="Output .csv file")
    _add_common(st)

    rd = sub.add_parser("render", help="Draw a puzzle or solution as SVG")
    rd.add_argument("puzzle", type=Path, help="Input .ccpuzzle bundle")
    rd.add_argument("--out", type=Path, required=True, help="Output .svg file")
    rd.add_argument("--view", choices=VIEWS, default="bag", help="What to draw")
    rd.add_argument("--solution", type=Path, default=None, help=".ccsol for the solution view")
    rd.add_argument("--truth", action="store_true", help="Overlay the ground-truth regions")
    _add_common(rd)
    return p


def _configure_logging(
    level: str = "INFO",
    log_file: Optional[Path] = None,
) -> None:
    """Configure logging to console and optionally to a file."""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file is not None:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )
