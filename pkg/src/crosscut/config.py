"""Defaults and config dataclasses for crosscut."""

from dataclasses import dataclass, field, replace
from pathlib import Path

from crosscut.errors import ConfigError

# Geometry tolerances. Relative ones are scaled by the puzzle diameter D
# (or the bounding-box area) at the call site.
TAU_PAR = 1e-12
TAU_AREA_REL = 1e-9
TAU_GEOM_REL = 1e-9
TAU_ANG = 1e-9

# Synthesis
CIRCLE_SIDES = 32
CIRCLE_RADIUS = 1.0
WORKSPACE_W = 100.0
WORKSPACE_H = 100.0
HULL_POINTS_RANGE = (4, 50)
MIN_CHORD_REL = 1e-3
NOISE_RETRIES = 16
CUT_RETRIES = 1000

# Named benchmark datasets: (shape, cuts, xi)
DATASETS = {
    "D1": ("polygon", 8, 0.01),
    "D2": ("polygon", 10, 0.005),
    "D3": ("polygon", 19, 0.001),
    "D4": ("polygon", 35, 0.0001),
}

# Physics
DEFAULT_STIFFNESS = 1.0
DEFAULT_DT = 1.0 / 120.0
DEFAULT_DAMPING = 0.98
DEFAULT_ENERGY_TOL_REL = 1e-9
DEFAULT_MAX_STEPS = 200_000
DEFAULT_WINDOW = 500
ARENA_RADIUS_REL = 2.0

# Solver
DEFAULT_W1 = 1.0
DEFAULT_W2 = 1.0
DEFAULT_MAX_LEVEL = 32
DEFAULT_MAX_LOOPS_PER_LEVEL = 256
DEFAULT_MAX_BRANCHES = 64
DEFAULT_TRACE_EVERY = 100

# CLI
SEED_ENV_VAR = "CROSSCUT_SEED"
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_LOG_FILE_PREFIX = "crosscut"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVE = 4
EXIT_IO = 5


def default_log_file_for_command(command: str) -> Path:
    """Return the default log file path for a CLI subcommand."""
    return Path(f"{DEFAULT_LOG_FILE_PREFIX}_{command}.log")


@dataclass(frozen=True)
class RelaxConfig:
    """Integrator and convergence settings for spring-mass relaxation.

    energy_tol is absolute (units of k * length^2); use `for_diameter` to get
    the default 1e-9 * k * D^2. stability_phase caps omega * dt of the stiffest
    body; the shared density is chosen from it. A run has converged when the
    total energy moved by at most energy_tol + rel_energy_tol * total over the
    last window steps; rel_energy_tol = 0 leaves the absolute test alone.
    """

    dt: float = DEFAULT_DT
    damping: float = DEFAULT_DAMPING
    k: float = DEFAULT_STIFFNESS
    max_steps: int = DEFAULT_MAX_STEPS
    energy_tol: float = DEFAULT_ENERGY_TOL_REL
    collision_mode: bool = False
    window: int = DEFAULT_WINDOW
    stability_phase: float = 0.5
    rel_energy_tol: float = 1e-6
    collision_iterations: int = 4
    trace_every: int = 0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not 0 < self.damping < 1:
            raise ConfigError(f"damping must be in (0, 1), got {self.damping}")
        if not self.k > 0:
            raise ConfigError(f"stiffness k must be positive, got {self.k}")
        if not self.energy_tol > 0:
            raise ConfigError(f"energy_tol must be positive, got {self.energy_tol}")
        if self.max_steps < 1 or self.window < 1:
            raise ConfigError("max_steps and window must be >= 1")
        if not self.rel_energy_tol >= 0:
            raise ConfigError(f"rel_energy_tol must be >= 0, got {self.rel_energy_tol}")
        if not 0 < self.stability_phase < 2:
            raise ConfigError("stability_phase must be in (0, 2)")

    @classmethod
    def for_diameter(cls, diameter: float, **overrides) -> "RelaxConfig":
        """Defaults with energy_tol = 1e-9 * k * D^2."""
        k = overrides.get("k", DEFAULT_STIFFNESS)
        overrides.setdefault("energy_tol", DEFAULT_ENERGY_TOL_REL * k * diameter**2)
        return cls(**overrides)


@dataclass(frozen=True)
class SolverConfig:
    """Loop search, ranking and merging settings for the noisy solver."""

    w1: float = DEFAULT_W1
    w2: float = DEFAULT_W2
    relax: RelaxConfig = field(default_factory=RelaxConfig)
    rank_step_fraction: float = 0.1
    max_level: int = DEFAULT_MAX_LEVEL
    max_loops_per_level: int = DEFAULT_MAX_LOOPS_PER_LEVEL
    max_branches: int = DEFAULT_MAX_BRANCHES
    complete_unique: bool = True
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.w1 < 0 or self.w2 < 0:
            raise ConfigError("loop quality weights must be non-negative")
        if not 0 < self.rank_step_fraction <= 1:
            raise ConfigError("rank_step_fraction must be in (0, 1]")
        if self.max_level < 0 or self.max_loops_per_level < 1 or self.max_branches < 1:
            raise ConfigError("loop search caps must be positive")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    @property
    def rank_relax(self) -> RelaxConfig:
        """Relaxation settings for loop ranking, with the capped step budget."""
        steps = max(self.relax.window, int(self.relax.max_steps * self.rank_step_fraction))
        return replace(self.relax, max_steps=steps)


@dataclass(frozen=True)
class EvalConfig:
    """Scoring switches. weighting selects the per-mating weight for precision/recall."""

    weighting: str = "mean_area"

    def __post_init__(self) -> None:
        if self.weighting not in ("mean_area", "uniform"):
            raise ConfigError(f"unknown mating weighting: {self.weighting!r}")
