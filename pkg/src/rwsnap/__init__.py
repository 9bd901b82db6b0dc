"""Read/write snapshot algorithms with a step-granular verification harness.

The package provides three snapshot constructions over read/write registers
(single-writer, fixed-size concurrent, unbounded-arrival) in lock-free,
wait-free, and blocking variants, plus the machinery to check them: a
deterministic interleaving explorer, a linearizability checker, an
interval-based timeline oracle, a threaded stress runner, and a benchmark
sweep.  See the README for a tour.
"""

from .core import (
    MUTANTS,
    OBJECT_TYPES,
    OK,
    VARIANTS,
    ExplorationOverflow,
    HarnessDefect,
    Ruleset,
    ScenarioError,
    SnapshotView,
    apply_mutant,
)
from .checker import (
    CheckResult,
    brute_force_linearizable,
    check_linearizable,
    cross_validate,
    timeline_oracle_check,
)
from .explore import (
    ExploreReport,
    merged_explore,
    random_explore,
    replay_schedule,
)
from .history import History
from .scenario import Scenario, load_scenario, parse_scenario
from .sim import Execution, OpSpec, SimConfig, run_schedule

__version__ = "0.1.0"

__all__ = [
    "MUTANTS",
    "OBJECT_TYPES",
    "OK",
    "VARIANTS",
    "CheckResult",
    "Execution",
    "ExplorationOverflow",
    "ExploreReport",
    "HarnessDefect",
    "History",
    "OpSpec",
    "Ruleset",
    "Scenario",
    "ScenarioError",
    "SimConfig",
    "SnapshotView",
    "apply_mutant",
    "brute_force_linearizable",
    "check_linearizable",
    "cross_validate",
    "load_scenario",
    "merged_explore",
    "parse_scenario",
    "random_explore",
    "replay_schedule",
    "run_schedule",
    "timeline_oracle_check",
    "__version__",
]
