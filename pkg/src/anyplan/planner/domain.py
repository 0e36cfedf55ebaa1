"""
The anyplan.planner.domain module contains planner configuration, the
parameter presets of the two reference workloads, termination conditions,
run monitoring and planner results.
"""
import dataclasses
import enum
import logging
import math
import time
from typing import Dict, NamedTuple, Optional

from anyplan.bench.domain import Budget, BudgetKind, MetricsTrace
from anyplan.space.domain import ContractViolation, PathSolution

LOGGER = logging.getLogger(__name__)

RRT_CONNECT = "RRTConnect"
RRT_CONNECT_S = "RRTConnect+S"
M_RRT_CONNECT_S = "MRRTConnect+S"
RRT_CONNECT_STAR = "RRTConnect*"
RRT_CONNECT_STAR_S = "RRTConnect*+S"

PLANNER_NAMES = (
    RRT_CONNECT,
    RRT_CONNECT_S,
    M_RRT_CONNECT_S,
    RRT_CONNECT_STAR,
    RRT_CONNECT_STAR_S,
)

# a run that has not found a solution by this multiple of a
# first-solution-then-budget budget gives up
DEFAULT_CEILING_FACTOR = 10.0


@dataclasses.dataclass(frozen=True)
class Heuristics:
    informed_sampling: bool = True
    sample_rejection: bool = True


@dataclasses.dataclass(frozen=True)
class PlannerConfig:
    """
    Planner parameters. scf and opt_threshold are None for planners that
    never shortcut or never use the local optimisation trigger.
    """

    range: float
    scf: Optional[float] = None
    opt_threshold: Optional[float] = None
    gamma_override: Optional[float] = None
    heuristics: Heuristics = Heuristics()
    seed: int = 0

    def __post_init__(self):
        if not self.range > 0:
            raise ContractViolation(f"range must be positive: {self.range}")
        if self.scf is not None and not self.scf > 0:
            raise ContractViolation(f"scf must be positive: {self.scf}")
        if self.opt_threshold is not None and not 0.0 <= self.opt_threshold < 1.0:
            raise ContractViolation(
                f"opt_threshold must be in [0, 1): {self.opt_threshold}"
            )
        if self.gamma_override is not None and not self.gamma_override > 0:
            raise ContractViolation(f"gamma must be positive: {self.gamma_override}")

    def with_seed(self, seed: int) -> "PlannerConfig":
        return dataclasses.replace(self, seed=seed)

    def require_scf(self, planner: str) -> float:
        if self.scf is None:
            raise ContractViolation(f"{planner} needs a shortcut count factor")
        return self.scf


class _Row(NamedTuple):
    range: float
    scf: Optional[float] = None
    opt_threshold: Optional[float] = None


PRESETS: Dict[str, Dict[str, _Row]] = {
    "vine": {
        RRT_CONNECT_STAR: _Row(2.5),
        RRT_CONNECT_STAR_S: _Row(2.5, 3.0, 0.01),
        RRT_CONNECT_S: _Row(0.5, 4.0),
        M_RRT_CONNECT_S: _Row(0.5, 4.0),
    },
    "cubicle": {
        RRT_CONNECT_STAR: _Row(0.5),
        RRT_CONNECT_STAR_S: _Row(3.0, 3.0, 0.11),
        RRT_CONNECT_S: _Row(0.5, 3.0),
        M_RRT_CONNECT_S: _Row(0.5, 3.0),
    },
}


def make_preset(name: str, planner: str, seed: int = 0) -> PlannerConfig:
    """
    Parameters of a named workload for a planner. Plain RRTConnect takes
    the range of RRTConnect+S, which is the same planner without the
    shortcut.

    :raises KeyError: for an unknown preset or planner name
    """
    if name not in PRESETS:
        raise KeyError(f"Unknown preset: {name}")
    if planner not in PLANNER_NAMES:
        raise KeyError(f"Unknown planner: {planner}")
    rows = PRESETS[name]
    if planner == RRT_CONNECT:
        row = _Row(rows[RRT_CONNECT_S].range)
    else:
        row = rows[planner]
    return PlannerConfig(
        range=row.range, scf=row.scf, opt_threshold=row.opt_threshold, seed=seed
    )


class TerminationKind(enum.Enum):
    TIME_BUDGET = "time_budget"
    ITERATION_BUDGET = "iteration_budget"
    FIRST_SOLUTION_THEN_BUDGET = "first_solution_then_budget"


@dataclasses.dataclass(frozen=True)
class Termination:
    """
    When a planner run stops.

    A first-solution-then-budget run stops at the budget if it has a
    solution, otherwise at its first solution, but never later than the
    ceiling (default ten times the budget).
    """

    kind: TerminationKind
    budget: float
    ceiling: Optional[float] = None

    def __post_init__(self):
        if not self.budget > 0:
            raise ContractViolation(f"Termination budget must be positive: {self.budget}")
        if self.kind is TerminationKind.ITERATION_BUDGET and self.budget != int(self.budget):
            raise ContractViolation(f"Iteration budget must be whole: {self.budget}")

    @property
    def counts_iterations(self) -> bool:
        return self.kind is TerminationKind.ITERATION_BUDGET

    @property
    def limit(self) -> float:
        if self.kind is TerminationKind.FIRST_SOLUTION_THEN_BUDGET:
            return self.ceiling if self.ceiling is not None else self.budget * DEFAULT_CEILING_FACTOR
        return self.budget

    @staticmethod
    def time_budget(seconds: float) -> "Termination":
        return Termination(TerminationKind.TIME_BUDGET, seconds)

    @staticmethod
    def iteration_budget(count: int) -> "Termination":
        return Termination(TerminationKind.ITERATION_BUDGET, count)

    @staticmethod
    def first_solution_then_budget(seconds: float, ceiling: Optional[float] = None) -> "Termination":
        return Termination(TerminationKind.FIRST_SOLUTION_THEN_BUDGET, seconds, ceiling)

    @staticmethod
    def for_budget(budget: Budget) -> "Termination":
        """Termination a benchmark budget is run under."""
        if budget.kind is BudgetKind.ITERATIONS:
            return Termination.iteration_budget(int(budget.value))
        return Termination.first_solution_then_budget(budget.value)


class RunStatus(NamedTuple):
    best_length: float
    local_opt_count: int


class RunMonitor:
    """
    State a planner run shares with observers: its clock, its status and the
    metrics trace.

    The planner is the only writer of status, which is replaced atomically
    so that a sampling thread can read it without locking. The clock reads
    seconds, or completed iterations under an iteration budget.
    """

    def __init__(self, termination: Termination, trace_every: int = 100):
        self.termination = termination
        self.trace = MetricsTrace()
        self.status = RunStatus(math.inf, 0)
        self.iterations = 0
        self._trace_every = max(1, trace_every)
        self._started = time.perf_counter()

    def elapsed(self) -> float:
        if self.termination.counts_iterations:
            return float(self.iterations)
        return time.perf_counter() - self._started

    def expired(self) -> bool:
        elapsed = self.elapsed()
        termination = self.termination
        if termination.kind is TerminationKind.FIRST_SOLUTION_THEN_BUDGET:
            solved = math.isfinite(self.status.best_length)
            return (solved and elapsed >= termination.budget) or elapsed >= termination.limit
        return elapsed >= termination.budget

    def tick(self) -> None:
        """
        Count a completed iteration. Under an iteration budget the status is
        traced every trace_every iterations.
        """
        self.iterations += 1
        if self.termination.counts_iterations and self.iterations % self._trace_every == 0:
            self.trace.record(self.elapsed(), *self.status)

    def start(self) -> None:
        self._started = time.perf_counter()
        self.iterations = 0
        self.trace.record(0.0, *self.status)

    def update(self, best_length: float, local_opt_count: int) -> None:
        """
        Publish new status. Improvements and local optimisations are traced
        immediately.
        """
        previous = self.status
        self.status = RunStatus(best_length, local_opt_count)
        if best_length < previous.best_length or local_opt_count != previous.local_opt_count:
            self.trace.record(self.elapsed(), best_length, local_opt_count)

    def finish(self) -> None:
        self.trace.finish(self.elapsed(), *self.status)


@dataclasses.dataclass(frozen=True)
class PlanResult:
    """
    Outcome of a planner run: the best path, if any, with its trace.
    """

    path: Optional[PathSolution]
    trace: MetricsTrace
    local_opt_count: int
    first_solution_time: Optional[float]

    @property
    def solved(self) -> bool:
        return self.path is not None

    @property
    def length(self) -> float:
        return self.path.length if self.path is not None else math.inf
