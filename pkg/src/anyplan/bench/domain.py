"""
The anyplan.bench.domain module contains the benchmark measurement
entities: the anytime metrics trace recorded during a planner run, budgets,
execution and cycle time models, and summary statistics.
"""
import dataclasses
import enum
import logging
import math
import re
import threading
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from anyplan.space.domain import ContractViolation, PathSolution

LOGGER = logging.getLogger(__name__)

# two-sided 95% normal quantile
CI95_Z = 1.96


class TraceSample(NamedTuple):
    t: float
    best_length: float
    local_opt_count: int


class MetricsTrace:
    """
    Time series of a run's best solution length and local optimisation
    count. t is seconds since the run started, or completed iterations for
    iteration budgets.

    The trace may be written from the planner thread and a sampling thread
    at once. Samples that arrive late (t earlier than the last sample) are
    dropped, a sample at the same t replaces the previous one, and a finite
    best length may never increase.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._samples: List[TraceSample] = []
        self.first_solution_time: Optional[float] = None
        self.final_length: float = math.inf
        self.final_local_opt_count: int = 0

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def samples(self) -> Tuple[TraceSample, ...]:
        with self._lock:
            return tuple(self._samples)

    @property
    def solved(self) -> bool:
        return self.first_solution_time is not None

    def record(self, t: float, best_length: float, local_opt_count: int) -> bool:
        """
        Append a sample.

        :return: False if the sample arrived late and was dropped
        :raises ContractViolation: if a finite best length would increase
        """
        sample = TraceSample(float(t), float(best_length), int(local_opt_count))
        with self._lock:
            previous = self._samples[-1] if self._samples else None
            if previous is not None and sample.t < previous.t:
                return False
            if previous is not None and sample.best_length > previous.best_length:
                raise ContractViolation(
                    f"Best length increased from {previous.best_length} to "
                    f"{sample.best_length} at t={sample.t}"
                )
            if previous is not None and sample.t == previous.t:
                self._samples[-1] = sample
            else:
                self._samples.append(sample)
            if self.first_solution_time is None and math.isfinite(sample.best_length):
                self.first_solution_time = sample.t
        return True

    def finish(self, t: float, best_length: float, local_opt_count: int) -> None:
        """
        Record the final state of the run.
        """
        self.record(t, best_length, local_opt_count)
        self.final_length = float(best_length)
        self.final_local_opt_count = int(local_opt_count)

    def value_at(self, t: float) -> Tuple[float, int]:
        """
        The best length and local optimisation count in force at time t.
        Times before the first solution take the first solution's values;
        an unsolved run reports an infinite length.
        """
        with self._lock:
            samples = list(self._samples)
        if not samples:
            return math.inf, 0

        current = samples[0]
        for sample in samples:
            if sample.t > t:
                break
            current = sample
        if math.isinf(current.best_length):
            first = next((s for s in samples if math.isfinite(s.best_length)), None)
            if first is not None:
                return first.best_length, first.local_opt_count
        return current.best_length, current.local_opt_count


class BudgetKind(enum.Enum):
    SECONDS = "s"
    ITERATIONS = "it"


_BUDGET_PATTERN = re.compile(r"^\s*(?P<value>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(?P<unit>s|it)?\s*$")


@dataclasses.dataclass(frozen=True)
class Budget:
    """
    A planning budget: wall-clock seconds or a count of iterations.
    """

    kind: BudgetKind
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ContractViolation(f"Budget must be positive: {self.value}")

    @property
    def label(self) -> str:
        if self.kind is BudgetKind.ITERATIONS:
            return f"{int(self.value)}it"
        return f"{self.value:g}s"

    @property
    def sort_key(self) -> Tuple[str, float]:
        return self.kind.value, float(self.value)

    def seconds(self, seconds_per_iteration: float) -> float:
        """Planning time the budget stands for."""
        if self.kind is BudgetKind.ITERATIONS:
            return self.value * seconds_per_iteration
        return self.value


def parse_budget(text: str) -> Budget:
    """
    Parse '3s', '3' (seconds) or '2000it'.

    :raises ValueError: on malformed text
    """
    match = _BUDGET_PATTERN.match(text)
    if match is None:
        raise ValueError(f"Malformed budget: {text!r}")
    value = float(match.group("value"))
    if match.group("unit") == "it":
        if value != int(value):
            raise ValueError(f"Iteration budget must be a whole number: {text!r}")
        return Budget(BudgetKind.ITERATIONS, int(value))
    return Budget(BudgetKind.SECONDS, value)


def execution_time(path: PathSolution, speed: float) -> float:
    """
    Seconds to traverse the path at a constant speed in configuration units
    per second.
    """
    return execution_time_for_length(path.length, speed)


def execution_time_for_length(length: float, speed: float) -> float:
    if not speed > 0:
        raise ContractViolation(f"Execution speed must be positive: {speed}")
    return length / speed


def cycle_time(
    budget: float, first_solution_time: Optional[float], execution: float
) -> Optional[float]:
    """
    Planning time plus execution time. Planning stops at the budget, or at
    the first solution if that comes later. None for a run without a
    solution.
    """
    if first_solution_time is None:
        return None
    if budget < 0 or first_solution_time < 0 or execution < 0:
        raise ContractViolation("Cycle time inputs must be non-negative")
    return max(budget, first_solution_time) + execution


class Statistic(NamedTuple):
    mean: Optional[float]
    ci95: Optional[float]


def statistic(values: Sequence[float]) -> Statistic:
    """
    Mean and 95% confidence half-width (1.96 standard errors). The mean of
    an empty sample and the interval of a sample of one are absent.
    """
    if not len(values):
        return Statistic(None, None)
    data = np.sort(np.asarray(values, dtype=np.float64))
    mean = float(data.mean())
    if len(data) < 2:
        return Statistic(mean, None)
    stderr = float(data.std(ddof=1)) / math.sqrt(len(data))
    return Statistic(mean, CI95_Z * stderr)


@dataclasses.dataclass(frozen=True)
class RunOutcome:
    """
    The measured quantities of one finished run.
    """

    scenario: str
    planner: str
    budget: str
    seed: int
    length: float
    first_solution_time: Optional[float]
    local_opt_count: int

    @property
    def solved(self) -> bool:
        return self.first_solution_time is not None and math.isfinite(self.length)


@dataclasses.dataclass(frozen=True)
class SummaryRow:
    """
    Aggregate statistics for one (scenario, planner, budget) group. Means
    are over successful runs only; success_rate counts the failures.
    """

    scenario: str
    planner: str
    budget: str
    n_success: int
    n_total: int
    length: Statistic
    execution: Statistic
    cycle: Statistic
    local_opts: Statistic

    @property
    def success_rate(self) -> float:
        return self.n_success / self.n_total if self.n_total else 0.0


@dataclasses.dataclass(frozen=True)
class Summary:
    rows: Tuple[SummaryRow, ...]

    def row(self, scenario: str, planner: str, budget: str) -> SummaryRow:
        for row in self.rows:
            if (row.scenario, row.planner, row.budget) == (scenario, planner, budget):
                return row
        raise KeyError((scenario, planner, budget))
