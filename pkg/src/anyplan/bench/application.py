"""
The anyplan.bench.application module runs planner benchmarks: it expands a
suite, planner list, budgets and seeds into run requests, executes each run
with a sampled metrics trace, aggregates the traces into summary statistics
and reads and writes the CSV formats.
"""
import csv
import dataclasses
import itertools
import logging
import math
import threading
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from pubsub import pub

from anyplan import FEATURES
from anyplan.bench.domain import (
    Budget,
    BudgetKind,
    MetricsTrace,
    RunOutcome,
    Summary,
    SummaryRow,
    cycle_time,
    execution_time_for_length,
    parse_budget,
    statistic,
)
from anyplan.event import topics
from anyplan.planner.application import plan
from anyplan.planner.domain import PlannerConfig, RunMonitor, Termination
from anyplan.world.domain import Scenario

LOGGER = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "scenario",
    "planner",
    "seed",
    "budget",
    "t",
    "best_length",
    "local_opt_count",
    "first_solution_time",
)

SUMMARY_COLUMNS = (
    "scenario",
    "planner",
    "budget",
    "n_success",
    "n_total",
    "mean_length",
    "ci95_length",
    "mean_exec",
    "ci95_exec",
    "mean_cycle",
    "ci95_cycle",
    "mean_local_opts",
)


@dataclasses.dataclass(frozen=True)
class RunRequest:
    """
    One benchmark run: a planner on a scenario with a budget and a seed.
    """

    scenario: Scenario
    planner: str
    config: PlannerConfig
    budget: Budget
    seed: int

    @property
    def key(self) -> Tuple[str, str, Tuple[str, float], int]:
        return self.scenario.name, self.planner, self.budget.sort_key, self.seed

    def __str__(self):
        return f"{self.planner} on {self.scenario.name} ({self.budget.label}, seed {self.seed})"


@dataclasses.dataclass(frozen=True)
class BenchTrace:
    """
    The metrics trace of a finished run with the labels that identify it.
    """

    scenario: str
    planner: str
    seed: int
    budget: Budget
    trace: MetricsTrace

    @property
    def key(self) -> Tuple[str, str, Tuple[str, float], int]:
        return self.scenario, self.planner, self.budget.sort_key, self.seed


class TraceSampler(threading.Thread):
    """
    Records a run's status into its trace at a fixed rate from a separate
    thread. The clock is read before the status so a sample can never carry
    a value newer than its timestamp.
    """

    def __init__(self, monitor: RunMonitor, hz: float):
        super().__init__(name="TraceSampler", daemon=True)
        self._monitor = monitor
        self._period = 1.0 / hz
        self._stop_event = threading.Event()

    def run(self) -> None:
        while not self._stop_event.wait(self._period):
            t = self._monitor.elapsed()
            best_length, local_opt_count = self._monitor.status
            self._monitor.trace.record(t, best_length, local_opt_count)

    def stop(self) -> None:
        self._stop_event.set()
        self.join()


def expand_requests(
    suite: Sequence[Scenario],
    planners: Sequence[Tuple[str, PlannerConfig]],
    budgets: Sequence[Budget],
    seeds: int,
    seed_base: int = 0,
) -> List[RunRequest]:
    """
    Every (scenario, planner, budget, seed) combination, in key order.

    :raises ValueError: if any input is empty
    """
    if not suite or not planners or not budgets or seeds < 1:
        raise ValueError("A benchmark needs scenarios, planners, budgets and seeds")
    requests = [
        RunRequest(scenario, name, cfg.with_seed(seed), budget, seed)
        for scenario, (name, cfg), budget, seed in itertools.product(
            suite, planners, budgets, range(seed_base, seed_base + seeds)
        )
    ]
    return sorted(requests, key=lambda r: r.key)


def execute_run(request: RunRequest, msg_src: Optional[str] = None) -> BenchTrace:
    """
    Run one request. Wall-clock budgets are traced by a sampling thread at
    the configured rate; iteration budgets are traced by the planner itself.
    """
    pub.sendMessage(topics.bench.run.started, msg_src=msg_src, request=request)
    termination = Termination.for_budget(request.budget)
    monitor = RunMonitor(termination, trace_every=FEATURES.trace_every_iterations)

    sampler = None
    if not termination.counts_iterations:
        sampler = TraceSampler(monitor, FEATURES.trace_hz)
        sampler.start()
    try:
        result = plan(request.planner, request.scenario, request.config, termination, monitor)
    except Exception as e:
        pub.sendMessage(topics.bench.run.failed, msg_src=msg_src, request=request, error=e)
        raise
    finally:
        if sampler is not None:
            sampler.stop()

    LOGGER.info(
        "%s: length %.6g, %s local optimisations",
        request,
        result.length,
        result.local_opt_count,
    )
    pub.sendMessage(
        topics.bench.run.complete, msg_src=msg_src, request=request, trace=result.trace
    )
    return BenchTrace(
        scenario=request.scenario.name,
        planner=request.planner,
        seed=request.seed,
        budget=request.budget,
        trace=result.trace,
    )


def run_benchmark(
    suite: Sequence[Scenario],
    planners: Sequence[Tuple[str, PlannerConfig]],
    budgets: Sequence[Budget],
    seeds: int,
    seed_base: int = 0,
    workers: Optional[int] = None,
) -> List[BenchTrace]:
    """
    Run every (scenario, planner, budget, seed) combination and return the
    traces in (scenario, planner, budget, seed) order, however many workers
    ran them.
    """
    requests = expand_requests(suite, planners, budgets, seeds, seed_base)
    workers = FEATURES.workers if workers is None else workers
    LOGGER.info("Running %s benchmark runs on %s worker(s)", len(requests), workers)

    if workers > 1 and len(requests) > 1:
        # anyplan.bench.workers imports this module
        from anyplan.bench.workers import WorkerPool

        with WorkerPool(min(workers, len(requests))) as pool:
            traces = pool.run(requests)
    else:
        traces = [execute_run(request) for request in requests]
    return sorted(traces, key=lambda t: t.key)


# -- aggregation


def outcome(trace: BenchTrace, at: Optional[float] = None) -> RunOutcome:
    """
    The measured quantities of a run, either final or as they stood at time
    at (back-filled from the first solution for earlier times).
    """
    if at is None:
        length, local_opts = trace.trace.final_length, trace.trace.final_local_opt_count
    else:
        length, local_opts = trace.trace.value_at(at)
    return RunOutcome(
        scenario=trace.scenario,
        planner=trace.planner,
        budget=trace.budget.label,
        seed=trace.seed,
        length=length,
        first_solution_time=trace.trace.first_solution_time,
        local_opt_count=local_opts,
    )


def summarize(
    traces: Iterable[BenchTrace],
    speed: Optional[float] = None,
    seconds_per_iteration: Optional[float] = None,
    at: Optional[float] = None,
) -> Summary:
    """
    Per (scenario, planner, budget) means and 95% confidence intervals of
    length, execution time, cycle time and local optimisation count over the
    successful runs, with success counts.

    Iteration budgets and first solution times measured in iterations are
    converted to planning seconds with seconds_per_iteration.

    :raises ValueError: if there are no traces
    """
    speed = FEATURES.execution_speed if speed is None else speed
    seconds_per_iteration = (
        FEATURES.seconds_per_iteration
        if seconds_per_iteration is None
        else seconds_per_iteration
    )
    groups: Dict[Tuple, List[BenchTrace]] = {}
    for trace in traces:
        groups.setdefault((trace.scenario, trace.planner, trace.budget.sort_key), []).append(trace)
    if not groups:
        raise ValueError("Cannot summarise an empty trace list")

    rows = []
    for key in sorted(groups):
        members = groups[key]
        budget = members[0].budget
        outcomes = [outcome(t, at) for t in members]
        successes = [o for o in outcomes if o.solved]

        lengths = [o.length for o in successes]
        executions = [execution_time_for_length(length, speed) for length in lengths]
        planning = budget.seconds(seconds_per_iteration)
        first_solution_scale = (
            seconds_per_iteration if budget.kind is BudgetKind.ITERATIONS else 1.0
        )
        cycles = [
            cycle_time(planning, o.first_solution_time * first_solution_scale, e)
            for o, e in zip(successes, executions)
        ]
        rows.append(
            SummaryRow(
                scenario=key[0],
                planner=key[1],
                budget=budget.label,
                n_success=len(successes),
                n_total=len(outcomes),
                length=statistic(lengths),
                execution=statistic(executions),
                cycle=statistic(cycles),
                local_opts=statistic([o.local_opt_count for o in successes]),
            )
        )
    return Summary(tuple(rows))


# -- CSV


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".9g")
    return str(value)


def _trace_rows(traces: Iterable[BenchTrace]):
    for bench_trace in traces:
        first = bench_trace.trace.first_solution_time
        for sample in bench_trace.trace.samples:
            yield (
                bench_trace.scenario,
                bench_trace.planner,
                bench_trace.seed,
                bench_trace.budget.label,
                sample.t,
                sample.best_length,
                sample.local_opt_count,
                first,
            )


def _summary_rows(summary: Summary):
    for row in summary.rows:
        yield (
            row.scenario,
            row.planner,
            row.budget,
            row.n_success,
            row.n_total,
            row.length.mean,
            row.length.ci95,
            row.execution.mean,
            row.execution.ci95,
            row.cycle.mean,
            row.cycle.ci95,
            row.local_opts.mean,
        )


def write_csv(data: Union[Summary, Iterable[BenchTrace]], stream: TextIO) -> None:
    """
    Write a summary or a list of traces as CSV with a header row.
    """
    writer = csv.writer(stream, lineterminator="\n")
    if isinstance(data, Summary):
        writer.writerow(SUMMARY_COLUMNS)
        rows = _summary_rows(data)
    else:
        writer.writerow(TRACE_COLUMNS)
        rows = _trace_rows(data)
    for row in rows:
        writer.writerow([_format(v) for v in row])


def emit_csv(data: Union[Summary, Iterable[BenchTrace]], destination: str) -> None:
    """
    Write a summary or a list of traces to a CSV file.

    :raises OSError: if the destination cannot be written; the error names
        the path
    """
    with open(destination, "w", newline="", encoding="utf-8") as fh:
        write_csv(data, fh)
    LOGGER.info("Wrote %s", destination)


def _optional_float(text: str) -> Optional[float]:
    return float(text) if text else None


def read_traces(stream: TextIO) -> List[BenchTrace]:
    """
    Parse trace CSV back into traces, one per (scenario, planner, budget,
    seed), in file order of first appearance.

    :raises ValueError: if the header or a row is malformed
    """
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
        raise ValueError(f"Not a trace CSV, header is {reader.fieldnames}")

    traces: Dict[Tuple, BenchTrace] = {}
    for line, row in enumerate(reader, start=2):
        try:
            budget = parse_budget(row["budget"])
            ident = (row["scenario"], row["planner"], budget.sort_key, int(row["seed"]))
            if ident not in traces:
                traces[ident] = BenchTrace(
                    scenario=row["scenario"],
                    planner=row["planner"],
                    seed=int(row["seed"]),
                    budget=budget,
                    trace=MetricsTrace(),
                )
            trace = traces[ident].trace
            trace.record(float(row["t"]), float(row["best_length"]), int(row["local_opt_count"]))
            trace.first_solution_time = _optional_float(row["first_solution_time"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"line {line}: {e}") from e

    for bench_trace in traces.values():
        samples = bench_trace.trace.samples
        if samples:
            bench_trace.trace.final_length = samples[-1].best_length
            bench_trace.trace.final_local_opt_count = samples[-1].local_opt_count
    return list(traces.values())


def read_traces_csv(path: str) -> List[BenchTrace]:
    """
    Read a trace CSV file written by emit_csv.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return read_traces(fh)
