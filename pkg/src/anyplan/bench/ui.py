"""
The anyplan.bench.ui module contains the command line interface of the
benchmark harness:

  plan run        run planners over a scenario suite and write trace CSV
  plan summarize  aggregate trace CSV into summary CSV
  plan validate   check a scenario document
"""
import argparse
import dataclasses
import logging
import sys
from typing import List, Tuple

from pubsub import pub

from anyplan import FEATURES
from anyplan.bench.application import (
    emit_csv,
    read_traces_csv,
    run_benchmark,
    summarize,
)
from anyplan.bench.domain import Budget, BudgetKind, Summary, parse_budget
from anyplan.event import topics
from anyplan.planner.domain import PLANNER_NAMES, Heuristics, PlannerConfig, make_preset
from anyplan.world.domain import Scenario
from anyplan.world.scenario import dump_scenario, load_suite, read_scenario

LOGGER = logging.getLogger(__name__)

PRESET_CHOICES = ("vine", "cubicle", "custom")


class UsageError(Exception):
    """
    Raised for malformed command lines.
    """


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _budget(text: str) -> Budget:
    try:
        return parse_budget(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plan", description="Sampling-based planner benchmark harness")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = commands.add_parser("run", help="run a benchmark and write trace CSV")
    run.add_argument("--suite", help="directory of scenario files (default: packaged suite)")
    run.add_argument(
        "--scenario", action="append", default=[], help="scenario file; repeatable"
    )
    run.add_argument(
        "--planner",
        action="append",
        default=[],
        help=f"planner name, repeatable, or 'all': {', '.join(PLANNER_NAMES)}",
    )
    run.add_argument("--preset", choices=PRESET_CHOICES, default="cubicle")
    run.add_argument(
        "--budget",
        action="append",
        type=_budget,
        default=[],
        help="planning budget such as 3s, 3 or 2000it; repeatable",
    )
    run.add_argument("--seeds", type=int, default=1, help="number of seeds per run")
    run.add_argument("--seed-base", type=int, default=0, help="first seed")
    run.add_argument("--out", required=True, help="trace CSV destination")
    run.add_argument("--summary", help="also write summary CSV here")
    run.add_argument("--workers", type=int, help="worker processes")
    run.add_argument("--range", type=float, default=0.5, help="steering range (custom)")
    run.add_argument("--scf", type=float, default=3.0, help="shortcut count factor (custom)")
    run.add_argument(
        "--opt-threshold", type=float, default=0.1, help="local optimisation threshold (custom)"
    )
    run.add_argument("--gamma", type=float, help="rewiring constant override")
    run.add_argument("--no-informed", action="store_true", help="disable informed sampling")
    run.add_argument("--no-rejection", action="store_true", help="disable sample rejection")

    summary = commands.add_parser("summarize", help="summarise trace CSV")
    summary.add_argument("--in", dest="source", required=True, help="trace CSV")
    summary.add_argument("--out", required=True, help="summary CSV destination")
    summary.add_argument("--speed", type=float, help="execution speed")
    summary.add_argument(
        "--seconds-per-iteration", type=float, help="planning seconds per iteration"
    )
    summary.add_argument("--at", type=float, help="summarise the traces as they stood at t")

    validate = commands.add_parser("validate", help="validate a scenario file")
    validate.add_argument("file", help="scenario file")
    validate.add_argument(
        "--normalise", action="store_true", help="print the scenario in normal form"
    )
    return parser


def planner_configs(args: argparse.Namespace) -> List[Tuple[str, PlannerConfig]]:
    """
    The (name, config) pairs selected on the command line.

    :raises KeyError: for an unknown planner name
    """
    names = args.planner or ["all"]
    if "all" in names:
        names = list(PLANNER_NAMES)
    for name in names:
        if name not in PLANNER_NAMES:
            raise KeyError(f"Unknown planner: {name}")

    heuristics = Heuristics(
        informed_sampling=not args.no_informed, sample_rejection=not args.no_rejection
    )
    configs = []
    for name in dict.fromkeys(names):
        if args.preset == "custom":
            cfg = PlannerConfig(range=args.range, scf=args.scf, opt_threshold=args.opt_threshold)
        else:
            cfg = make_preset(args.preset, name)
        configs.append(
            (name, dataclasses.replace(cfg, heuristics=heuristics, gamma_override=args.gamma))
        )
    return configs


def scenarios(args: argparse.Namespace) -> List[Scenario]:
    if args.scenario:
        return [read_scenario(path) for path in args.scenario]
    return load_suite(args.suite)


def _log_progress(topic=pub.AUTO_TOPIC, **kwargs):
    request = kwargs.get("request")
    stage = topic.name.rsplit(".", 1)[-1]
    if stage == "failed":
        LOGGER.error("%s failed: %s", request, kwargs.get("error"))
    elif stage == "complete":
        LOGGER.info("%s complete (%s samples)", request, len(kwargs["trace"]))
    else:
        LOGGER.debug("%s started on %s", request, kwargs.get("msg_src") or "main")


def run(args: argparse.Namespace) -> int:
    suite = scenarios(args)
    planners = planner_configs(args)
    budgets = args.budget or [Budget(BudgetKind.SECONDS, b) for b in FEATURES.default_budgets]
    if args.seeds < 1:
        raise UsageError(f"--seeds must be at least 1, got {args.seeds}")

    pub.subscribe(_log_progress, topics.bench.run)
    try:
        traces = run_benchmark(
            suite, planners, budgets, args.seeds, seed_base=args.seed_base, workers=args.workers
        )
    finally:
        pub.unsubscribe(_log_progress, topics.bench.run)

    emit_csv(traces, args.out)
    if args.summary:
        emit_csv(summarize(traces), args.summary)
    return 0


def summarize_command(args: argparse.Namespace) -> int:
    traces = read_traces_csv(args.source)
    if not traces:
        LOGGER.warning("%s holds no traces", args.source)
        emit_csv(Summary(()), args.out)
        return 0
    summary = summarize(
        traces,
        speed=args.speed,
        seconds_per_iteration=args.seconds_per_iteration,
        at=args.at,
    )
    emit_csv(summary, args.out)
    return 0


def validate(args: argparse.Namespace) -> int:
    scenario = read_scenario(args.file)
    if args.normalise:
        sys.stdout.write(dump_scenario(scenario) + "\n")
    LOGGER.info("%s: scenario %s is valid", args.file, scenario.name)
    return 0


COMMANDS = {"run": run, "summarize": summarize_command, "validate": validate}
