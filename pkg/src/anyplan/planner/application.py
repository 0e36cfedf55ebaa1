"""
The anyplan.planner.application module contains the planner algorithms:
bidirectional RRTConnect, RRTConnect followed by shortcutting, multiple
restarts of that combination, the asymptotically optimal RRTConnect* and
RRTConnect* with integrated shortcutting.

Each planner runs single-threaded against a RunMonitor, which it keeps
informed of its best length and local optimisation count so that the trace
can be sampled from another thread.
"""
import logging
import math
from typing import Callable, Dict, Optional

import numpy as np
from pubsub import pub

from anyplan.event import topics
from anyplan.graph.domain import PlanGraph, default_gamma
from anyplan.planner.domain import (
    M_RRT_CONNECT_S,
    RRT_CONNECT,
    RRT_CONNECT_S,
    RRT_CONNECT_STAR,
    RRT_CONNECT_STAR_S,
    PlannerConfig,
    PlanResult,
    RunMonitor,
    Termination,
)
from anyplan.shortcut.domain import ShortcutBudget, shortcut
from anyplan.space.domain import (
    Config,
    ContractViolation,
    PathSolution,
    RandomStream,
    heuristic_cost,
    sample_informed_goals,
    sample_uniform,
    steer,
)
from anyplan.world.domain import Scenario, motion_valid

LOGGER = logging.getLogger(__name__)

# called with (tree, vertex id, best cost before the insertion)
InsertHook = Callable[[PlanGraph, int, float], None]


def planner_rng(seed: int, restart: int = 0) -> RandomStream:
    """
    Random stream of one planner restart, derived from the master seed.
    """
    return np.random.default_rng([seed, restart])


def _announce_solution(planner: str, cost: float, t: float) -> None:
    LOGGER.debug("%s found first solution of length %.6g at t=%.6g", planner, cost, t)
    pub.sendMessage(
        topics.planner.solution.found, msg_src=planner, planner=planner, cost=cost, t=t
    )


def _announce_local_opt(planner: str, before: float, after: float, count: int) -> None:
    LOGGER.debug("%s local optimisation %s: %.6g -> %.6g", planner, count, before, after)
    pub.sendMessage(
        topics.planner.localopt.applied,
        msg_src=planner,
        planner=planner,
        before=before,
        after=after,
        count=count,
    )


def _graph(roots, scenario: Scenario, cfg: PlannerConfig) -> PlanGraph:
    gamma = cfg.gamma_override or default_gamma(scenario.space)
    return PlanGraph(roots, gamma=gamma, max_radius=cfg.range)


def _splice(
    start_tree: PlanGraph, start_vertex: int, goal_tree: PlanGraph, goal_vertex: int
) -> PathSolution:
    """
    Join a start-tree branch and a goal-tree branch that meet at the same
    configuration into one start-to-goal path.
    """
    head = [start_tree.config(v) for v in reversed(start_tree.branch(start_vertex))]
    tail = [goal_tree.config(v) for v in goal_tree.branch(goal_vertex)[1:]]
    configs = head + tail
    if len(configs) < 2:
        configs = configs * 2
    return PathSolution(tuple(configs))


# RRTConnect ----------------------------------------------------------------


def _extend(tree: PlanGraph, target: Config, scenario: Scenario, step: float) -> Optional[int]:
    nearest = tree.nearest(target)
    origin = tree.config(nearest)
    q_new = steer(origin, target, step)
    if not motion_valid(scenario, origin, q_new):
        return None
    return tree.add_vertex(q_new, nearest)


def _connect(tree: PlanGraph, target: Config, scenario: Scenario, step: float) -> Optional[int]:
    """
    Extend tree towards target until it is reached (return the vertex at
    target) or blocked (return None).
    """
    while True:
        vertex = _extend(tree, target, scenario, step)
        if vertex is None:
            return None
        if np.array_equal(tree.config(vertex), target):
            return vertex


def _connect_once(
    scenario: Scenario, cfg: PlannerConfig, rng: RandomStream, monitor: RunMonitor
) -> Optional[PathSolution]:
    """
    Grow a start tree and a goal tree with alternating extend and connect
    steps until they meet or the monitor expires.
    """
    start_tree = _graph([scenario.start_config], scenario, cfg)
    goal_tree = _graph(list(scenario.goal_configs), scenario, cfg)
    active, other = start_tree, goal_tree
    while not monitor.expired():
        q_rand = sample_uniform(scenario.space, rng)
        vertex = _extend(active, q_rand, scenario, cfg.range)
        if vertex is not None:
            reached = _connect(other, active.config(vertex), scenario, cfg.range)
            if reached is not None:
                monitor.tick()
                if active is start_tree:
                    return _splice(start_tree, vertex, goal_tree, reached)
                return _splice(start_tree, reached, goal_tree, vertex)
        active, other = other, active
        monitor.tick()
    return None


def _finish(
    monitor: RunMonitor, path: Optional[PathSolution], local_opt_count: int
) -> PlanResult:
    monitor.finish()
    return PlanResult(
        path=path,
        trace=monitor.trace,
        local_opt_count=local_opt_count,
        first_solution_time=monitor.trace.first_solution_time,
    )


def rrt_connect(
    scenario: Scenario,
    cfg: PlannerConfig,
    termination: Termination,
    monitor: Optional[RunMonitor] = None,
) -> PlanResult:
    """
    Bidirectional RRT. Returns the first path found; the path is absent if
    the trees did not meet before termination.
    """
    monitor = monitor or RunMonitor(termination)
    monitor.start()
    path = _connect_once(scenario, cfg, planner_rng(cfg.seed), monitor)
    if path is not None:
        monitor.update(path.length, 0)
        _announce_solution(RRT_CONNECT, path.length, monitor.elapsed())
    return _finish(monitor, path, 0)


def rrt_connect_s(
    scenario: Scenario,
    cfg: PlannerConfig,
    termination: Termination,
    monitor: Optional[RunMonitor] = None,
) -> PlanResult:
    """
    One RRTConnect run followed by one shortcut call.
    """
    scf = cfg.require_scf(RRT_CONNECT_S)
    monitor = monitor or RunMonitor(termination)
    monitor.start()
    rng = planner_rng(cfg.seed)
    path = _connect_once(scenario, cfg, rng, monitor)
    if path is None:
        return _finish(monitor, None, 0)

    monitor.update(path.length, 0)
    _announce_solution(RRT_CONNECT_S, path.length, monitor.elapsed())
    optimised = shortcut(path, scenario, ShortcutBudget.for_path(scf, path), rng)
    monitor.update(optimised.length, 1)
    _announce_local_opt(RRT_CONNECT_S, path.length, optimised.length, 1)
    return _finish(monitor, optimised, 1)


def m_rrt_connect_s(
    scenario: Scenario,
    cfg: PlannerConfig,
    termination: Termination,
    monitor: Optional[RunMonitor] = None,
) -> PlanResult:
    """
    Multiple restarts of RRTConnect with shortcutting, keeping the shortest
    path. Restart k draws from the stream seeded by (seed, k). A restart cut
    short by termination is discarded.
    """
    scf = cfg.require_scf(M_RRT_CONNECT_S)
    monitor = monitor or RunMonitor(termination)
    monitor.start()
    best: Optional[PathSolution] = None
    restarts = 0
    while not monitor.expired():
        rng = planner_rng(cfg.seed, restarts)
        path = _connect_once(scenario, cfg, rng, monitor)
        if path is None:
            break
        optimised = shortcut(path, scenario, ShortcutBudget.for_path(scf, path), rng)
        restarts += 1
        before = best.length if best is not None else math.inf
        if optimised.length < before:
            if best is None:
                _announce_solution(M_RRT_CONNECT_S, optimised.length, monitor.elapsed())
            best = optimised
        monitor.update(best.length, restarts)
        _announce_local_opt(M_RRT_CONNECT_S, path.length, optimised.length, restarts)

    LOGGER.debug("%s completed %s restarts", M_RRT_CONNECT_S, restarts)
    return _finish(monitor, best, restarts)


# RRTConnect* ---------------------------------------------------------------


class ConnectStarState:
    """
    Planner state of RRTConnect*: an RRT*-rewired start tree, an RRT*-rewired
    goal tree rooted at every goal, and the random stream.

    Whenever the trees meet, the connecting path is inserted into the start
    tree, so the best solution is always answered from the start tree.
    """

    def __init__(
        self,
        scenario: Scenario,
        cfg: PlannerConfig,
        rng: Optional[RandomStream] = None,
        on_insert: Optional[InsertHook] = None,
    ):
        self.scenario = scenario
        self.cfg = cfg
        self.rng = rng if rng is not None else planner_rng(cfg.seed)
        self.on_insert = on_insert
        self.start_tree = _graph([scenario.start_config], scenario, cfg)
        self.goal_tree = _graph(list(scenario.goal_configs), scenario, cfg)
        self.forward = True
        self.iterations = 0
        self.rejected = 0

    @property
    def best_cost(self) -> float:
        return self.start_tree.snapshot.best_cost

    def best_path(self) -> Optional[PathSolution]:
        return self.start_tree.best_path()

    def _sample(self, c_best: float) -> Config:
        if self.cfg.heuristics.informed_sampling and math.isfinite(c_best):
            return sample_informed_goals(
                self.scenario.start_config,
                self.scenario.goal_configs,
                c_best,
                self.scenario.space,
                self.rng,
            )
        return sample_uniform(self.scenario.space, self.rng)

    def _rejects(self, x: Config, c_best: float) -> bool:
        return (
            self.cfg.heuristics.sample_rejection
            and math.isfinite(c_best)
            and heuristic_cost(self.scenario.start_config, self.scenario.goal_configs, x)
            >= c_best
        )

    def _insert(self, tree: PlanGraph, target: Config) -> Optional[int]:
        """
        Steer the nearest vertex of tree towards target and rewire-insert the
        result. None if the step is rejected or blocked.
        """
        c_best = self.best_cost
        nearest = tree.nearest(target)
        origin = tree.config(nearest)
        q_new = steer(origin, target, self.cfg.range)
        if self._rejects(q_new, c_best):
            self.rejected += 1
            return None
        if not motion_valid(self.scenario, origin, q_new):
            return None
        vertex = tree.rewire_insert(q_new, self.scenario)
        if self.on_insert is not None:
            self.on_insert(tree, vertex, c_best)
        return vertex

    def iterate(self) -> None:
        """
        One sample, extend, connect and rewire cycle. The roles of the two
        trees swap after every iteration.
        """
        active, other = (
            (self.start_tree, self.goal_tree)
            if self.forward
            else (self.goal_tree, self.start_tree)
        )
        self.forward = not self.forward
        self.iterations += 1

        c_best = self.best_cost
        x = self._sample(c_best)
        if self._rejects(x, c_best):
            self.rejected += 1
            return

        vertex = self._insert(active, x)
        if vertex is None:
            return
        target = active.config(vertex)
        while True:
            reached = self._insert(other, target)
            if reached is None:
                return
            if np.array_equal(other.config(reached), target):
                break

        if active is self.start_tree:
            path = _splice(self.start_tree, vertex, self.goal_tree, reached)
        else:
            path = _splice(self.start_tree, reached, self.goal_tree, vertex)
        if path.length < self.best_cost:
            self.start_tree.insert_path(path, self.scenario)


def rrt_connect_star_iteration(state: ConnectStarState) -> ConnectStarState:
    """
    Advance an RRTConnect* state by one iteration.
    """
    state.iterate()
    return state


def _run_connect_star(
    planner: str,
    scenario: Scenario,
    cfg: PlannerConfig,
    monitor: RunMonitor,
    opt_threshold: Optional[float],
    state: Optional[ConnectStarState] = None,
) -> PlanResult:
    state = state or ConnectStarState(scenario, cfg)
    scf = cfg.require_scf(planner) if opt_threshold is not None else None
    last_optimised = math.inf
    local_opts = 0
    monitor.start()
    while not monitor.expired():
        solved = math.isfinite(state.best_cost)
        rrt_connect_star_iteration(state)
        c_best = state.best_cost
        if not solved and math.isfinite(c_best):
            _announce_solution(planner, c_best, monitor.elapsed())

        if opt_threshold is not None and math.isfinite(c_best):
            # an infinite last optimised cost counts as a ratio of one
            ratio = (
                1.0
                if math.isinf(last_optimised)
                else (last_optimised - c_best) / last_optimised
            )
            if ratio > opt_threshold:
                best = state.best_path()
                optimised = shortcut(
                    best, scenario, ShortcutBudget.for_path(scf, best), state.rng
                )
                state.start_tree.insert_path(optimised, scenario)
                local_opts += 1
                last_optimised = c_best
                _announce_local_opt(planner, c_best, state.best_cost, local_opts)

        monitor.update(state.best_cost, local_opts)
        monitor.tick()

    LOGGER.debug(
        "%s stopped after %s iterations (%s rejected), %s vertices, best %.6g",
        planner,
        state.iterations,
        state.rejected,
        len(state.start_tree) + len(state.goal_tree),
        state.best_cost,
    )
    return _finish(monitor, state.best_path(), local_opts)


def rrt_connect_star(
    scenario: Scenario,
    cfg: PlannerConfig,
    termination: Termination,
    monitor: Optional[RunMonitor] = None,
    state: Optional[ConnectStarState] = None,
) -> PlanResult:
    """
    Anytime RRTConnect* run until termination.
    """
    monitor = monitor or RunMonitor(termination)
    return _run_connect_star(RRT_CONNECT_STAR, scenario, cfg, monitor, None, state)


def rrt_connect_star_s(
    scenario: Scenario,
    cfg: PlannerConfig,
    termination: Termination,
    monitor: Optional[RunMonitor] = None,
    state: Optional[ConnectStarState] = None,
) -> PlanResult:
    """
    RRTConnect* with integrated shortcutting. Whenever the best cost has
    improved on the last optimised cost by more than cfg.opt_threshold (as a
    fraction of the last optimised cost), the best path is shortcut and
    inserted back into the start tree.
    """
    if cfg.opt_threshold is None:
        raise ContractViolation(f"{RRT_CONNECT_STAR_S} needs an opt_threshold")
    monitor = monitor or RunMonitor(termination)
    return _run_connect_star(
        RRT_CONNECT_STAR_S, scenario, cfg, monitor, cfg.opt_threshold, state
    )


Planner = Callable[..., PlanResult]

PLANNERS: Dict[str, Planner] = {
    RRT_CONNECT: rrt_connect,
    RRT_CONNECT_S: rrt_connect_s,
    M_RRT_CONNECT_S: m_rrt_connect_s,
    RRT_CONNECT_STAR: rrt_connect_star,
    RRT_CONNECT_STAR_S: rrt_connect_star_s,
}


def plan(
    planner: str,
    scenario: Scenario,
    cfg: PlannerConfig,
    termination: Termination,
    monitor: Optional[RunMonitor] = None,
) -> PlanResult:
    """
    Run the named planner.

    :raises KeyError: for an unknown planner name
    """
    if planner not in PLANNERS:
        raise KeyError(f"Unknown planner: {planner}")
    return PLANNERS[planner](scenario, cfg, termination, monitor=monitor)
