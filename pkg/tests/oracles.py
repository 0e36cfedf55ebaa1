"""
Reference implementations the planner code is checked against: brute-force
neighbour search, Dijkstra over an edge list, winding-number point in
polygon, tree consistency walks and random valid graphs and paths.
"""
import heapq
import math
from typing import List, Sequence, Tuple

import numpy as np

from anyplan.graph.domain import PlanGraph, default_gamma
from anyplan.space.domain import PathSolution, distance, sample_uniform, steer
from anyplan.world.domain import Scenario, is_valid, motion_valid


def linear_distances(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.linalg.norm(points - q, axis=1)


def linear_near(points: np.ndarray, q: np.ndarray, radius: float) -> set:
    return set(np.flatnonzero(np.linalg.norm(points - q, axis=1) <= radius).tolist())


def dijkstra_costs(
    n: int, roots: Sequence[int], edges: Sequence[Tuple[int, int, float]]
) -> List[float]:
    adjacency = [[] for _ in range(n)]
    for u, v, w in edges:
        adjacency[u].append((v, w))
        adjacency[v].append((u, w))

    cost = [math.inf] * n
    queue = []
    for root in roots:
        cost[root] = 0.0
        queue.append((0.0, root))
    heapq.heapify(queue)
    while queue:
        c, u = heapq.heappop(queue)
        if c > cost[u]:
            continue
        for v, w in adjacency[u]:
            if c + w < cost[v]:
                cost[v] = c + w
                heapq.heappush(queue, (cost[v], v))
    return cost


def winding_number(point: Sequence[float], polygon: Sequence[Sequence[float]]) -> int:
    """
    Winding number of a closed polygon around a point not on its boundary.
    """
    x, y = point
    wn = 0
    for (x0, y0), (x1, y1) in zip(polygon, list(polygon[1:]) + [polygon[0]]):
        cross = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
        if y0 <= y < y1 and cross > 0:
            wn += 1
        elif y1 <= y < y0 and cross < 0:
            wn -= 1
    return wn


def tree_violations(graph: PlanGraph, tolerance: float = 1e-9) -> List[str]:
    """
    Describe every vertex whose parent walk does not end at a root within
    len(graph) steps or whose cost differs from its parent's cost plus the
    edge length.
    """
    problems = []
    roots = set(graph.roots)
    for v in range(len(graph)):
        walk, steps = v, 0
        while graph.parent(walk) is not None and steps <= len(graph):
            walk = graph.parent(walk)
            steps += 1
        if walk not in roots:
            problems.append(f"vertex {v}: parent walk does not reach a root")
            continue
        parent = graph.parent(v)
        if parent is None:
            if graph.cost(v) != 0.0:
                problems.append(f"root {v} has cost {graph.cost(v)}")
            continue
        expected = graph.cost(parent) + distance(graph.config(parent), graph.config(v))
        if abs(graph.cost(v) - expected) > tolerance:
            problems.append(f"vertex {v}: cost {graph.cost(v)} != {expected}")
    return problems


def random_graph(
    scenario: Scenario, rng: np.random.Generator, size: int, step: float, **kwargs
) -> PlanGraph:
    """
    A start tree grown by rewiring insertion of steered random samples.
    """
    graph = PlanGraph(
        [scenario.start_config], gamma=default_gamma(scenario.space), max_radius=step, **kwargs
    )
    attempts = 0
    while len(graph) < size and attempts < 50 * size:
        attempts += 1
        target = sample_uniform(scenario.space, rng)
        nearest = graph.nearest(target)
        q = steer(graph.config(nearest), target, step)
        if motion_valid(scenario, graph.config(nearest), q):
            graph.rewire_insert(q, scenario)
    return graph


def random_valid_path(
    scenario: Scenario, rng: np.random.Generator, vertices: int, step: float
) -> PathSolution:
    """
    A motion-valid random walk from the start configuration.
    """
    configs = [scenario.start_config]
    attempts = 0
    while len(configs) < vertices and attempts < 100 * vertices:
        attempts += 1
        q = steer(configs[-1], sample_uniform(scenario.space, rng), step)
        if is_valid(scenario, q) and motion_valid(scenario, configs[-1], q):
            configs.append(q)
    if len(configs) < 2:
        configs.append(configs[0])
    return PathSolution(tuple(configs))


def path_violations(path: PathSolution, scenario: Scenario) -> List[str]:
    return [
        f"segment {k} is not motion-valid"
        for k in range(len(path) - 1)
        if not motion_valid(scenario, path.configs[k], path.configs[k + 1])
    ]


def array_tree_violations(graph: PlanGraph, tolerance: float = 1e-9) -> List[str]:
    """
    tree_violations over the whole graph with array operations, cheap enough
    to run after every mutation.
    """
    parents, costs, configs = graph.parents(), graph.costs(), graph.configs()
    is_root = parents < 0
    problems = [
        f"vertex {v}: no parent but not a root"
        for v in np.flatnonzero(is_root)
        if v not in graph.roots
    ]
    problems += [
        f"root {v} has cost {costs[v]}"
        for v in np.flatnonzero(is_root & (costs != 0.0))
    ]

    linked = np.where(is_root, np.arange(len(parents)), parents)
    expected = costs[linked] + np.linalg.norm(configs - configs[linked], axis=1)
    wrong = ~is_root & (np.abs(costs - expected) > tolerance)
    problems += [
        f"vertex {v}: cost {costs[v]} != {expected[v]}" for v in np.flatnonzero(wrong)
    ]

    # pointer doubling; ceil(log2 n) + 1 rounds take every acyclic walk to its root
    ancestor = linked
    for _ in range(max(1, len(parents)).bit_length() + 1):
        ancestor = ancestor[ancestor]
    problems += [
        f"vertex {v}: parent walk does not reach a root"
        for v in np.flatnonzero(~is_root[ancestor])
    ]
    return problems
