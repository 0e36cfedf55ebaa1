"""
The anyplan.graph.domain module contains the planner graph: a forest of
vertices with parent links and cost-to-come, nearest and near queries,
RRT*-style rewiring insertion and path insertion.

Every connection the graph has validated is kept in an examined-edge log.
Cost decreases are propagated over that log, so after any mutation each
vertex's cost-to-come is its shortest-path distance over the logged edges and
the parent links form a shortest-path tree.
"""
import dataclasses
import heapq
import logging
import math
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, TextIO, Tuple

import numpy as np

from anyplan import FEATURES
from anyplan.graph.neighbours import KDTreeNeighbours, LinearNeighbours
from anyplan.space.domain import (
    Config,
    ContractViolation,
    PathSolution,
    SpaceBounds,
    as_config,
    distance,
)
from anyplan.world.domain import Scenario, motion_valid

LOGGER = logging.getLogger(__name__)

# configurations closer than this are treated as the same vertex
DUPLICATE_TOLERANCE = 1e-12
# minimum cost decrease that re-parents a vertex
IMPROVEMENT_TOLERANCE = 1e-12


def unit_ball_volume(dimension: int) -> float:
    return math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0 + 1.0)


def default_gamma(bounds: SpaceBounds) -> float:
    """
    Rewiring constant computed from the full bounding box, an upper bound on
    the measure of free space.
    """
    d = bounds.dimension
    return (
        2.0
        * (1.0 + 1.0 / d) ** (1.0 / d)
        * (bounds.measure / unit_ball_volume(d)) ** (1.0 / d)
    )


def neighborhood_radius(n: int, dimension: int, gamma: float, max_radius: float) -> float:
    """
    min(max_radius, gamma * (ln(max(n, 2)) / n) ** (1/d))

    :raises ContractViolation: if n < 1
    """
    if n < 1:
        raise ContractViolation(f"Neighbourhood radius needs n >= 1, got {n}")
    return min(max_radius, gamma * (math.log(max(n, 2)) / n) ** (1.0 / dimension))


@dataclasses.dataclass(frozen=True)
class Vertex:
    """
    Read-only view of a graph vertex.
    """

    id: int
    config: Config
    parent: Optional[int]
    cost_to_come: float
    children: FrozenSet[int]


class GraphSnapshot(NamedTuple):
    """
    Immutable summary of a graph that other threads may read at any time.
    """

    best_cost: float
    vertex_count: int
    solved: bool


EMPTY_SNAPSHOT = GraphSnapshot(math.inf, 0, False)


class PlanGraph:
    """
    A single-writer forest rooted at one or more zero-cost roots.

    The start tree of a planner has a single root. A goal tree is rooted at
    every goal configuration, which behaves as one tree under a virtual root.
    """

    def __init__(
        self,
        roots: Sequence[Config],
        gamma: float,
        max_radius: float,
        use_kdtree: Optional[bool] = None,
        kdtree_rebuild: Optional[int] = None,
    ):
        if not roots:
            raise ContractViolation("A plan graph needs at least one root")
        dimension = as_config(roots[0]).shape[0]
        use_kdtree = FEATURES.use_kdtree if use_kdtree is None else use_kdtree
        if use_kdtree:
            rebuild = FEATURES.kdtree_rebuild if kdtree_rebuild is None else kdtree_rebuild
            self._index = KDTreeNeighbours(dimension, rebuild)
        else:
            self._index = LinearNeighbours(dimension)

        self.dimension = dimension
        self.gamma = gamma
        self.max_radius = max_radius
        self.goal_ids: Set[int] = set()
        self.snapshot: GraphSnapshot = EMPTY_SNAPSHOT

        self._configs: List[Config] = []
        self._parent: List[Optional[int]] = []
        self._cost: List[float] = []
        self._children: List[Set[int]] = []
        self._edges: List[Dict[int, float]] = []
        self._roots: List[int] = []

        for root in roots:
            self._roots.append(self._new_vertex(as_config(root), None, 0.0))
        self._publish()

    # queries -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._configs)

    @property
    def roots(self) -> Tuple[int, ...]:
        return tuple(self._roots)

    def config(self, vertex_id: int) -> Config:
        return self._configs[vertex_id]

    def cost(self, vertex_id: int) -> float:
        return self._cost[vertex_id]

    def parent(self, vertex_id: int) -> Optional[int]:
        return self._parent[vertex_id]

    def vertex(self, vertex_id: int) -> Vertex:
        return Vertex(
            id=vertex_id,
            config=self._configs[vertex_id],
            parent=self._parent[vertex_id],
            cost_to_come=self._cost[vertex_id],
            children=frozenset(self._children[vertex_id]),
        )

    def configs(self) -> np.ndarray:
        """Configurations in insertion order, as held by the neighbour index."""
        return self._index.points

    def parents(self) -> np.ndarray:
        """Parent ids in insertion order, -1 for roots."""
        return np.array([-1 if p is None else p for p in self._parent], dtype=np.intp)

    def costs(self) -> np.ndarray:
        return np.array(self._cost, dtype=np.float64)

    def examined_edges(self) -> List[Tuple[int, int, float]]:
        """
        Every connection validated so far as (u, v, length) with u < v.
        """
        return [
            (u, v, w)
            for u, adjacent in enumerate(self._edges)
            for v, w in adjacent.items()
            if u < v
        ]

    def nearest(self, q: Config) -> int:
        """
        Id of the vertex closest to q, ties going to the earliest inserted.

        :raises ContractViolation: if the graph is empty
        """
        return self._index.nearest(q)

    def near(self, q: Config, radius: float) -> Set[int]:
        """
        Ids of every vertex within radius of q, boundary included.
        """
        return set(self._index.near(q, radius))

    def radius(self) -> float:
        return neighborhood_radius(len(self), self.dimension, self.gamma, self.max_radius)

    def best_path(self, goal_ids: Optional[Iterable[int]] = None) -> Optional[PathSolution]:
        """
        The root-to-goal path with the lowest cost-to-come over goal_ids,
        which defaults to the vertices marked as goals. None when no goal is
        in the graph.
        """
        goals = self.goal_ids if goal_ids is None else set(goal_ids)
        best = self._best_goal(goals)
        if best is None:
            return None
        chain = [best]
        while self._parent[chain[-1]] is not None:
            chain.append(self._parent[chain[-1]])
        if len(chain) == 1:
            # the goal coincides with a root
            return PathSolution((self._configs[best], self._configs[best]))
        return PathSolution(tuple(self._configs[v] for v in reversed(chain)))

    def branch(self, vertex_id: int) -> List[int]:
        """Vertex ids from vertex_id up to its root."""
        chain = [vertex_id]
        while self._parent[chain[-1]] is not None:
            chain.append(self._parent[chain[-1]])
        return chain

    def dump(self, stream: TextIO) -> None:
        """
        Write one 'id parent_id cost x0 x1 ...' line per vertex, with '-'
        for a root's parent.
        """
        for v, config in enumerate(self._configs):
            parent = "-" if self._parent[v] is None else str(self._parent[v])
            coords = " ".join(repr(float(x)) for x in config)
            stream.write(f"{v} {parent} {self._cost[v]!r} {coords}\n")

    # mutations ---------------------------------------------------------

    def mark_goal(self, vertex_id: int) -> None:
        self.goal_ids.add(vertex_id)
        self._publish()

    def add_vertex(self, q: Config, parent: int) -> int:
        """
        Attach q to parent without rewiring, as a plain RRT extension does.
        The caller guarantees the connection is valid.
        """
        v = self._new_vertex(as_config(q), None, math.inf)
        self._log_edge(parent, v)
        self._attach(v, parent)
        self._publish()
        return v

    def rewire_insert(
        self, q: Config, scenario: Scenario, anchor: Optional[int] = None
    ) -> int:
        """
        Insert q with the cheapest valid parent among the anchor, the
        neighbourhood of q and its nearest vertex, then re-parent every
        neighbour that becomes cheaper through q.

        :param anchor: a vertex whose connection to q the caller has already
            validated; the nearest vertex when omitted, as for a step steered
            from it. Every other candidate connection is checked.
        """
        q = as_config(q)
        radius = self.radius()
        nearest = self.nearest(q)
        anchor = nearest if anchor is None else anchor
        candidates = self.near(q, radius) | {nearest, anchor}
        lengths = {u: distance(self._configs[u], q) for u in candidates}
        ordered = sorted(candidates, key=lambda u: (self._cost[u] + lengths[u], u))

        v = self._new_vertex(q, None, math.inf)
        parent = next(
            u for u in ordered if u == anchor or motion_valid(scenario, self._configs[u], q)
        )
        self._log_edge(parent, v, lengths[parent])
        self._attach(v, parent)

        for u in ordered:
            if u == self._parent[v]:
                continue
            if self._cost[v] + lengths[u] < self._cost[u] - IMPROVEMENT_TOLERANCE:
                if motion_valid(scenario, q, self._configs[u]):
                    self._log_edge(v, u, lengths[u])
        self._propagate(v)
        self._publish()
        return v

    def insert_path(
        self, path: PathSolution, scenario: Scenario, goal: bool = True
    ) -> List[int]:
        """
        Insert each vertex of a root-anchored path in order, offering the
        previously processed path vertex as an extra parent candidate.
        Vertices that already exist are reused rather than duplicated.

        Afterwards the best cost is no worse than the smaller of the previous
        best cost and the path length, and no vertex has become more
        expensive.

        :param path: motion-valid path starting at a root configuration
        :param scenario: scenario used for connection checks
        :param goal: mark the final path vertex as a goal
        :return: the vertex id used for each path vertex
        :raises ContractViolation: if the path does not start at a root
        """
        anchor = self._root_at(path.start)
        ids = [anchor]
        for config in path.configs[1:]:
            existing = self.nearest(config)
            if distance(self._configs[existing], config) < DUPLICATE_TOLERANCE:
                if existing != anchor and motion_valid(
                    scenario, self._configs[anchor], self._configs[existing]
                ):
                    self._log_edge(anchor, existing)
                    self._propagate(anchor)
                    self._propagate(existing)
                vertex = existing
            else:
                vertex = self.rewire_insert(config, scenario, anchor=anchor)
            ids.append(vertex)
            anchor = vertex

        if goal:
            self.goal_ids.add(ids[-1])
        self._publish()
        LOGGER.debug(
            "Inserted %s-vertex path of length %.6g, best cost now %.6g",
            len(path),
            path.length,
            self.snapshot.best_cost,
        )
        return ids

    # internals ---------------------------------------------------------

    def _new_vertex(self, q: Config, parent: Optional[int], cost: float) -> int:
        v = self._index.add(q)
        self._configs.append(q)
        self._parent.append(parent)
        self._cost.append(cost)
        self._children.append(set())
        self._edges.append({})
        return v

    def _root_at(self, q: Config) -> int:
        for root in self._roots:
            if distance(self._configs[root], q) < DUPLICATE_TOLERANCE:
                return root
        raise ContractViolation("Path does not start at a root of the graph")

    def _log_edge(self, u: int, v: int, length: Optional[float] = None) -> None:
        if length is None:
            length = distance(self._configs[u], self._configs[v])
        self._edges[u][v] = length
        self._edges[v][u] = length

    def _attach(self, v: int, parent: int) -> None:
        old = self._parent[v]
        if old is not None:
            self._children[old].discard(v)
        self._parent[v] = parent
        self._children[parent].add(v)
        self._cost[v] = self._cost[parent] + self._edges[parent][v]

    def _is_ancestor(self, candidate: int, v: int) -> bool:
        while v is not None:
            if v == candidate:
                return True
            v = self._parent[v]
        return False

    def _propagate(self, source: int) -> None:
        """
        Push a cost decrease at source through the examined-edge log.
        Children are kept exactly consistent with their parents; any other
        logged neighbour is re-parented when the decrease makes it strictly
        cheaper.
        """
        queue = [(self._cost[source], source)]
        while queue:
            cost, u = heapq.heappop(queue)
            if cost > self._cost[u]:
                continue
            for w, length in self._edges[u].items():
                if self._parent[w] == u:
                    updated = self._cost[u] + length
                    if updated != self._cost[w]:
                        self._cost[w] = updated
                        heapq.heappush(queue, (updated, w))
                elif (
                    self._cost[u] + length < self._cost[w] - IMPROVEMENT_TOLERANCE
                    and self._parent[w] is not None
                    and not self._is_ancestor(w, u)
                ):
                    self._attach(w, u)
                    heapq.heappush(queue, (self._cost[w], w))

    def _best_goal(self, goals: Iterable[int]) -> Optional[int]:
        best = None
        for g in goals:
            if best is None or (self._cost[g], g) < (self._cost[best], best):
                best = g
        return best

    def _publish(self) -> None:
        best = self._best_goal(self.goal_ids)
        best_cost = math.inf if best is None else self._cost[best]
        self.snapshot = GraphSnapshot(best_cost, len(self._configs), best is not None)
