"""
Exact nearest-neighbour indexes over the configurations of a plan graph.

Both indexes return identical answers. Distances are always computed with
the same numpy expression, ties are broken by the lowest insertion index and
the k-d tree is only used to narrow the candidates that are then scored
exactly.
"""
import logging
import math
from typing import List

import numpy as np
from scipy.spatial import cKDTree

from anyplan.space.domain import Config, ContractViolation

LOGGER = logging.getLogger(__name__)

# relative slack on k-d tree query radii; candidates are re-scored exactly
_QUERY_SLACK = 1e-9


def _distances(points: np.ndarray, q: Config) -> np.ndarray:
    return np.linalg.norm(points - q, axis=1)


class LinearNeighbours:
    """
    Brute-force index: every query scans all stored configurations.
    """

    def __init__(self, dimension: int):
        self._points = np.empty((16, dimension), dtype=np.float64)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def points(self) -> np.ndarray:
        return self._points[: self._size]

    def add(self, config: Config) -> int:
        if self._size == self._points.shape[0]:
            grown = np.empty((2 * self._size, self._points.shape[1]), dtype=np.float64)
            grown[: self._size] = self._points
            self._points = grown
        self._points[self._size] = config
        self._size += 1
        return self._size - 1

    def nearest(self, q: Config) -> int:
        if not self._size:
            raise ContractViolation("nearest() called on an empty graph")
        # argmin returns the first occurrence, i.e. the lowest index
        return int(np.argmin(_distances(self.points, q)))

    def near(self, q: Config, radius: float) -> List[int]:
        if radius < 0:
            raise ContractViolation(f"Negative neighbourhood radius: {radius}")
        if not self._size:
            return []
        return np.flatnonzero(_distances(self.points, q) <= radius).tolist()


class KDTreeNeighbours(LinearNeighbours):
    """
    Index backed by a scipy k-d tree over a prefix of the stored points plus
    a linearly scanned buffer of recent additions. The tree is rebuilt when
    the buffer reaches rebuild_after entries.
    """

    def __init__(self, dimension: int, rebuild_after: int = 256):
        super().__init__(dimension)
        self._rebuild_after = max(1, rebuild_after)
        self._tree = None
        self._indexed = 0

    def add(self, config: Config) -> int:
        index = super().add(config)
        if self._size - self._indexed >= self._rebuild_after:
            self._tree = cKDTree(self.points.copy())
            self._indexed = self._size
            LOGGER.debug("Rebuilt k-d tree over %s configurations", self._indexed)
        return index

    def _tree_candidates(self, q: Config, radius: float) -> List[int]:
        if self._tree is None or math.isinf(radius):
            return list(range(self._indexed)) if self._tree is not None else []
        slack = radius * (1.0 + _QUERY_SLACK) + _QUERY_SLACK
        return self._tree.query_ball_point(q, slack)

    def _candidates(self, q: Config, radius: float) -> np.ndarray:
        pending = range(self._indexed, self._size)
        return np.array(sorted(self._tree_candidates(q, radius)) + list(pending), dtype=np.intp)

    def nearest(self, q: Config) -> int:
        if not self._size:
            raise ContractViolation("nearest() called on an empty graph")
        if self._tree is None:
            return super().nearest(q)

        best, _ = self._tree.query(q)
        pending = self.points[self._indexed :]
        if len(pending):
            best = min(best, float(_distances(pending, q).min()))
        candidates = self._candidates(q, best)
        scores = _distances(self.points[candidates], q)
        return int(candidates[np.argmin(scores)])

    def near(self, q: Config, radius: float) -> List[int]:
        if radius < 0:
            raise ContractViolation(f"Negative neighbourhood radius: {radius}")
        if self._tree is None:
            return super().near(q, radius)
        candidates = self._candidates(q, radius)
        if not len(candidates):
            return []
        keep = _distances(self.points[candidates], q) <= radius
        return candidates[keep].tolist()
