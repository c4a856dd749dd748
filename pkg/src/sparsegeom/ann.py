"""(1+eps)-approximate nearest neighbour indexes over a fixed point list.

Two backends share one interface: ``ExactIndex`` (linear scan, lowest id wins
ties) and ``TreeIndex`` (kd-tree with sliding-midpoint splits). Every query
returns ``(id, distance)`` with ``distance <= (1 + eps) * exact``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, DimensionMismatch, EmptySet

BACKENDS = ("exact", "tree")


@dataclass(frozen=True)
class AnnConfig:
    epsilon: float = 0.25
    backend: str = "exact"
    leaf_size: int = 8

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 8.0):
            raise ConfigError(f"epsilon must lie in (0, 8], got {self.epsilon}")
        b = self.backend.lower()
        if b not in BACKENDS:
            raise ConfigError(f"unknown ANN backend {self.backend!r}")
        object.__setattr__(self, "backend", b)

    def with_epsilon(self, epsilon: float) -> "AnnConfig":
        return AnnConfig(epsilon=epsilon, backend=self.backend, leaf_size=self.leaf_size)


class AnnIndex:
    """Immutable ANN index. Subclasses implement ``_query`` returning squared distance."""

    config: AnnConfig
    points: np.ndarray

    def __init__(self, points, config: AnnConfig):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise EmptySet("cannot index an empty point set")
        pts.setflags(write=False)
        self.points = pts
        self.config = config

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def _check(self, q):
        q = np.ascontiguousarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise DimensionMismatch(f"query has shape {q.shape}, index dimension is {self.dim}")
        return q

    def query(self, q):
        i, d2 = self._query(self._check(q))
        return int(i), math.sqrt(d2)

    def query_many(self, queries):
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        ids = np.empty(len(queries), dtype=np.int64)
        dist = np.empty(len(queries))
        for t, q in enumerate(queries):
            ids[t], dist[t] = self.query(q)
        return ids, dist


class ExactIndex(AnnIndex):
    def _query(self, q):
        return _kernels.nearest(self.points, q)

    def query_many(self, queries):
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        if queries.ndim != 2 or queries.shape[1] != self.dim:
            raise DimensionMismatch("query batch does not match index dimension")
        ids, d2 = _kernels.nearest_many(self.points, queries)
        return ids, np.sqrt(d2)


class TreeIndex(AnnIndex):
    def __init__(self, points, config: AnnConfig):
        super().__init__(points, config)
        self._tree = _kernels.kd_build(self.points, max(1, int(config.leaf_size)))

    def _query(self, q):
        return _kernels.kd_query(self.points, *self._tree, q, self.config.epsilon)

    @property
    def node_count(self) -> int:
        return int(self._tree[1].shape[0])


def ann_build(points, config: AnnConfig | None = None) -> AnnIndex:
    config = config or AnnConfig()
    if config.backend == "exact":
        return ExactIndex(points, config)
    return TreeIndex(points, config)


def ann_query(index: AnnIndex, q):
    return index.query(q)
