"""One-shot nearest induced segment for a single query, within a factor 2(1+eps).

Every point p is projected radially onto the sphere S(q, r); for each p the
ANN of its antipodal image (the reflection) among the projections names a
partner u, and the segment pu is scored exactly. The projection radius does
not change which partners are found, so r = 1.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .ann import AnnConfig, ann_build
from .errors import CoincidentWithQuery, TooFewPoints
from .geometry import QueryResult, as_points


def _unit(q, p, r):
    v = np.asarray(p, dtype=np.float64) - q
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n <= 1e-12 * r):
        raise CoincidentWithQuery("point coincides with the query")
    return v / n


def spherical_project(q, r, p):
    q = np.asarray(q, dtype=np.float64)
    return q + r * _unit(q, p, r)


def spherical_reflect(q, r, p):
    q = np.asarray(q, dtype=np.float64)
    return q - r * _unit(q, p, r)


class SphericalScene:
    """Projections of distinct points onto S(q, r) with an ANN index over them."""

    def __init__(self, points, q, r: float = 1.0, config: AnnConfig | None = None, ids=None):
        self.q = np.asarray(q, dtype=np.float64)
        self.r = float(r)
        P = as_points(points)
        self.ids = np.arange(len(P)) if ids is None else np.asarray(ids)
        self.projected = spherical_project(self.q, self.r, P)
        self.reflected = 2 * self.q - self.projected
        self.ann = ann_build(self.projected, config or AnnConfig())

    def partners(self):
        """Row of the ANN partner of every point's reflection."""
        return self.ann.query_many(self.reflected)[0]


def offline_nearest_segment(points, q, epsilon: float = 0.25, config: AnnConfig | None = None,
                            r: float = 1.0) -> QueryResult:
    P = as_points(points)
    q = np.asarray(q, dtype=np.float64)
    if len(P) < 2:
        raise TooFewPoints("need at least two points")
    on_q = np.flatnonzero(np.linalg.norm(P - q, axis=1) <= 1e-12 * max(r, 1.0))
    if len(on_q):
        i = int(on_q[0])
        j = 1 if i == 0 else 0
        return QueryResult("Segment", 0.0, (min(i, j), max(i, j)), ((i, 1.0), (j, 0.0)), P[i].copy())
    # drop duplicates; their zero-length segments are the point distances,
    # which every segment through that point already bounds
    _, first = np.unique(P, axis=0, return_index=True)
    first = np.sort(first)
    config = (config or AnnConfig()).with_epsilon(epsilon)
    if len(first) < 2:
        i, j = 0, 1
        dist = float(np.linalg.norm(P[0] - q))
        return QueryResult("Segment", dist, (i, j), ((i, 1.0), (j, 0.0)), P[0].copy())
    scene = SphericalScene(P[first], q, r, config, ids=first)
    partner = scene.partners()
    a = np.ascontiguousarray(P[first])
    b = np.ascontiguousarray(P[first[partner]])
    dist, t = _kernels.segment_distances(q, a, b)
    pairs = [(float(dist[s]), tuple(sorted((int(first[s]), int(first[partner[s]])))), s)
             for s in range(len(first))]
    dist_s, pair, s = min(pairs)
    ts = float(t[s])
    i, j = int(first[s]), int(first[partner[s]])
    tau = ((i, 1.0 - ts), (j, ts)) if i != j else ((i, 1.0),)
    near = (1 - ts) * P[i] + ts * P[j]
    return QueryResult("Segment", dist_s, pair, tau, near)
