"""Approximate nearest point on a star of segments sharing one endpoint.

``UniformStarIndex`` handles stars whose tips all lie on the unit sphere
around the centre. ``StarIndex`` handles arbitrary tips: tips are sorted by
decreasing distance from the centre so that the tips reaching past radius r
form a prefix, and a prefix-ANN structure over their unit directions answers
queries restricted to the sphere of radius r. ``OnlineSegmentIndex`` builds
one star per input point and answers nearest-induced-segment queries.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from . import _kernels
from .ann import AnnConfig, ann_build
from .errors import (
    DimensionMismatch,
    EmptySlice,
    IndexOutOfRange,
    NonUniformInput,
    TooFewPoints,
)
from .geometry import QueryResult, as_points

log = logging.getLogger(__name__)

UNIT_TOL = 1e-9


def _segment_result(q, c, p, c_id, p_id):
    dist, t = _kernels.segment_distances(q, c[None, :], p[None, :])
    t = float(t[0])
    if c_id is None:
        tau = ((p_id, t),)
        witness = (p_id,)
    else:
        tau = ((c_id, 1.0 - t), (p_id, t))
        witness = (c_id, p_id)
    return QueryResult("Segment", float(dist[0]), witness, tau, (1 - t) * c + t * p)


class UniformStarIndex:
    """Star whose tips all sit at distance 1 from the base point ``b``."""

    def __init__(self, base, points, config: AnnConfig | None = None, ids=None, base_id=None):
        self.base = np.asarray(base, dtype=np.float64)
        self.points = as_points(points)
        self.ids = np.arange(len(self.points)) if ids is None else np.asarray(ids)
        self.base_id = base_id
        self.config = config or AnnConfig()
        radii = np.linalg.norm(self.points - self.base, axis=1)
        if np.any(np.abs(radii - 1.0) > UNIT_TOL):
            raise NonUniformInput("every star tip must be at distance 1 from the base")
        self.shifted = self.points - self.base
        self.ann = ann_build(self.shifted, self.config)

    def query(self, q) -> QueryResult:
        q = np.asarray(q, dtype=np.float64)
        if q.shape != self.base.shape:
            raise DimensionMismatch("query dimension differs from the star")
        if abs(np.linalg.norm(q - self.base) - 1.0) > UNIT_TOL:
            raise NonUniformInput("query must be at distance 1 from the base")
        j, _ = self.ann.query(q - self.base)
        res = _segment_result(q, self.base, self.points[j], self.base_id, int(self.ids[j]))
        if res.distance > 1.0:
            # the base itself is always at distance exactly 1
            tau = ((self.base_id, 1.0),) if self.base_id is not None else ()
            return QueryResult("Segment", 1.0, res.witness_ids, tau, self.base.copy())
        return res


def uniform_star_query(index: UniformStarIndex, q) -> QueryResult:
    return index.query(q)


class PrefixAnnIndex:
    """ANN restricted to the first i points of a fixed ordering.

    A balanced binary tree over positions; every node keeps an ANN index over
    its leaves, and a prefix splits into O(log n) whole nodes.
    """

    def __init__(self, points, config: AnnConfig | None = None):
        self.points = np.ascontiguousarray(as_points(points))
        self.config = config or AnnConfig()
        n = len(self.points)
        if n == 0:
            raise IndexOutOfRange("prefix index needs at least one point")
        self.lo: list[int] = []
        self.hi: list[int] = []
        self.children: list[tuple[int, int] | None] = []
        self.indexes = []
        self._build(0, n)

    def _build(self, lo, hi):
        node = len(self.lo)
        self.lo.append(lo)
        self.hi.append(hi)
        self.children.append(None)
        self.indexes.append(ann_build(self.points[lo:hi], self.config))
        if hi - lo > 1:
            mid = (lo + hi) // 2
            a = self._build(lo, mid)
            b = self._build(mid, hi)
            self.children[node] = (a, b)
        return node

    def __len__(self):
        return len(self.points)

    def canonical_nodes(self, i: int) -> list[int]:
        """Nodes whose leaf ranges tile positions ``[0, i)``."""
        if not 1 <= i <= len(self.points):
            raise IndexOutOfRange(f"prefix length {i} outside [1, {len(self.points)}]")
        out = []
        node = 0
        while True:
            if self.hi[node] <= i:
                out.append(node)
                return out
            a, b = self.children[node]
            if self.hi[a] <= i:
                out.append(a)
                if self.hi[a] == i:
                    return out
                node = b
            else:
                node = a

    def query(self, i: int, q):
        """Best ``(position, distance)`` among the first ``i`` points."""
        best = (math.inf, -1)
        for node in self.canonical_nodes(i):
            j, dist = self.indexes[node].query(q)
            cand = (dist, self.lo[node] + j)
            if cand < best:
                best = cand
        return best[1], best[0]


def prefix_ann_query(index: PrefixAnnIndex, i: int, q):
    return index.query(i, q)


class StarIndex:
    """Star of segments from ``center`` to each of ``points``.

    ``epsilon`` is the guarantee of ``query``; the inner ANN structures are
    built with ``epsilon / 4`` and the query probes ``ceil(32 / eps^2)``
    spheres.
    """

    def __init__(self, center, points, config: AnnConfig | None = None, ids=None, center_id=None):
        self.center = np.asarray(center, dtype=np.float64)
        pts = as_points(points)
        ids = np.arange(len(pts)) if ids is None else np.asarray(ids, dtype=np.int64)
        self.config = config or AnnConfig()
        self.epsilon = self.config.epsilon
        self.center_id = center_id
        if pts.shape[1] != self.center.shape[0]:
            raise DimensionMismatch("star tips and centre differ in dimension")
        radii = np.linalg.norm(pts - self.center, axis=1)
        keep = radii > 1e-12
        if not np.all(keep):
            log.debug("star at %s: %d tips coincide with the centre", center_id, int((~keep).sum()))
        pts, ids, radii = pts[keep], ids[keep], radii[keep]
        order = np.lexsort((ids, -radii))
        self.points = np.ascontiguousarray(pts[order])
        self.ids = ids[order]
        self.radii = radii[order]
        self._neg_radii = -self.radii
        self.directions = np.ascontiguousarray((self.points - self.center) / self.radii[:, None])
        inner = self.config.with_epsilon(self.epsilon / 4)
        if len(self.points):
            self.point_ann = ann_build(self.points, inner)
            self.prefix = PrefixAnnIndex(self.directions, inner)
        else:
            self.point_ann = None
            self.prefix = None
        self.n_radii = math.ceil(32.0 / self.epsilon**2)

    def __len__(self):
        return len(self.points)

    def slice_size(self, r: float) -> int:
        """Number of tips at distance at least ``r`` from the centre."""
        return int(np.searchsorted(self._neg_radii, -r, side="right"))

    def sliced_query(self, q, r: float):
        """ANN to ``q`` among the star's points on the sphere of radius ``r``.

        Returns ``(original id, distance from q to centre + r * direction)``.
        """
        if r <= 0:
            raise ValueError("radius must be positive")
        m = self.slice_size(r)
        if m == 0:
            raise EmptySlice(f"no tip reaches radius {r}")
        q = np.asarray(q, dtype=np.float64)
        j, _ = self.prefix.query(m, (q - self.center) / r)
        return int(self.ids[j]), float(np.linalg.norm(q - self.center - r * self.directions[j]))

    def _candidates(self, q, r):
        """Positions of tips returned by the point ANN and the sliced queries."""
        cands = {self.point_ann.query(q)[0]}
        radii = np.arange(1, self.n_radii + 1) * (self.epsilon**2 / 16.0) * r
        counts = np.searchsorted(self._neg_radii, -radii, side="right")
        live = counts > 0
        if self.config.backend == "exact":
            # exact nearest unit direction to (q - c) / r is the largest
            # projection onto q - c, whatever r is: one running argmax
            # answers every prefix.
            dots = self.directions @ (q - self.center)
            best = np.empty(len(dots), dtype=np.int64)
            run = np.maximum.accumulate(dots)
            first = np.flatnonzero(np.r_[True, run[1:] > run[:-1]])
            best[:] = first[np.searchsorted(first, np.arange(len(dots)), side="right") - 1]
            cands.update(best[np.unique(counts[live]) - 1].tolist())
        else:
            qc = q - self.center
            for ri, m in zip(radii[live], counts[live]):
                j, _ = self.prefix.query(int(m), qc / ri)
                cands.add(j)
        return np.fromiter(sorted(cands), dtype=np.int64)

    def query(self, q) -> QueryResult:
        q = np.asarray(q, dtype=np.float64)
        if q.shape != self.center.shape:
            raise DimensionMismatch("query dimension differs from the star")
        r = float(np.linalg.norm(q - self.center))
        if r == 0.0 or len(self.points) == 0:
            tau = ((self.center_id, 1.0),) if self.center_id is not None else ()
            wid = (self.center_id,) if self.center_id is not None else ()
            return QueryResult("Segment", r, wid, tau, self.center.copy())
        cands = self._candidates(q, r)
        tips = self.points[cands]
        dist, _ = _kernels.segment_distances(q, np.broadcast_to(self.center, tips.shape).copy(), tips)
        j = int(cands[int(np.argmin(dist))])
        return _segment_result(q, self.center, self.points[j], self.center_id, int(self.ids[j]))


def sliced_star_query(index: StarIndex, q, r: float):
    return index.sliced_query(q, r)


def star_query(index: StarIndex, q) -> QueryResult:
    return index.query(q)


def _result_key(res: QueryResult):
    return (res.distance, tuple(sorted(res.witness_ids)))


class OnlineSegmentIndex:
    """Nearest segment between two input points, one star per point."""

    def __init__(self, points, epsilon: float = 0.25, config: AnnConfig | None = None):
        P = as_points(points)
        if len(P) < 2:
            raise TooFewPoints("need at least two points")
        self.points = P
        self.config = (config or AnnConfig()).with_epsilon(epsilon)
        self.stars = []
        ids = np.arange(len(P))
        for c in range(len(P)):
            others = ids != c
            self.stars.append(StarIndex(P[c], P[others], self.config, ids=ids[others], center_id=c))

    def query(self, q) -> QueryResult:
        q = np.asarray(q, dtype=np.float64)
        best = None
        for star in self.stars:
            res = star.query(q)
            if best is None or _result_key(res) < _result_key(best):
                best = res
        return best


def online_segment_build(points, epsilon: float = 0.25, config: AnnConfig | None = None):
    return OnlineSegmentIndex(points, epsilon, config)


def online_segment_query(index: OnlineSegmentIndex, q) -> QueryResult:
    return index.query(q)
