"""Nearest flat in a bouquet, and the induced-flat indexes built from bouquets.

A bouquet is the family of flats flat(B + {p}) through a fixed base B. With
w the component of q - b orthogonal to flat(B) and r = |w|, the distance from
q to flat(B + {p}) is sqrt(r^2 - <w, u_p>^2), where u_p is the unit direction
of p away from flat(B). The nearest flat therefore belongs to the stored
direction (+u_p or -u_p) nearest to w / r, which is an ANN query on the unit
sphere of the orthogonal complement. Positive bouquets store only +u_p and
measure distance to the halfflat through B towards p.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from . import _kernels
from .ann import AnnConfig, TreeIndex, ann_build
from .brute import subsets
from .config import TOL
from .errors import DegenerateBase, DimensionMismatch, InstanceTooLarge
from .geometry import (
    CanonicalFrame,
    QueryResult,
    affine_fit,
    as_points,
    linear_fit,
    orthonormal_frame,
)

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**7


def _halfflat_coeffs(frame: CanonicalFrame, q, direction):
    """Nearest point of the positive halfflat and its coefficients along ``direction``."""
    y, w = frame.split(q)
    t = max(float(w @ direction), 0.0)
    return frame.origin + y @ frame.flat_basis + t * direction


class BouquetIndex:
    """ANN flat (or halfflat when ``positive``) through a fixed base.

    ``base`` is the sequence of base points; ``points`` the candidates with
    ids ``ids`` (default: row positions). Candidates closer than 1e-9 to
    flat(B) have no direction; they are dropped and listed in ``excluded``.
    """

    positive = False

    def __init__(self, base, points, config: AnnConfig | None = None, ids=None, base_ids=None,
                 frame: CanonicalFrame | None = None):
        self.base = as_points(base)
        self.frame = frame or orthonormal_frame(self.base)
        self.config = config or AnnConfig()
        self.base_ids = tuple(base_ids) if base_ids is not None else None
        pts = as_points(points)
        ids = np.arange(len(pts)) if ids is None else np.asarray(ids, dtype=np.int64)
        if pts.shape[1] != self.frame.dim:
            raise DimensionMismatch("points and base differ in dimension")
        comp = (pts - self.frame.origin) @ self.frame.complement.T
        height = np.linalg.norm(comp, axis=1)
        keep = height > TOL.on_flat
        self.excluded = tuple(int(i) for i in ids[~keep])
        if self.excluded:
            log.debug("bouquet: %d points on the base flat excluded", len(self.excluded))
        self.points = pts[keep]
        self.pids = ids[keep]
        self.directions = comp[keep] / height[keep, None]
        self._set_index()

    @classmethod
    def from_directions(cls, frame, directions, pids, points, config, base=None, base_ids=None):
        """Wrap precomputed unit directions (complement coordinates) without recomputing them."""
        self = cls.__new__(cls)
        self.frame = frame
        self.base = base
        self.base_ids = base_ids
        self.config = config
        self.excluded = ()
        self.points = points
        self.pids = np.asarray(pids, dtype=np.int64)
        self.directions = np.asarray(directions, dtype=np.float64)
        self._set_index()
        return self

    def _set_index(self):
        if self.positive:
            stored, back = self.directions, np.arange(len(self.pids))
        else:
            stored = np.vstack([self.directions, -self.directions])
            back = np.concatenate([np.arange(len(self.pids))] * 2)
        self.stored = np.ascontiguousarray(stored)
        self.back = back
        self.ann = ann_build(self.stored, self.config) if len(self.stored) else None

    def __len__(self):
        return len(self.pids)

    def query_raw(self, q):
        """``(row, distance, r)``; ``row`` indexes ``pids`` and is -1 when nothing applies."""
        w = self.frame.complement_coords(q)
        return self.query_complement(w)

    def query_complement(self, w):
        r = float(np.linalg.norm(w))
        if r <= TOL.zero_direction or self.ann is None:
            return -1, r, r
        j, _ = self.ann.query(w / r)
        row = int(self.back[j])
        dot = float(self.directions[row] @ w)
        if self.positive:
            dot = max(dot, 0.0)
        return row, math.sqrt(max(r * r - dot * dot, 0.0)), r

    def query(self, q) -> QueryResult:
        q = np.asarray(q, dtype=np.float64)
        row, dist, r = self.query_raw(q)
        base_ids = self.base_ids or ()
        if row < 0:
            near = self.frame.project_to_flat(q)
            return QueryResult("ANIF", r, base_ids, (), near)
        pid = int(self.pids[row])
        verts = np.vstack([self.base, self.points[row]])
        if self.positive:
            ambient = self.directions[row] @ self.frame.complement
            near = _halfflat_coeffs(self.frame, q, ambient)
            _, _, coef = affine_fit(verts, near)
            dist = float(np.linalg.norm(q - near))
        else:
            dist, near, coef = affine_fit(verts, q)
        ids = tuple(base_ids) + (pid,)
        tau = tuple((i, float(c)) for i, c in zip(ids, coef[-len(ids):])) if base_ids else ((pid, float(coef[-1])),)
        return QueryResult("ANIF", dist, ids, tau, near)


class PositiveBouquetIndex(BouquetIndex):
    """One direction per point: distance is to the halfflat from flat(B) towards p."""

    positive = True


def bouquet_build(base, points, epsilon: float = 0.25, config: AnnConfig | None = None, **kw):
    return BouquetIndex(base, points, (config or AnnConfig()).with_epsilon(epsilon), **kw)


def positive_bouquet_build(base, points, epsilon: float = 0.25, config: AnnConfig | None = None, **kw):
    return PositiveBouquetIndex(base, points, (config or AnnConfig()).with_epsilon(epsilon), **kw)


def bouquet_query(index: BouquetIndex, q) -> QueryResult:
    return index.query(q)


def positive_bouquet_query(index: PositiveBouquetIndex, q) -> QueryResult:
    return index.query(q)


class AnifIndex:
    """Nearest induced flat through k input points (``linear=False``) or
    nearest span of k input points (``linear=True``).

    One bouquet per (k-1)-subset, in lexicographic order; for the linear
    variant every base also contains the origin. The bouquets are stored
    packed so the exact backend answers a query with one fused scan.
    """

    def __init__(self, points, k: int, epsilon: float = 0.25, config: AnnConfig | None = None,
                 linear: bool = False, budget: int = DEFAULT_BUDGET):
        P = np.ascontiguousarray(as_points(points))
        n, d = P.shape
        if not 2 <= k <= 6:
            raise ValueError(f"k must lie in [2, 6], got {k}")
        if n < k:
            raise ValueError(f"need at least k={k} points, got {n}")
        count = math.comb(n, k - 1)
        if count > budget:
            raise InstanceTooLarge(f"{count} bouquets exceed the budget of {budget}")
        self.points = P
        self.k = k
        self.linear = linear
        self.variant = "ANLF" if linear else "ANIF"
        self.config = (config or AnnConfig()).with_epsilon(epsilon)
        bases = subsets(n, k - 1)
        if linear:
            origins = np.zeros((len(bases), d))
            spans = P[bases]
        else:
            origins = P[bases[:, 0]]
            spans = P[bases[:, 1:]] - origins[:, None, :]
        f = spans.shape[1]
        if f > 0:
            sigma = np.linalg.svd(spans, compute_uv=False)[:, -1] if f <= d else np.zeros(len(bases))
            good = sigma > TOL.rank
        else:
            good = np.ones(len(bases), dtype=bool)
        if not np.all(good):
            log.info("%s: skipping %d degenerate bases of %d", self.variant, int((~good).sum()), len(bases))
        if not np.any(good):
            raise DegenerateBase("every base is affinely dependent")
        self.bases = bases[good]
        self.origins = np.ascontiguousarray(origins[good])
        if f > 0:
            Q, _ = np.linalg.qr(np.transpose(spans[good], (0, 2, 1)))
            self.flats = np.ascontiguousarray(np.transpose(Q, (0, 2, 1)))
        else:
            self.flats = np.zeros((len(self.bases), 0, d))
        self._pack()

    def _pack(self):
        P, m = self.points, len(self.bases)
        n = len(P)
        W = P[None, :, :] - self.origins[:, None, :]
        if self.flats.shape[1]:
            W = W - np.einsum("mnf,mfd->mnd", np.einsum("mnd,mfd->mnf", W, self.flats), self.flats)
        h = np.linalg.norm(W, axis=2)
        member = np.zeros((m, n), dtype=bool)
        np.put_along_axis(member, self.bases, True, axis=1)
        mask = (~member) & (h > TOL.on_flat)
        bi, pi = np.nonzero(mask)
        U = W[bi, pi] / h[bi, pi][:, None]
        counts = mask.sum(axis=1)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        rank = np.arange(len(bi)) - starts[bi]
        ptr = np.concatenate([[0], np.cumsum(2 * counts)]).astype(np.int64)
        dirs = np.empty((2 * len(bi), P.shape[1]))
        pids = np.empty(2 * len(bi), dtype=np.int64)
        plus = ptr[bi] + rank
        minus = plus + counts[bi]
        dirs[plus], dirs[minus] = U, -U
        pids[plus] = pids[minus] = pi
        self.ptr, self.dirs, self.pids = ptr, np.ascontiguousarray(dirs), pids
        self._trees = None
        if self.config.backend == "tree":
            self._trees = [
                TreeIndex(self.dirs[ptr[i]:ptr[i + 1]], self.config) if ptr[i + 1] > ptr[i] else None
                for i in range(m)
            ]

    @property
    def n_structures(self) -> int:
        return len(self.bases)

    def scan(self, q):
        """Per-base ``(pid, distance)``; pid is -1 where the base alone decides."""
        q = np.ascontiguousarray(q, dtype=np.float64)
        if q.shape != (self.points.shape[1],):
            raise DimensionMismatch("query dimension differs from the index")
        if self._trees is None:
            pid, dist, _ = _kernels.bouquet_scan(q, self.origins, self.flats, self.ptr, self.dirs,
                                                 self.pids, False)
            return pid, dist
        W = q[None, :] - self.origins
        if self.flats.shape[1]:
            W = W - np.einsum("mf,mfd->md", np.einsum("md,mfd->mf", W, self.flats), self.flats)
        r = np.linalg.norm(W, axis=1)
        pid = np.full(len(W), -1, dtype=np.int64)
        dist = r.copy()
        for i, tree in enumerate(self._trees):
            if tree is None or r[i] <= TOL.zero_direction:
                continue
            j, _ = tree.query(W[i] / r[i])
            t = self.ptr[i] + j
            dot = float(self.dirs[t] @ W[i])
            pid[i] = self.pids[t]
            dist[i] = math.sqrt(max(r[i] * r[i] - dot * dot, 0.0))
        return pid, dist

    def _witness(self, b, pid):
        base = [int(x) for x in self.bases[b]]
        if pid < 0:
            # q lies on flat(B) or every other point does: any extra point works
            pid = next(i for i in range(len(self.points)) if i not in base)
        return tuple(base) + (int(pid),)

    def query(self, q) -> QueryResult:
        q = np.asarray(q, dtype=np.float64)
        pid, dist = self.scan(q)
        best = float(dist.min())
        ties = np.flatnonzero(dist == best)
        witness = min((self._witness(b, pid[b]) for b in ties), key=lambda w: tuple(sorted(w)))
        verts = self.points[list(witness)]
        if self.linear:
            d, near, coef = linear_fit(verts, q)
        else:
            d, near, coef = affine_fit(verts, q)
        tau = tuple((i, float(c)) for i, c in zip(witness, coef))
        return QueryResult(self.variant, d, witness, tau, near)


def anif_build(points, k, epsilon=0.25, config=None, budget=DEFAULT_BUDGET) -> AnifIndex:
    return AnifIndex(points, k, epsilon, config, linear=False, budget=budget)


def anlf_build(points, k, epsilon=0.25, config=None, budget=DEFAULT_BUDGET) -> AnifIndex:
    return AnifIndex(points, k, epsilon, config, linear=True, budget=budget)


def anif_query(index: AnifIndex, q) -> QueryResult:
    return index.query(q)


anlf_query = anif_query
