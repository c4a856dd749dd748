"""Nearest page of a book and the nearest-induced-simplex index built from books.

A book over base B is the family of simplices conv(B + {p}). Every page is
rotated about flat(B) into one canonical halfflat G, where a point is
described by its flat coordinates y and its height h above flat(B). A point
of G lies in the canonical page of p exactly when each of its base angles is
at most the corresponding base angle of p, so a range tree over the base
angles reports the pages containing any canonical point as a few disjoint
canonical sets. Each canonical set carries a positive-bouquet index.

For a query q with distance r to flat(B), the curve x -> (y_q, sqrt(r^2 - x^2))
enters the page of p at a critical value gamma(p). ``page_query`` runs a
randomized binary search over the critical values, asking at each probe
gamma whether some page containing the probe point has a halfflat closer
than gamma.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from . import _kernels
from .ann import AnnConfig
from .bouquet import DEFAULT_BUDGET, PositiveBouquetIndex
from .brute import subsets
from .config import TOL
from .errors import (
    DegenerateBase,
    DimensionMismatch,
    InstanceTooLarge,
    NotVerticallyAligned,
    QueryOutsidePrism,
)
from .geometry import AngleGeometry, QueryResult, as_points, barycentric, orthonormal_frame
from .rangetree import RangeTree

log = logging.getLogger(__name__)

MAX_REJECTIONS = 16


def _affine_coords(base_coords, y):
    """Affine coordinates of flat points ``y`` (..., f) w.r.t. the base simplex."""
    y = np.asarray(y, dtype=np.float64)
    A = (base_coords[1:] - base_coords[0]).T
    c = np.linalg.solve(A, (y.reshape(-1, y.shape[-1]) - base_coords[0]).T).T
    out = np.concatenate([1.0 - c.sum(axis=1, keepdims=True), c], axis=1)
    return out.reshape(y.shape[:-1] + (out.shape[1],))


class BookIndex:
    """Pages conv(B + {p}) for a fixed base ``base_ids`` of ``points``.

    Candidates within 1e-9 of flat(B) are left out: their pages lie inside
    flat(B) and are covered by the lower-dimensional faces.
    """

    def __init__(self, points, base_ids, config: AnnConfig | None = None, frame=None):
        P = np.ascontiguousarray(as_points(points))
        self.points = P
        self.base_ids = tuple(int(i) for i in base_ids)
        self.base = P[list(self.base_ids)]
        self.frame = frame or orthonormal_frame(self.base)
        self.config = config or AnnConfig()
        self.k = len(self.base_ids) + 1
        in_base = np.zeros(len(P), dtype=bool)
        in_base[list(self.base_ids)] = True
        rel = P - self.frame.origin
        y = rel @ self.frame.flat_basis.T
        comp = rel @ self.frame.complement.T
        h = np.linalg.norm(comp, axis=1)
        keep = (~in_base) & (h > TOL.on_flat)
        self.ids = np.flatnonzero(keep)
        self.excluded = tuple(int(i) for i in np.flatnonzero((~in_base) & ~keep))
        self.canon = np.column_stack([y[keep], h[keep]])
        self.directions = comp[keep] / h[keep, None]
        self.base_coords = self.frame.base_coords
        self.geometry = AngleGeometry.from_base(self.base_coords)
        self.angles = self.geometry.angles(self.canon) if len(self.ids) else np.zeros((0, self.k - 1))
        self.apex_bary = _affine_coords(self.base_coords, self.canon[:, :-1]) if self.base_coords.shape[1] else np.ones((len(self.ids), 1))
        self.tree = RangeTree(self.angles.reshape(len(self.ids), self.k - 1), self._payload)

    def _payload(self, members):
        return PositiveBouquetIndex.from_directions(
            self.frame, self.directions[members], members, None, self.config)

    def __len__(self):
        return len(self.ids)

    # canonical space ----------------------------------------------------

    def to_canonical(self, x) -> np.ndarray:
        return self.frame.to_canonical(x)

    def page_vertices(self, row) -> np.ndarray:
        """Vertices of the canonical page of candidate ``row`` in (y, h) coordinates."""
        base = np.column_stack([self.base_coords, np.zeros(len(self.base_coords))])
        return np.vstack([base, self.canon[row]])

    def page_contains(self, row, x, slack=TOL.containment) -> bool:
        return bool(np.all(barycentric(self.page_vertices(row), x) >= -slack))

    def prism_contains(self, q) -> bool:
        """True when q projects into the relative interior of conv(B)."""
        if self.base_coords.shape[1] == 0:
            return True
        bary = _affine_coords(self.base_coords, self.frame.flat_coords(q))
        return bool(np.all(bary > TOL.zero_direction))

    def query_angles(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.geometry.normals.shape[1] == 0:
            return self.geometry.angles(x)
        s = x[:-1] @ self.geometry.normals.T - self.geometry.offsets
        return np.arctan2(max(x[-1], 0.0), s)

    # range reporting ----------------------------------------------------

    def simplices_containing(self, x) -> list[int]:
        """Canonical handles whose union is every row with x in its page."""
        x = np.asarray(x, dtype=np.float64)
        if x[-1] < 0:
            raise ValueError("canonical point must have non-negative height")
        return self.tree.query(self.query_angles(x), np.inf)

    def simplices_between(self, low, high) -> list[int]:
        """Handles of rows whose page contains ``low`` but not ``high``.

        ``high`` must sit vertically above ``low``. Box i collects the pages
        whose first violated angle is i, so the boxes are disjoint.
        """
        low = np.asarray(low, dtype=np.float64)
        high = np.asarray(high, dtype=np.float64)
        if np.max(np.abs(low[:-1] - high[:-1]), initial=0.0) > 1e-9 or high[-1] < low[-1]:
            raise NotVerticallyAligned("upper point must be directly above the lower one")
        a, b = self.query_angles(low), self.query_angles(high)
        out: list[int] = []
        D = len(a)
        for i in range(D):
            lo = a.copy()
            hi = np.full(D, np.inf)
            lo[:i] = np.maximum(a[:i], b[:i])
            hi[i] = b[i]
            out.extend(self.tree.query(lo, hi))
        return out

    def members(self, handles) -> np.ndarray:
        return self.tree.members(handles)

    # critical values ----------------------------------------------------

    def _orbit(self, yq, r, x):
        return np.append(yq, math.sqrt(max(r * r - x * x, 0.0)))

    def _query_frame(self, q):
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.frame.dim,):
            raise DimensionMismatch("query dimension differs from the book")
        yq, w = self.frame.split(q)
        return yq, self.frame.complement @ w, float(np.linalg.norm(w))

    def critical_value(self, q, row) -> float:
        """Smallest x in [0, r] whose orbit point lies in the page of ``row`` (bisection)."""
        if not self.prism_contains(q):
            raise QueryOutsidePrism("query does not project into the base simplex")
        yq, _, r = self._query_frame(q)
        if self.page_contains(row, self._orbit(yq, r, 0.0)):
            return 0.0
        if not self.page_contains(row, self._orbit(yq, r, r)):
            return math.inf
        lo, hi = 0.0, r
        tol = 1e-10 * r
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.page_contains(row, self._orbit(yq, r, mid)):
                hi = mid
            else:
                lo = mid
        return hi

    def critical_values(self, yq, r, rows, beta=None) -> np.ndarray:
        """Closed form of ``critical_value`` for many rows.

        A canonical point (y, h) is in the page of p iff the affine
        coordinates of y - (h/h_p) y_p over the base, scaled by 1/(1 - h/h_p),
        are non-negative. The largest such h at y_q follows from the affine
        coordinates of y_q and y_p.
        """
        rows = np.asarray(rows, dtype=np.int64)
        if beta is None:
            beta = self._flat_affine(yq)
        pi = self.apex_bary[rows]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(pi > 0, beta[None, :] / pi, np.inf)
        t = np.minimum(1.0, ratio.min(axis=1))
        top = np.maximum(t, 0.0) * self.canon[rows, -1]
        gamma = np.sqrt(np.maximum(r * r - top * top, 0.0))
        return np.where(top >= r, 0.0, gamma)

    def _flat_affine(self, yq):
        if self.base_coords.shape[1] == 0:
            return np.ones(1)
        return _affine_coords(self.base_coords, yq)

    # page query ---------------------------------------------------------

    def _page_distance(self, q, row, cache):
        if row not in cache:
            verts = np.vstack([self.base, self.points[self.ids[row]]])[None]
            d, bary = _kernels.simplex_distances(q, np.ascontiguousarray(verts), TOL.face_accept)
            cache[row] = (float(d[0]), bary[0])
        return cache[row][0]

    def _probe(self, q, w, yq, r, x, cache):
        """Closest positive halfflat among pages containing the orbit point at x."""
        best = (math.inf, -1)
        for h in self.simplices_containing(self._orbit(yq, r, x)):
            idx = self.tree.payload[h]
            row, dist, _ = idx.query_complement(w)
            if row < 0:
                continue
            cand = (dist, int(idx.pids[row]))
            if cand < best:
                best = cand
        if best[1] >= 0:
            self._page_distance(q, best[1], cache)
        return best[0]

    def page_query(self, q, rng=None) -> QueryResult:
        """Approximate nearest page of the book; q must lie in the prism of B."""
        q = np.ascontiguousarray(q, dtype=np.float64)
        if not self.prism_contains(q):
            raise QueryOutsidePrism("query does not project into the base simplex")
        rng = rng if rng is not None else np.random.default_rng(0)
        yq, w, r = self._query_frame(q)
        cache: dict[int, tuple] = {}
        if len(self.ids) == 0:
            return self._result(q, cache, r)
        if r <= TOL.zero_direction:
            self._page_distance(q, 0, cache)
            return self._result(q, cache, r)
        lo, hi = 0.0, r
        tol = 1e-10 * r
        beta = self._flat_affine(yq)
        cap = 8 * math.ceil(math.log2(len(self.ids) + 2))
        capped = True
        for _ in range(cap):
            handles = self.simplices_between(self._orbit(yq, r, hi), self._orbit(yq, r, lo))
            gamma = self._sample(handles, yq, r, beta, lo, hi, tol, rng)
            if gamma is None:
                capped = False
                break
            tau = self._probe(q, w, yq, r, gamma, cache)
            if tau < gamma:
                hi = gamma
            else:
                lo = gamma
        self._probe(q, w, yq, r, hi, cache)
        if capped:
            log.debug("page search hit its iteration cap; scanning the remaining pages")
            rows = self.members(self.simplices_containing(self._orbit(yq, r, hi)))
            for row in rows.tolist():
                self._page_distance(q, row, cache)
        return self._result(q, cache, r)

    def _sample(self, handles, yq, r, beta, lo, hi, tol, rng):
        """A critical value in (lo, hi), drawn uniformly over the handles' members."""
        if not handles:
            return None
        sizes = np.array([len(self.tree.canonical[h]) for h in handles])
        total = int(sizes.sum())
        if total > MAX_REJECTIONS:
            bounds = np.cumsum(sizes)
            for _ in range(MAX_REJECTIONS):
                pick = int(rng.integers(total))
                j = int(np.searchsorted(bounds, pick, side="right"))
                members = self.tree.canonical[handles[j]]
                row = members[pick - (bounds[j] - sizes[j])]
                g = float(self.critical_values(yq, r, [row], beta)[0])
                if lo + tol < g < hi - tol:
                    return g
        g = self.critical_values(yq, r, self.members(handles), beta)
        g = g[(g > lo + tol) & (g < hi - tol)]
        if len(g) == 0:
            return None
        return float(g[int(rng.integers(len(g)))])

    def _result(self, q, cache, r) -> QueryResult:
        if not cache:
            # only the base simplex itself is available
            d, bary = _kernels.simplex_distances(q, np.ascontiguousarray(self.base[None]), TOL.face_accept)
            tau = tuple((i, float(x)) for i, x in zip(self.base_ids, bary[0]))
            return QueryResult("ANIS", float(d[0]), self.base_ids, tau, bary[0] @ self.base)
        row = min(cache, key=lambda j: (cache[j][0], int(self.ids[j])))
        dist, bary = cache[row]
        witness = self.base_ids + (int(self.ids[row]),)
        verts = np.vstack([self.base, self.points[self.ids[row]]])
        tau = tuple((i, float(x)) for i, x in zip(witness, bary))
        return QueryResult("ANIS", dist, witness, tau, bary @ verts)


def book_build(points, base_ids, epsilon=0.25, config=None) -> BookIndex:
    return BookIndex(points, base_ids, (config or AnnConfig()).with_epsilon(epsilon))


def simplices_containing(index: BookIndex, x):
    return index.simplices_containing(x)


def simplices_between(index: BookIndex, low, high):
    return index.simplices_between(low, high)


def critical_value(index: BookIndex, q, row) -> float:
    return index.critical_value(q, row)


def page_query(index: BookIndex, q, rng=None) -> QueryResult:
    return index.page_query(q, rng)


def _key(res: QueryResult):
    return (res.distance, tuple(sorted(res.witness_ids)))


class AnisIndex:
    """Nearest induced simplex on k points.

    One book per (k-1)-subset plus an exact scan of every face on at most
    k-1 points. Books whose prism misses the query are skipped: when the
    nearest point of the best simplex is interior, some base on k-1 of its
    vertices has the query in its prism, and otherwise a lower face attains
    the minimum and the scan finds it.
    """

    def __init__(self, points, k: int, epsilon: float = 0.25, config: AnnConfig | None = None,
                 seed: int = 0, budget: int = DEFAULT_BUDGET):
        P = np.ascontiguousarray(as_points(points))
        if not 2 <= k <= 5:
            raise ValueError(f"k must lie in [2, 5], got {k}")
        if len(P) < k:
            raise ValueError(f"need at least k={k} points, got {len(P)}")
        count = math.comb(len(P), k - 1)
        if count > budget:
            raise InstanceTooLarge(f"{count} books exceed the budget of {budget}")
        self.points = P
        self.k = k
        self.epsilon = epsilon
        self.seed = seed
        self.config = (config or AnnConfig()).with_epsilon(epsilon)
        self.faces = subsets(len(P), k - 1)
        self.face_vertices = np.ascontiguousarray(P[self.faces])
        self.books: list[BookIndex] = []
        self.book_keys: list[int] = []
        for b, base in enumerate(self.faces):
            try:
                self.books.append(BookIndex(P, base, self.config))
                self.book_keys.append(b)
            except DegenerateBase:
                log.info("ANIS: skipping degenerate base %s", tuple(base))

    @property
    def n_structures(self) -> int:
        return len(self.books)

    def face_scan(self, q) -> QueryResult:
        dist, bary = _kernels.simplex_distances(q, self.face_vertices, TOL.face_accept)
        j = int(np.argmin(dist))
        ids = tuple(int(i) for i in self.faces[j])
        tau = tuple((i, float(x)) for i, x in zip(ids, bary[j]))
        return QueryResult("ANIS", float(dist[j]), ids, tau, bary[j] @ self.face_vertices[j])

    def query(self, q, seed: int | None = None) -> QueryResult:
        q = np.ascontiguousarray(q, dtype=np.float64)
        if q.shape != (self.points.shape[1],):
            raise DimensionMismatch("query dimension differs from the index")
        seed = self.seed if seed is None else seed
        best = self.face_scan(q)
        for key, book in zip(self.book_keys, self.books):
            if not book.prism_contains(q):
                continue
            res = book.page_query(q, np.random.default_rng([seed, key]))
            if _key(res) < _key(best):
                best = res
        return best


def anis_build(points, k, epsilon=0.25, config=None, seed=0, budget=DEFAULT_BUDGET) -> AnisIndex:
    return AnisIndex(points, k, epsilon, config, seed, budget)


def anis_query(index: AnisIndex, q, seed=None) -> QueryResult:
    return index.query(q, seed)
