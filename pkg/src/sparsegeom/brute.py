"""Exhaustive oracles: scan every k-subset and keep the exact minimum.

Ties go to the lexicographically smallest subset, which is also the order
``itertools.combinations`` produces.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import _kernels
from .geometry import QueryResult, as_points

CHUNK = 20000


def subsets(n: int, k: int) -> np.ndarray:
    """All k-subsets of range(n) as an ``(C(n,k), k)`` array in lexicographic order."""
    count = math.comb(n, k)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), k)),
                       dtype=np.int64, count=count * k)
    return flat.reshape(count, k)


def _chunks(n, k):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), k)


def _residuals(diffs, rhs):
    """Least-squares residual of ``rhs`` against the row spaces of ``diffs``.

    diffs: (m, s, d), rhs: (m, d). Returns (distances, coefficients (m, s)).
    """
    if diffs.shape[1] == 0:
        return np.sqrt(np.einsum("md,md->m", rhs, rhs)), np.zeros((len(rhs), 0))
    coef = np.einsum("msd,md->ms", np.linalg.pinv(np.transpose(diffs, (0, 2, 1))), rhs)
    res = rhs - np.einsum("ms,msd->md", coef, diffs)
    return np.sqrt(np.einsum("md,md->m", res, res)), coef


def _best(dist):
    # argmin keeps the first (lexicographically smallest) subset on ties
    return int(np.argmin(dist))


def exhaustive_affine(points, q, k: int) -> QueryResult:
    """Nearest affine hull of any k input points."""
    P = as_points(points)
    q = np.asarray(q, dtype=np.float64)
    best = (math.inf, None, None)
    for idx in _chunks(len(P), k):
        V = P[idx]
        dist, coef = _residuals(V[:, 1:] - V[:, :1], q - V[:, 0])
        j = _best(dist)
        if dist[j] < best[0]:
            best = (float(dist[j]), idx[j], coef[j])
    dist, ids, c = best
    w = np.concatenate([[1.0 - c.sum()], c])
    tau = tuple((int(i), float(x)) for i, x in zip(ids, w))
    near = w @ P[ids]
    return QueryResult("AffineSLR", dist, tuple(int(i) for i in ids), tau, near)


def exhaustive_linear(points, q, k: int) -> QueryResult:
    """Nearest linear span of any k input points."""
    P = as_points(points)
    q = np.asarray(q, dtype=np.float64)
    best = (math.inf, None, None)
    for idx in _chunks(len(P), k):
        V = P[idx]
        dist, coef = _residuals(V, np.broadcast_to(q, (len(V), len(q))))
        j = _best(dist)
        if dist[j] < best[0]:
            best = (float(dist[j]), idx[j], coef[j])
    dist, ids, c = best
    tau = tuple((int(i), float(x)) for i, x in zip(ids, c))
    return QueryResult("SLR", dist, tuple(int(i) for i in ids), tau, c @ P[ids])


def exhaustive_simplex(points, q, k: int) -> QueryResult:
    """Nearest convex hull of any k input points (faces included)."""
    P = as_points(points)
    q = np.ascontiguousarray(q, dtype=np.float64)
    k = min(k, len(P))
    best = (math.inf, None, None)
    for idx in _chunks(len(P), k):
        dist, bary = _kernels.simplex_distances(q, np.ascontiguousarray(P[idx]), 1e-12)
        j = _best(dist)
        if dist[j] < best[0]:
            best = (float(dist[j]), idx[j], bary[j])
    dist, ids, w = best
    tau = tuple((int(i), float(x)) for i, x in zip(ids, w))
    return QueryResult("ConvexSLR", dist, tuple(int(i) for i in ids), tau, w @ P[ids])


def exhaustive_segment(points, q) -> QueryResult:
    """Nearest segment between two input points."""
    P = as_points(points)
    q = np.ascontiguousarray(q, dtype=np.float64)
    idx = subsets(len(P), 2)
    dist, t = _kernels.segment_distances(q, np.ascontiguousarray(P[idx[:, 0]]),
                                         np.ascontiguousarray(P[idx[:, 1]]))
    j = _best(dist)
    a, b = int(idx[j, 0]), int(idx[j, 1])
    tj = float(t[j])
    near = (1 - tj) * P[a] + tj * P[b]
    return QueryResult("Segment", float(dist[j]), (a, b), ((a, 1.0 - tj), (b, tj)), near)


def oracle_for(variant: str):
    """Map a CLI variant name to ``(oracle(points, q, k), result variant)``."""
    table = {
        "slr": exhaustive_linear,
        "anlf": exhaustive_linear,
        "anif": exhaustive_affine,
        "anis": exhaustive_simplex,
        "segment": lambda P, q, k: exhaustive_segment(P, q),
        "segment-offline": lambda P, q, k: exhaustive_segment(P, q),
    }
    return table[variant]
