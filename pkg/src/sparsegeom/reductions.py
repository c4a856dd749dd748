"""Executable reductions: k-sum to nearest induced flat/simplex, the 4x4
determinant as an inner product in R^24, and affine-degeneracy detection by
nearest-induced-flat queries.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ann import AnnConfig
from .book import AnisIndex
from .bouquet import AnifIndex
from .errors import DimensionNot4
from .geometry import as_points

log = logging.getLogger(__name__)

ZERO_DISTANCE = 1e-7


@dataclass(frozen=True)
class LiftedInstance:
    """Vectors ``(a_i, e_{s_i})`` in R^{k+1} and the query ``(0, 1/k, ..., 1/k)``.

    ``slots`` holds the 1-based coordinate (in 2..k+1) set to one in each vector.
    """

    vectors: np.ndarray
    query: np.ndarray
    slots: tuple
    seed: object = None


def ksum_lift(numbers, k: int, seed=None, slots=None) -> LiftedInstance:
    a = np.asarray(numbers, dtype=np.int64)
    if k < 2 or len(a) < k:
        raise ValueError("need k >= 2 and at least k numbers")
    if slots is None:
        rng = np.random.default_rng(seed)
        slots = rng.integers(2, k + 2, size=len(a))
    slots = np.asarray(slots, dtype=np.int64)
    if slots.shape != a.shape or slots.min() < 2 or slots.max() > k + 1:
        raise ValueError("slots must hold one coordinate in 2..k+1 per number")
    V = np.zeros((len(a), k + 1))
    V[:, 0] = a
    V[np.arange(len(a)), slots - 1] = 1.0
    q = np.full(k + 1, 1.0 / k)
    q[0] = 0.0
    return LiftedInstance(V, q, tuple(int(s) for s in slots), seed)


def _trial_seed(seed, trial):
    return np.random.SeedSequence([int(seed), int(trial)])


def ksum_trial(numbers, k: int, seed, epsilon: float = 0.25, method: str = "anif",
               config: AnnConfig | None = None):
    """One lift and one query; the zero-sum index tuple or None."""
    a = [int(x) for x in numbers]
    inst = ksum_lift(a, k, seed)
    if method == "anif":
        index = AnifIndex(inst.vectors, k, epsilon, config)
    elif method == "anis":
        index = AnisIndex(inst.vectors, k, epsilon, config)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = index.query(inst.query)
    witness = tuple(sorted(set(res.witness_ids)))
    if res.distance < ZERO_DISTANCE and len(witness) == k and sum(a[i] for i in witness) == 0:
        return witness
    return None


def default_trials(k: int) -> int:
    return 8 * math.ceil(math.e**k)


def solve_ksum(numbers, k: int, epsilon: float = 0.25, trials: int | None = None, seed: int = 0,
               method: str = "anif", config: AnnConfig | None = None):
    """Indices of k numbers summing to zero, or None.

    Each trial succeeds on a planted solution with probability k!/k^k, and a
    reported subset is checked in integer arithmetic, so None may be wrong
    but a returned subset never is.
    """
    trials = default_trials(k) if trials is None else trials
    if trials < 1:
        raise ValueError("trials must be at least 1")
    for t in range(trials):
        found = ksum_trial(numbers, k, _trial_seed(seed, t), epsilon, method, config)
        if found is not None:
            log.debug("k-sum solved on trial %d", t)
            return found
    return None


def permutation_probability(k: int) -> float:
    return math.factorial(k) / k**k


# ---------------------------------------------------------------------------
# determinant as an inner product


def _perm_sign(p):
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


_PAIRS = [(i, j) for i, j in itertools.permutations(range(4), 2)]
_TERMS = []
for _i, _j in _PAIRS:
    _k, _l = [x for x in range(4) if x not in (_i, _j)]
    _TERMS.append((_i, _j, _k, _l, _perm_sign((_i, _j, _k, _l))))


def _check4(*vs):
    out = []
    for v in vs:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (4,):
            raise DimensionNot4(f"expected a point in R^4, got shape {v.shape}")
        out.append(v)
    return out


def hopcroft_lift_u(a, b) -> np.ndarray:
    a, b = _check4(a, b)
    u = np.empty(24)
    for t, (i, j, _, _, s) in enumerate(_TERMS):
        u[2 * t] = s * a[i] * b[j]
        u[2 * t + 1] = -s * a[i] * b[j]
    return u


def hopcroft_lift_v(c, d) -> np.ndarray:
    c, d = _check4(c, d)
    v = np.empty(24)
    for t, (_, _, k, l, _) in enumerate(_TERMS):
        v[2 * t] = c[k] * d[l]
        v[2 * t + 1] = c[l] * d[k]
    return v


def hopcroft_lift(a, b, c, d):
    """Vectors u(a, b), v(c, d) in R^24 with <u, v> = det[a b c d]."""
    return hopcroft_lift_u(a, b), hopcroft_lift_v(c, d)


# ---------------------------------------------------------------------------
# affine degeneracy


@dataclass(frozen=True)
class DegeneracyReport:
    degenerate: bool
    witness: tuple | None
    min_distance: float
    samples: int


def spread(points) -> float:
    P = as_points(points)
    return float(np.max(P.max(axis=0) - P.min(axis=0))) or 1.0


def is_dependent(points, tol: float) -> bool:
    """Exact-arithmetic stand-in: smallest singular value of the differences below ``tol``."""
    P = as_points(points)
    diffs = P[1:] - P[0]
    return bool(np.linalg.svd(diffs, compute_uv=False).min() <= tol)


def has_degenerate_subset(points) -> bool:
    """Exhaustive check over all (d+1)-subsets."""
    P = as_points(points)
    tol = 1e-9 * spread(P)
    return any(is_dependent(P[list(c)], tol) for c in itertools.combinations(range(len(P)), P.shape[1] + 1))


def detect_affine_degeneracy(points, seed: int = 0, samples: int | None = None,
                             epsilon: float = 0.25, config: AnnConfig | None = None) -> DegeneracyReport:
    """Look for d+1 points of P on a common hyperplane.

    Each sample keeps every point with probability 1/2 and indexes the
    hyperplanes through d sampled points; every unsampled point then asks
    for its nearest such hyperplane. A near-zero answer is confirmed by a
    rank test on the d+1 points before it is reported.
    """
    P = as_points(points)
    n, d = P.shape
    if n < d + 1:
        raise ValueError("need at least d+1 points")
    scale = spread(P)
    threshold = 1e-9 * scale
    samples = samples or 8 * math.ceil(math.log2(n))
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(samples):
        keep = rng.random(n) < 0.5
        inside = np.flatnonzero(keep)
        if len(inside) < d:
            continue
        index = AnifIndex(P[inside], d, epsilon, config) if d >= 2 else None
        for q in np.flatnonzero(~keep).tolist():
            if index is None:
                # d = 1: a hyperplane is a single point
                dist = np.abs(P[inside, 0] - P[q, 0])
                j = int(np.argmin(dist))
                found, witness = float(dist[j]), (int(inside[j]),)
            else:
                res = index.query(P[q])
                found, witness = res.distance, tuple(int(inside[i]) for i in res.witness_ids)
            best = min(best, found)
            if found < threshold:
                cand = tuple(sorted(set(witness) | {q}))
                if len(cand) == d + 1 and is_dependent(P[list(cand)], threshold):
                    return DegeneracyReport(True, cand, found, samples)
    return DegeneracyReport(False, None, best, samples)
