import math

import numpy as np
import pytest

from sparsegeom.ann import AnnConfig
from sparsegeom.brute import exhaustive_segment
from sparsegeom.errors import EmptySlice, IndexOutOfRange, NonUniformInput, TooFewPoints
from sparsegeom.geometry import segment_distance
from sparsegeom.star import OnlineSegmentIndex, PrefixAnnIndex, StarIndex, UniformStarIndex


def unit_rows(rng, n, d):
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_uniform_star_example():
    idx = UniformStarIndex([0.0, 0], [[1.0, 0], [0, 1]], base_id=9)
    res = idx.query([math.sqrt(0.5), math.sqrt(0.5)])
    assert res.distance == pytest.approx(math.sqrt(0.5))


def test_uniform_star_bound(rng):
    for backend in ("exact", "tree"):
        cfg = AnnConfig(epsilon=0.2, backend=backend)
        tips = unit_rows(rng, 50, 4)
        idx = UniformStarIndex(np.zeros(4), tips, cfg, base_id=0)
        for q in unit_rows(rng, 30, 4):
            exact = min(min(segment_distance(q, np.zeros(4), t)[0] for t in tips), 1.0)
            assert idx.query(q).distance <= (1 + cfg.epsilon) * exact + 1e-9
            assert idx.query(q).distance <= 1.0 + 1e-12


def test_uniform_star_rejects():
    with pytest.raises(NonUniformInput):
        UniformStarIndex([0.0, 0], [[2.0, 0]])
    idx = UniformStarIndex([0.0, 0], [[1.0, 0]])
    with pytest.raises(NonUniformInput):
        idx.query([3.0, 0])


def test_prefix_ann_exact(rng):
    P = rng.normal(size=(37, 3))
    idx = PrefixAnnIndex(P)
    for i in range(1, 38):
        nodes = idx.canonical_nodes(i)
        covered = sorted(x for n in nodes for x in range(idx.lo[n], idx.hi[n]))
        assert covered == list(range(i))
        assert len(nodes) <= 2 * math.ceil(math.log2(37)) + 1
        q = rng.normal(size=3)
        pos, dist = idx.query(i, q)
        assert pos == int(np.argmin(np.linalg.norm(P[:i] - q, axis=1)))
    with pytest.raises(IndexOutOfRange):
        idx.canonical_nodes(0)
    with pytest.raises(IndexOutOfRange):
        idx.canonical_nodes(38)


def test_star_ordering_and_slices(rng):
    P = rng.normal(size=(20, 3))
    star = StarIndex(np.zeros(3), P)
    assert np.all(np.diff(star.radii) <= 0)
    for r in (0.1, 0.8, 1.5):
        assert star.slice_size(r) == int((np.linalg.norm(P, axis=1) >= r).sum())
    with pytest.raises(EmptySlice):
        star.sliced_query(np.ones(3), 1e6)


def test_sliced_query_is_exact_on_exact_backend(rng):
    P = rng.normal(size=(30, 3))
    star = StarIndex(np.zeros(3), P)
    q = rng.normal(size=3)
    r = 0.7
    tip, dist = star.sliced_query(q, r)
    radii = np.linalg.norm(P, axis=1)
    ok = radii >= r
    on_sphere = r * P[ok] / radii[ok, None]
    assert dist == pytest.approx(np.linalg.norm(on_sphere - q, axis=1).min())


@pytest.mark.parametrize("backend", ["exact", "tree"])
def test_star_query_bound(rng, backend):
    P = rng.normal(size=(25, 4))
    c = rng.normal(size=4)
    cfg = AnnConfig(epsilon=0.5, backend=backend)
    star = StarIndex(c, P, cfg, center_id=99)
    for q in rng.normal(size=(10, 4)):
        exact = min(segment_distance(q, c, p)[0] for p in P)
        res = star.query(q)
        assert exact - 1e-9 <= res.distance <= 1.5 * exact + 1e-9
        assert 99 in res.witness_ids


def test_online_segment(rng):
    P = rng.normal(size=(12, 3))
    idx = OnlineSegmentIndex(P, 0.25)
    for q in rng.normal(size=(20, 3)):
        res = idx.query(q)
        oracle = exhaustive_segment(P, q).distance
        assert oracle - 1e-9 <= res.distance <= 1.25 * oracle + 1e-9
        i, j = res.witness_ids
        assert segment_distance(q, P[i], P[j])[0] == pytest.approx(res.distance)
    with pytest.raises(TooFewPoints):
        OnlineSegmentIndex(P[:1])


def test_online_segment_small_example():
    P = [[0.0, 0], [2, 0], [0, 5]]
    res = OnlineSegmentIndex(P).query([1.0, 1.0])
    assert res.distance == pytest.approx(3 / math.sqrt(29)) and res.witness_ids == (1, 2)


def star_distance(c, P, q):
    from sparsegeom import _kernels
    a = np.broadcast_to(c, P.shape).copy()
    return min(float(_kernels.segment_distances(q, a, np.ascontiguousarray(P))[0].min()),
               float(np.linalg.norm(q - c)))


def test_far_case_factor(rng):
    eps = 0.25
    hits = 0
    for _ in range(300):
        c = rng.normal(size=3)
        P = c + rng.normal(size=(15, 3))
        q = c + rng.normal(size=3) * 2
        r = np.linalg.norm(q - c)
        best = star_distance(c, P, q)
        if best < r * math.sqrt(eps) / 2:
            continue
        hits += 1
        res = StarIndex(c, P, AnnConfig(epsilon=eps)).query(q)
        assert best - 1e-9 <= res.distance <= (1 + eps / 2) * best + 1e-9
    assert hits > 50


def test_near_case_points_suffice(rng):
    eps = 0.25
    hits = 0
    for _ in range(10_000):
        d = 3
        q = rng.normal(size=d)
        q /= np.linalg.norm(q)
        # tips inside the unit ball, clustered around the query direction
        dirs = q + rng.normal(size=(4, d)) * 0.3
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        P = dirs * rng.uniform(0.7, 1.0, size=(4, 1))
        c = np.zeros(d)
        s = star_distance(c, P, q)
        if s > math.sqrt(eps) / 2:
            continue
        hits += 1
        pts = min(np.linalg.norm(P - q, axis=1).min(), 1.0)
        assert pts <= (1 + eps / 4) * s + 1e-9
    assert hits > 1000


def test_uniform_star_orthogonal_case_is_capped():
    res = UniformStarIndex([0.0, 0], [[1.0, 0]], base_id=0).query([0.0, 1.0])
    assert res.distance == pytest.approx(1.0)
