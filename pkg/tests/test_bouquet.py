import itertools
import math

import numpy as np
import pytest

from sparsegeom.ann import AnnConfig
from sparsegeom.bouquet import AnifIndex, BouquetIndex, PositiveBouquetIndex
from sparsegeom.brute import exhaustive_affine, exhaustive_linear
from sparsegeom.errors import InstanceTooLarge
from sparsegeom.geometry import flat_distance, linear_flat_distance

# Instance: P = default_rng(3).normal(size=(8, 4)), q = 0.5 * normal(size=4)
# from the same generator, k = 3. Optima from an independent
# normal-equations solve over all triples.
ANIF_DIST, ANIF_SET = 0.22688842414410546, (0, 4, 6)
ANLF_DIST, ANLF_SET = 0.04873778090521652, (1, 6, 7)


def frozen_instance():
    g = np.random.default_rng(3)
    P = g.normal(size=(8, 4))
    return P, g.normal(size=4) * 0.5


def test_bouquet_example():
    idx = BouquetIndex([[0.0, 0, 0]], [[1.0, 0, 0], [0, 1, 0]])
    res = idx.query([2.0, 0.1, 0])
    assert res.distance == pytest.approx(0.1) and res.witness_ids == (0,)


def test_positive_bouquet_example():
    idx = PositiveBouquetIndex([[0.0, 0]], [[1.0, 0]])
    assert idx.query([-3.0, 4.0]).distance == pytest.approx(5.0)
    assert BouquetIndex([[0.0, 0]], [[1.0, 0]]).query([-3.0, 4.0]).distance == pytest.approx(4.0)


def test_bouquet_excludes_points_on_base_flat():
    idx = BouquetIndex([[0.0, 0], [1.0, 0]], [[5.0, 0], [0, 1]])
    assert idx.excluded == (0,)


@pytest.mark.parametrize("backend", ["exact", "tree"])
def test_bouquet_bound(rng, backend):
    base = rng.normal(size=(2, 5))
    P = rng.normal(size=(30, 5))
    cfg = AnnConfig(epsilon=0.25, backend=backend)
    for cls in (BouquetIndex, PositiveBouquetIndex):
        idx = cls(base, P, cfg)
        for q in rng.normal(size=(10, 5)):
            if cls is BouquetIndex:
                exact = min(flat_distance(np.vstack([base, p]), q)[0] for p in P)
            else:
                # halfflat distance by a dense scan of the ray parameter
                exact = math.inf
                for p in P:
                    d, proj, c = flat_distance(np.vstack([base, p]), q)
                    if c[-1] >= 0:
                        exact = min(exact, d)
                    else:
                        exact = min(exact, flat_distance(base, q)[0])
            res = idx.query(q)
            assert exact - 1e-9 <= res.distance <= 1.25 * exact + 1e-9


def test_anif_frozen():
    P, q = frozen_instance()
    res = AnifIndex(P, 3, 0.25).query(q)
    assert res.distance == pytest.approx(ANIF_DIST, abs=1e-12)
    assert tuple(sorted(res.witness_ids)) == ANIF_SET
    assert exhaustive_affine(P, q, 3).distance == pytest.approx(ANIF_DIST, abs=1e-12)


def test_anlf_frozen():
    P, q = frozen_instance()
    res = AnifIndex(P, 3, 0.25, linear=True).query(q)
    assert res.distance == pytest.approx(ANLF_DIST, abs=1e-12)
    assert tuple(sorted(res.witness_ids)) == ANLF_SET
    assert exhaustive_linear(P, q, 3).distance == pytest.approx(ANLF_DIST, abs=1e-12)


@pytest.mark.parametrize("backend", ["exact", "tree"])
@pytest.mark.parametrize("k", [2, 3, 4])
def test_anif_anlf_bound(rng, backend, k):
    P = rng.normal(size=(12, 6))
    cfg = AnnConfig(backend=backend)
    anif = AnifIndex(P, k, 0.25, cfg)
    anlf = AnifIndex(P, k, 0.25, cfg, linear=True)
    for q in rng.normal(size=(8, 6)):
        a, b = anif.query(q), exhaustive_affine(P, q, k)
        assert b.distance - 1e-9 <= a.distance <= 1.25 * b.distance + 1e-9
        a, b = anlf.query(q), exhaustive_linear(P, q, k)
        assert b.distance - 1e-9 <= a.distance <= 1.25 * b.distance + 1e-9
        assert len(set(a.witness_ids)) == k
        assert np.allclose(sum(c * P[i] for i, c in a.tau), a.nearest, atol=1e-8)


def test_anif_skips_degenerate_bases():
    P = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0], [0, 0, 1]])
    idx = AnifIndex(P, 3)
    assert idx.n_structures == math.comb(5, 2)
    idx4 = AnifIndex(P, 4)
    assert idx4.n_structures == math.comb(5, 3) - 1
    q = np.array([0.3, 0.3, 0.3])
    assert idx4.query(q).distance == pytest.approx(exhaustive_affine(P, q, 4).distance)


def test_budget():
    with pytest.raises(InstanceTooLarge):
        AnifIndex(np.random.default_rng(0).normal(size=(30, 3)), 3, budget=100)


def test_anif_query_on_flat():
    P = np.array([[0.0, 0], [1, 0], [0, 1]])
    res = AnifIndex(P, 2).query([0.5, 0.0])
    assert res.distance == pytest.approx(0, abs=1e-12)


def test_witness_is_sorted_minimum_on_ties():
    # square: several lines tie for the centre query
    P = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]])
    res = AnifIndex(P, 2).query([0.5, 0.5])
    ties = [c for c in itertools.combinations(range(4), 2)
            if flat_distance(P[list(c)], [0.5, 0.5])[0] <= res.distance + 1e-12]
    assert tuple(sorted(res.witness_ids)) == min(ties)


def test_bouquet_distance_in_complement_matches_ambient(rng):
    from sparsegeom.geometry import orthonormal_frame

    for _ in range(30):
        base = rng.normal(size=(2, 5))
        P = rng.normal(size=(6, 5))
        q = rng.normal(size=5)
        f = orthonormal_frame(base)
        ambient = min(flat_distance(np.vstack([base, p]), q)[0] for p in P)
        w = f.complement_coords(q)
        lines = [f.complement_coords(p) for p in P]
        reduced = min(linear_flat_distance(np.array([u]), w)[0] for u in lines)
        assert ambient == pytest.approx(reduced, abs=1e-8)


def test_argmin_invariant_under_complement_scaling(rng):
    from sparsegeom.geometry import orthonormal_frame

    base = rng.normal(size=(2, 5))
    P = rng.normal(size=(20, 5))
    idx = BouquetIndex(base, P)
    f = orthonormal_frame(base)
    for q in rng.normal(size=(10, 5)):
        y, w = f.split(q)
        want = idx.query(q).witness_ids
        for s in (0.1, 3.0, 40.0):
            assert idx.query(f.origin + y @ f.flat_basis + s * w).witness_ids == want
