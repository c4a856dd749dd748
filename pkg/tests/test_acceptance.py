"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line with its measured numbers.
Lower bounds carry 1e-9 of slack: reported and oracle distances come from
different floating-point paths and may differ in the last bits.
"""

import json
import math
import time

import numpy as np
import pytest

from sparsegeom import _kernels
from sparsegeom.ann import AnnConfig
from sparsegeom.book import AnisIndex, BookIndex
from sparsegeom.bouquet import AnifIndex
from sparsegeom.brute import exhaustive_affine, exhaustive_linear, exhaustive_simplex
from sparsegeom.cli import main
from sparsegeom.geometry import barycentric, orbit_point
from sparsegeom.offline import offline_nearest_segment
from sparsegeom.reductions import (
    default_trials,
    detect_affine_degeneracy,
    has_degenerate_subset,
    hopcroft_lift,
    ksum_trial,
    permutation_probability,
    solve_ksum,
)
from sparsegeom.star import OnlineSegmentIndex

SLACK = 1e-9


@pytest.fixture
def report(request):
    tr = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        else:  # pragma: no cover
            print(line)
        assert ok, line

    return emit


def all_segments(P, q):
    i, j = np.triu_indices(len(P), 1)
    d, _ = _kernels.segment_distances(q, np.ascontiguousarray(P[i]), np.ascontiguousarray(P[j]))
    return float(d.min())


def sandwich(report, name, linear):
    g = np.random.default_rng(101 if linear else 100)
    eps = 0.25
    start = time.perf_counter()
    worst, low, bad = 0.0, math.inf, 0
    for k in (2, 3):
        for _ in range(200):
            P = g.normal(size=(25, 6))
            q = g.normal(size=6)
            res = AnifIndex(P, k, eps, linear=linear).query(q)
            ref = (exhaustive_linear if linear else exhaustive_affine)(P, q, k).distance
            bad += not (ref - SLACK <= res.distance <= (1 + eps) * ref + SLACK)
            worst = max(worst, res.distance / ref)
            low = min(low, res.distance / ref)
    secs = time.perf_counter() - start
    ok = bad == 0 and secs < 120
    report(name, ok, f"400 trials, factor in [{low:.15f}, {worst:.15f}], bound 1.25, "
                     f"violations {bad}, {secs:.1f}s")


def test_01_anif_sandwich(report):
    sandwich(report, "ANIF sandwich", linear=False)


def test_02_anlf_sandwich(report):
    sandwich(report, "ANLF sandwich", linear=True)


def test_03_anis_bound(report):
    g = np.random.default_rng(300)
    eps = 0.2
    start = time.perf_counter()
    worst, low, bad, trials = 0.0, math.inf, 0, 0
    for inst in range(15):
        P = g.normal(size=(20, 5))
        index = AnisIndex(P, 3, eps, seed=inst)
        for q in g.normal(size=(20, 5)):
            res = index.query(q)
            ref = exhaustive_simplex(P, q, 3).distance
            trials += 1
            bad += not (ref - SLACK <= res.distance <= (1 + 2 * eps) * ref + SLACK)
            worst = max(worst, res.distance / ref)
            low = min(low, res.distance / ref)
    secs = time.perf_counter() - start
    ok = bad == 0 and trials == 300 and secs < 300
    report("ANIS bound", ok, f"{trials} trials, factor in [{low:.15f}, {worst:.15f}], bound 1.4, "
                             f"violations {bad}, {secs:.1f}s")


def test_04_online_segment(report):
    g = np.random.default_rng(400)
    eps = 0.25
    worst, bad, n = 0.0, 0, 0
    for _ in range(10):
        P = g.normal(size=(40, 5))
        index = OnlineSegmentIndex(P, eps)
        for q in g.normal(size=(20, 5)):
            res = index.query(q)
            ref = all_segments(P, q)
            n += 1
            bad += not (ref - SLACK <= res.distance <= (1 + eps) * ref + SLACK)
            worst = max(worst, res.distance / ref)
    report("online segment", bad == 0 and n == 200,
           f"{n} queries, max factor {worst:.15f}, bound 1.25, violations {bad}")


def test_05_offline_segment(report):
    g = np.random.default_rng(500)
    eps = 0.2
    worst, bad = 0.0, 0
    for _ in range(200):
        P = g.normal(size=(200, 4))
        q = g.normal(size=4)
        res = offline_nearest_segment(P, q, eps)
        ref = all_segments(P, q)
        bad += not (ref - SLACK <= res.distance <= 2 * (1 + eps) * ref + SLACK)
        worst = max(worst, res.distance / ref)
    # chord sandwich on random triples with |u - q| >= r = |p - q|
    m = 100_000
    q = g.normal(size=(m, 4))
    p = q + g.normal(size=(m, 4))
    r = np.linalg.norm(p - q, axis=1)
    v = g.normal(size=(m, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    u = q + v * (r * (1 + g.exponential(size=m)))[:, None]
    e = u - p
    t = np.clip(np.einsum("ij,ij->i", q - p, e) / np.einsum("ij,ij->i", e, e), 0, 1)
    f = np.linalg.norm(p + t[:, None] * e - q, axis=1)
    chord = np.linalg.norm((2 * q - p) - (q + r[:, None] * v), axis=1)
    sandwich_bad = int(np.sum(f > chord + SLACK) + np.sum(chord > 2 * f + SLACK))
    report("offline segment", bad == 0 and sandwich_bad == 0,
           f"200 trials, max factor {worst:.6f}, bound 2.4, violations {bad}; "
           f"f <= g <= 2f violations {sandwich_bad} of {m}")


def test_06_monotonicity(report):
    g = np.random.default_rng(600)
    bad = 0
    for _ in range(10_000):
        f = int(g.integers(0, 4))
        pH = np.concatenate([g.normal(size=f), [abs(g.normal()) * 2], [0.0]])
        qB = g.normal(size=f)
        r = g.exponential() + 1e-6
        l1, l2 = np.sort(g.uniform(0, r, 2))
        d1 = np.linalg.norm(orbit_point(qB, r, l1)[1] - pH)
        d2 = np.linalg.norm(orbit_point(qB, r, l2)[1] - pH)
        bad += d1 > d2 + SLACK
    report("monotonicity", bad == 0, f"10000 draws, violations {bad}")


def test_07_range_tree_exactness(report):
    g = np.random.default_rng(700)
    P = g.normal(size=(100, 5))
    book = BookIndex(P, (0, 1))
    rows = np.arange(len(book))
    mismatches, overlaps = 0, 0
    for _ in range(500):
        y = book.base_coords.mean(axis=0) + g.normal(size=book.base_coords.shape[1]) * 0.8
        low = np.append(y, abs(g.normal()) * 1.5)
        high = low.copy()
        high[-1] += abs(g.normal())
        inside_low = np.array([np.all(barycentric(book.page_vertices(r), low) >= -1e-10) for r in rows])
        inside_high = np.array([np.all(barycentric(book.page_vertices(r), high) >= -1e-10) for r in rows])
        for handles, want in ((book.simplices_containing(low), rows[inside_low]),
                              (book.simplices_between(low, high), rows[inside_low & ~inside_high])):
            got = book.members(handles)
            overlaps += len(got) != len(set(got.tolist()))
            mismatches += sorted(got.tolist()) != want.tolist()
    report("range-tree exactness", mismatches == 0 and overlaps == 0,
           f"{len(book)} pages, 500 queries x 2 kinds, mismatches {mismatches}, overlapping handles {overlaps}")


def planted_ksum(g):
    """Twelve distinct integers with exactly one zero-sum triple."""
    import itertools

    while True:
        a = g.integers(-1000, 1001, size=11).tolist()
        x, y = a[0], a[1]
        a.append(-(x + y))
        if len(set(a)) == 12 and sum(1 for c in itertools.combinations(a, 3) if sum(c) == 0) == 1:
            perm = g.permutation(12)
            return [a[i] for i in perm]


def test_08_ksum(report):
    g = np.random.default_rng(800)
    p = permutation_probability(3)
    nums = planted_ksum(g)
    hits = sum(ksum_trial(nums, 3, np.random.SeedSequence([800, t])) is not None for t in range(2000))
    rate = hits / 2000
    sigma = math.sqrt(p * (1 - p) / 2000)
    within = abs(rate - p) <= 3 * sigma
    solved = 0
    for rep in range(100):
        inst = planted_ksum(g)
        found = solve_ksum(inst, 3, seed=rep)
        solved += found is not None and sum(inst[i] for i in found) == 0
    false_hits = 0
    for rep in range(20):
        pos = g.integers(1, 1000, size=12).tolist()
        false_hits += solve_ksum(pos, 3, seed=rep) is not None
    ok = within and solved >= 99 and false_hits == 0
    report("k-sum reduction", ok,
           f"single-trial rate {rate:.4f} vs {p:.4f} (3 sigma = {3 * sigma:.4f}); "
           f"solve_ksum with {default_trials(3)} trials {solved}/100; all-positive non-None {false_hits}/20")


def test_09_hopcroft(report):
    g = np.random.default_rng(900)
    worst = 0.0
    for _ in range(1000):
        a, b, c, d = g.normal(size=(4, 4))
        u, v = hopcroft_lift(a, b, c, d)
        det = np.linalg.det(np.column_stack([a, b, c, d]))
        worst = max(worst, abs(u @ v - det) / abs(det))
    report("Hopcroft lift", worst <= 1e-9, f"1000 tuples, max relative error {worst:.2e}")


def planted_degenerate(g, n=60, d=3):
    P = g.normal(size=(n, d))
    normal = g.normal(size=d)
    normal /= np.linalg.norm(normal)
    idx = g.choice(n, d + 1, replace=False)
    Q = P[idx]
    # move the chosen points onto the plane through the first one
    P[idx] = Q - np.outer((Q - Q[0]) @ normal, normal)
    return P


def test_10_degeneracy(report):
    g = np.random.default_rng(1000)
    recall = sum(detect_affine_degeneracy(planted_degenerate(g), seed=s).degenerate for s in range(50))
    false_pos = 0
    for s in range(50):
        P = g.normal(size=(60, 3))
        rep = detect_affine_degeneracy(P, seed=s)
        false_pos += rep.degenerate and not has_degenerate_subset(P)
    report("degeneracy detection", false_pos == 0 and recall >= 49,
           f"planted recall {recall}/50, false positives {false_pos}/50")


def test_11_scaling(report, tmp_path):
    out = tmp_path / "bench.jsonl"
    code = main(["bench", "--variant", "anif", "--k", "2", "--backend", "tree",
                 "--n", "100,200,400,800", "--output", str(out)])
    summary = json.loads(out.read_text().splitlines()[-1])
    slope = summary["slope"]
    report("scaling sanity", code == 0 and 0.7 <= slope <= 1.5,
           f"log-log slope {slope:.3f} over n={summary['n']} (target 1.0, window [0.7, 1.5])")
