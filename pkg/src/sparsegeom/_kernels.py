"""Hot numeric loops.

Every kernel exists twice: ``_np_*`` is plain numpy (or plain Python where
the algorithm is inherently sequential, like tree traversal) and ``_nb_*`` is
the same computation compiled with ``numba.njit``. The public name binds to
the compiled variant unless ``SPARSEGEOM_DISABLE_JIT=1`` is set or numba is
missing. Both variants break ties toward the lowest index.
"""

from __future__ import annotations

import math

import numpy as np

from .config import jit_enabled

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_JIT = HAVE_NUMBA and jit_enabled()


def _njit(fn):
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# nearest point by linear scan


def _np_nearest(points, q):
    d2 = np.einsum("ij,ij->i", points - q, points - q)
    i = int(np.argmin(d2))
    return i, float(d2[i])


def _py_nearest(points, q):
    best = np.inf
    best_i = -1
    n, d = points.shape
    for i in range(n):
        s = 0.0
        for j in range(d):
            t = points[i, j] - q[j]
            s += t * t
        if s < best:
            best = s
            best_i = i
    return best_i, best


def _np_nearest_many(points, queries):
    # |p|^2 - 2 p.q + |q|^2 cancels badly; keep the explicit difference
    out_i = np.empty(len(queries), dtype=np.int64)
    out_d = np.empty(len(queries))
    for k in range(len(queries)):
        diff = points - queries[k]
        d2 = np.einsum("ij,ij->i", diff, diff)
        i = int(np.argmin(d2))
        out_i[k] = i
        out_d[k] = d2[i]
    return out_i, out_d


def _py_nearest_many(points, queries):
    m = queries.shape[0]
    out_i = np.empty(m, dtype=np.int64)
    out_d = np.empty(m)
    n, d = points.shape
    for k in range(m):
        best = np.inf
        best_i = -1
        for i in range(n):
            s = 0.0
            for j in range(d):
                t = points[i, j] - queries[k, j]
                s += t * t
            if s < best:
                best = s
                best_i = i
        out_i[k] = best_i
        out_d[k] = best
    return out_i, out_d


# --------------------------------------------------------------------------
# point to segment


def _np_segment_distances(q, a, b):
    ab = b - a
    aq = q - a
    den = np.einsum("ij,ij->i", ab, ab)
    num = np.einsum("ij,ij->i", aq, ab)
    t = np.zeros_like(den)
    nz = den > 0.0
    t[nz] = np.clip(num[nz] / den[nz], 0.0, 1.0)
    diff = aq - t[:, None] * ab
    return np.sqrt(np.einsum("ij,ij->i", diff, diff)), t


def _py_segment_distances(q, a, b):
    m, d = a.shape
    dist = np.empty(m)
    tt = np.empty(m)
    for i in range(m):
        den = 0.0
        num = 0.0
        for j in range(d):
            e = b[i, j] - a[i, j]
            den += e * e
            num += (q[j] - a[i, j]) * e
        t = 0.0
        if den > 0.0:
            t = num / den
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        s = 0.0
        for j in range(d):
            r = q[j] - a[i, j] - t * (b[i, j] - a[i, j])
            s += r * r
        dist[i] = math.sqrt(s)
        tt[i] = t
    return dist, tt


# --------------------------------------------------------------------------
# point to simplex, batched.
#
# The nearest point of a simplex lies in the relative interior of one face, and
# the projection of q onto that face's affine hull has non-negative barycentric
# coordinates. Conversely every face with a non-negative projection yields a
# point of the simplex. So the distance is the minimum over "valid" faces.


def _face_masks(s):
    masks = []
    for mask in range(1, 1 << s):
        idx = [i for i in range(s) if mask >> i & 1]
        masks.append(np.array(idx, dtype=np.int64))
    return masks


def _np_simplex_distances(q, verts, slack=1e-12):
    m, s, d = verts.shape
    best = np.full(m, np.inf)
    bary = np.zeros((m, s))
    for idx in _face_masks(s):
        face = verts[:, idx, :]
        origin = face[:, 0, :]
        if len(idx) == 1:
            coef = np.ones((m, 1))
            proj = origin
        else:
            diffs = face[:, 1:, :] - origin[:, None, :]
            gram = np.einsum("mid,mjd->mij", diffs, diffs)
            rhs = np.einsum("mid,md->mi", diffs, q - origin)
            c = np.einsum("mij,mj->mi", np.linalg.pinv(gram), rhs)
            proj = origin + np.einsum("mi,mid->md", c, diffs)
            coef = np.concatenate([1.0 - c.sum(axis=1, keepdims=True), c], axis=1)
        valid = np.all(coef >= -slack, axis=1)
        dist = np.linalg.norm(q - proj, axis=1)
        better = valid & (dist < best)
        if np.any(better):
            best[better] = dist[better]
            bary[better] = 0.0
            rows = np.nonzero(better)[0]
            bary[np.ix_(rows, idx)] = coef[better]
    return best, bary


def _py_simplex_distances(q, verts, slack=1e-12):
    m, s, d = verts.shape
    best = np.full(m, np.inf)
    bary = np.zeros((m, s))
    idx = np.empty(s, dtype=np.int64)
    gram = np.empty((s, s))
    rhs = np.empty(s)
    diffs = np.empty((s, d))
    coef = np.empty(s)
    proj = np.empty(d)
    for k in range(m):
        for mask in range(1, 1 << s):
            t = 0
            for i in range(s):
                if mask >> i & 1:
                    idx[t] = i
                    t += 1
            o = idx[0]
            f = t - 1
            for a in range(f):
                for j in range(d):
                    diffs[a, j] = verts[k, idx[a + 1], j] - verts[k, o, j]
            for a in range(f):
                r = 0.0
                for j in range(d):
                    r += diffs[a, j] * (q[j] - verts[k, o, j])
                rhs[a] = r
                for b in range(f):
                    g = 0.0
                    for j in range(d):
                        g += diffs[a, j] * diffs[b, j]
                    gram[a, b] = g
            # Gaussian elimination with partial pivoting; singular faces are
            # skipped because their points are covered by smaller faces
            scale = 0.0
            for a in range(f):
                if gram[a, a] > scale:
                    scale = gram[a, a]
            ok = True
            for col in range(f):
                piv = col
                for r_ in range(col + 1, f):
                    if abs(gram[r_, col]) > abs(gram[piv, col]):
                        piv = r_
                if abs(gram[piv, col]) <= 1e-14 * scale:
                    ok = False
                    break
                if piv != col:
                    for c_ in range(f):
                        tmp = gram[col, c_]
                        gram[col, c_] = gram[piv, c_]
                        gram[piv, c_] = tmp
                    tmp = rhs[col]
                    rhs[col] = rhs[piv]
                    rhs[piv] = tmp
                for r_ in range(col + 1, f):
                    fac = gram[r_, col] / gram[col, col]
                    for c_ in range(col, f):
                        gram[r_, c_] -= fac * gram[col, c_]
                    rhs[r_] -= fac * rhs[col]
            if not ok:
                continue
            total = 0.0
            for a in range(f - 1, -1, -1):
                acc = rhs[a]
                for b in range(a + 1, f):
                    acc -= gram[a, b] * coef[b + 1]
                coef[a + 1] = acc / gram[a, a]
                total += coef[a + 1]
            coef[0] = 1.0 - total
            valid = True
            for a in range(t):
                if coef[a] < -slack:
                    valid = False
            if not valid:
                continue
            s2 = 0.0
            for j in range(d):
                p = verts[k, o, j]
                for a in range(f):
                    p += coef[a + 1] * diffs[a, j]
                proj[j] = p
                e = q[j] - p
                s2 += e * e
            dist = math.sqrt(s2)
            if dist < best[k]:
                best[k] = dist
                for i in range(s):
                    bary[k, i] = 0.0
                for a in range(t):
                    bary[k, idx[a]] = coef[a]
    return best, bary


# --------------------------------------------------------------------------
# fused exact scan over a packed family of bouquets.
#
# Base i has origin origins[i] and orthonormal flat directions flats[i] (rows).
# Its unit directions live in dirs[ptr[i]:ptr[i+1]] with owners pids[...].
# For each base: project q onto the complement, normalise, pick the nearest
# stored direction, and return the exact distance from q to the flat (or to
# the positive halfflat when ``positive``) spanned by the base and that owner.


def _np_bouquet_scan(q, origins, flats, ptr, dirs, pids, positive):
    m = origins.shape[0]
    w = q[None, :] - origins
    if flats.shape[1] > 0:
        coef = np.einsum("mfd,md->mf", flats, w)
        w = w - np.einsum("mf,mfd->md", coef, flats)
    r = np.sqrt(np.einsum("md,md->m", w, w))
    best_pid = np.full(m, -1, dtype=np.int64)
    best_dist = r.copy()
    counts = np.diff(ptr)
    live = (counts > 0) & (r > 1e-12)
    if not np.any(live):
        return best_pid, best_dist, r
    owner = np.repeat(np.arange(m), counts)
    u = np.zeros_like(w)
    u[live] = w[live] / r[live, None]
    diff = dirs - u[owner]
    d2 = np.einsum("td,td->t", diff, diff)
    d2[~live[owner]] = np.inf
    seg_min = np.full(m, np.inf)
    np.minimum.at(seg_min, owner, d2)
    hit = np.nonzero(d2 == seg_min[owner])[0]
    first_owner, first_pos = np.unique(owner[hit], return_index=True)
    chosen = hit[first_pos]
    keep = live[first_owner]
    first_owner = first_owner[keep]
    chosen = chosen[keep]
    dots = np.einsum("td,td->t", dirs[chosen], w[first_owner])
    if positive:
        dots = np.maximum(dots, 0.0)
    rr = r[first_owner]
    best_pid[first_owner] = pids[chosen]
    best_dist[first_owner] = np.sqrt(np.maximum(rr * rr - dots * dots, 0.0))
    return best_pid, best_dist, r


def _py_bouquet_scan(q, origins, flats, ptr, dirs, pids, positive):
    m, d = origins.shape
    f = flats.shape[1]
    best_pid = np.full(m, -1, dtype=np.int64)
    best_dist = np.empty(m)
    rr = np.empty(m)
    w = np.empty(d)
    for i in range(m):
        for j in range(d):
            w[j] = q[j] - origins[i, j]
        for a in range(f):
            c = 0.0
            for j in range(d):
                c += flats[i, a, j] * w[j]
            for j in range(d):
                w[j] -= c * flats[i, a, j]
        r2 = 0.0
        for j in range(d):
            r2 += w[j] * w[j]
        r = math.sqrt(r2)
        rr[i] = r
        best_dist[i] = r
        if r <= 1e-12 or ptr[i + 1] == ptr[i]:
            continue
        bt = -1
        bd = np.inf
        for t in range(ptr[i], ptr[i + 1]):
            s = 0.0
            for j in range(d):
                e = dirs[t, j] - w[j] / r
                s += e * e
            if s < bd:
                bd = s
                bt = t
        dot = 0.0
        for j in range(d):
            dot += dirs[bt, j] * w[j]
        if positive and dot < 0.0:
            dot = 0.0
        h2 = r2 - dot * dot
        best_pid[i] = pids[bt]
        best_dist[i] = math.sqrt(h2) if h2 > 0.0 else 0.0
    return best_pid, best_dist, rr


# --------------------------------------------------------------------------
# kd-tree with sliding-midpoint splits and (1+eps)-approximate search.
# Written in the numba subset; the fallback runs the same source uncompiled.


def _py_kd_build(points, leaf_size):
    n, d = points.shape
    max_nodes = 2 * n + 1
    perm = np.arange(n)
    start = np.zeros(max_nodes, dtype=np.int64)
    end = np.zeros(max_nodes, dtype=np.int64)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    box_lo = np.zeros((max_nodes, d))
    box_hi = np.zeros((max_nodes, d))
    cell_lo = np.zeros((max_nodes, d))
    cell_hi = np.zeros((max_nodes, d))
    start[0] = 0
    end[0] = n
    for j in range(d):
        lo = np.inf
        hi = -np.inf
        for i in range(n):
            v = points[i, j]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        cell_lo[0, j] = lo
        cell_hi[0, j] = hi
    count = 1
    stack = np.empty(max_nodes, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        s = start[node]
        e = end[node]
        spread_dim = 0
        spread = -1.0
        for j in range(d):
            lo = np.inf
            hi = -np.inf
            for i in range(s, e):
                v = points[perm[i], j]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            box_lo[node, j] = lo
            box_hi[node, j] = hi
            if hi - lo > spread:
                spread = hi - lo
                spread_dim = j
        if e - s <= leaf_size or spread <= 0.0:
            continue
        dim = 0
        ext = -1.0
        for j in range(d):
            if cell_hi[node, j] - cell_lo[node, j] > ext:
                ext = cell_hi[node, j] - cell_lo[node, j]
                dim = j
        if box_hi[node, dim] - box_lo[node, dim] <= 0.0:
            dim = spread_dim
        split = 0.5 * (cell_lo[node, dim] + cell_hi[node, dim])
        if split < box_lo[node, dim] or split > box_hi[node, dim]:
            split = 0.5 * (box_lo[node, dim] + box_hi[node, dim])
        # partition [s, e) on coord < split
        i = s
        j2 = e - 1
        while i <= j2:
            if points[perm[i], dim] < split:
                i += 1
            else:
                tmp = perm[i]
                perm[i] = perm[j2]
                perm[j2] = tmp
                j2 -= 1
        mid = i
        if mid == s:
            # slide to the minimum: points equal to it go left
            split = box_lo[node, dim]
            i = s
            j2 = e - 1
            while i <= j2:
                if points[perm[i], dim] <= split:
                    i += 1
                else:
                    tmp = perm[i]
                    perm[i] = perm[j2]
                    perm[j2] = tmp
                    j2 -= 1
            mid = i
        elif mid == e:
            # slide to the maximum: points equal to it go right
            split = box_hi[node, dim]
            i = s
            j2 = e - 1
            while i <= j2:
                if points[perm[i], dim] < split:
                    i += 1
                else:
                    tmp = perm[i]
                    perm[i] = perm[j2]
                    perm[j2] = tmp
                    j2 -= 1
            mid = i
        lc = count
        rc = count + 1
        count += 2
        left[node] = lc
        right[node] = rc
        start[lc] = s
        end[lc] = mid
        start[rc] = mid
        end[rc] = e
        for j in range(d):
            cell_lo[lc, j] = cell_lo[node, j]
            cell_hi[lc, j] = cell_hi[node, j]
            cell_lo[rc, j] = cell_lo[node, j]
            cell_hi[rc, j] = cell_hi[node, j]
        cell_hi[lc, dim] = split
        cell_lo[rc, dim] = split
        stack[top] = lc
        top += 1
        stack[top] = rc
        top += 1
    return (perm, start[:count].copy(), end[:count].copy(), left[:count].copy(),
            right[:count].copy(), box_lo[:count].copy(), box_hi[:count].copy())


def _py_kd_query(points, perm, start, end, left, right, box_lo, box_hi, q, eps):
    scale = (1.0 + eps) * (1.0 + eps)
    best = np.inf
    best_i = -1
    n_nodes = start.shape[0]
    stack = np.empty(n_nodes + 1, dtype=np.int64)
    sdist = np.empty(n_nodes + 1)
    top = 0
    stack[0] = 0
    d = q.shape[0]
    s0 = 0.0
    for j in range(d):
        v = q[j]
        if v < box_lo[0, j]:
            s0 += (box_lo[0, j] - v) ** 2
        elif v > box_hi[0, j]:
            s0 += (v - box_hi[0, j]) ** 2
    sdist[0] = s0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if sdist[top] * scale >= best:
            continue
        if left[node] < 0:
            for t in range(start[node], end[node]):
                i = perm[t]
                s = 0.0
                for j in range(d):
                    e = points[i, j] - q[j]
                    s += e * e
                if s < best or (s == best and i < best_i):
                    best = s
                    best_i = i
            continue
        a = left[node]
        b = right[node]
        da = 0.0
        db = 0.0
        for j in range(d):
            v = q[j]
            if v < box_lo[a, j]:
                da += (box_lo[a, j] - v) ** 2
            elif v > box_hi[a, j]:
                da += (v - box_hi[a, j]) ** 2
            if v < box_lo[b, j]:
                db += (box_lo[b, j] - v) ** 2
            elif v > box_hi[b, j]:
                db += (v - box_hi[b, j]) ** 2
        if da <= db:
            stack[top] = b
            sdist[top] = db
            top += 1
            stack[top] = a
            sdist[top] = da
            top += 1
        else:
            stack[top] = a
            sdist[top] = da
            top += 1
            stack[top] = b
            sdist[top] = db
            top += 1
    return best_i, best


# --------------------------------------------------------------------------
# bindings

_nb_nearest = _njit(_py_nearest)
_nb_segment_distances = _njit(_py_segment_distances)
_nb_simplex_distances = _njit(_py_simplex_distances)
_nb_bouquet_scan = _njit(_py_bouquet_scan)
_nb_kd_build = _njit(_py_kd_build)
_nb_kd_query = _njit(_py_kd_query)
_nb_nearest_many = _njit(_py_nearest_many)

_np_kd_build = _py_kd_build
_np_kd_query = _py_kd_query

if USE_JIT:
    nearest = _nb_nearest
    nearest_many = _nb_nearest_many
    segment_distances = _nb_segment_distances
    simplex_distances = _nb_simplex_distances
    bouquet_scan = _nb_bouquet_scan
    kd_build = _nb_kd_build
    kd_query = _nb_kd_query
else:
    nearest = _np_nearest
    nearest_many = _np_nearest_many
    segment_distances = _np_segment_distances
    simplex_distances = _np_simplex_distances
    bouquet_scan = _np_bouquet_scan
    kd_build = _np_kd_build
    kd_query = _np_kd_query


def backend_name() -> str:
    return "numba" if USE_JIT else "numpy"
