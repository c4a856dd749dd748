"""Linear-algebra and simplex primitives shared by the query structures.

Points are numpy vectors; a point set is an ``(n, d)`` float array whose row
index is the point id. The canonical frame of a base sequence ``B`` gives
coordinates in which ``flat(B)`` is ``R^{k-2} x {0}`` and the canonical
halfflat ``G`` is ``R^{k-2} x R^+``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .config import TOL
from .errors import (
    DegenerateAux,
    DegenerateBase,
    DegenerateSimplex,
    DimensionMismatch,
    NotRealizable,
    OnFlat,
    OutOfRange,
)

VARIANTS = ("SLR", "ANLF", "AffineSLR", "ANIF", "ConvexSLR", "ANIS", "Segment")


@dataclass(frozen=True)
class PointSet:
    """Immutable ``(n, d)`` coordinate array; ids are row positions."""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise DimensionMismatch(f"expected an (n, d) array with d >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("point coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __getitem__(self, i):
        return self.coords[i]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self))


def as_points(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.coords
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


@dataclass(frozen=True)
class QueryResult:
    """Answer to one nearest-induced-subspace query.

    ``tau`` lists ``(point id, weight)`` pairs; the combination
    ``sum(weight * P[id])`` is ``nearest``, whose distance to the query is
    ``distance``. Linear variants carry unconstrained weights, affine ones sum
    to one, convex ones are also non-negative.
    """

    variant: str
    distance: float
    witness_ids: tuple
    tau: tuple
    nearest: np.ndarray | None = field(default=None, compare=False)

    def reconstruct(self, points) -> np.ndarray:
        pts = as_points(points)
        out = np.zeros(pts.shape[1])
        for i, w in self.tau:
            out = out + w * pts[i]
        return out

    def sort_key(self):
        return (self.distance, tuple(sorted(self.witness_ids)))


@dataclass(frozen=True)
class SimplexWitness:
    vertex_ids: tuple
    nearest_point: np.ndarray
    barycentric: np.ndarray
    distance: float


# ---------------------------------------------------------------------------
# orthonormalisation


def _mgs(vectors, basis=(), tol=TOL.rank):
    """Modified Gram-Schmidt with one re-orthogonalisation pass.

    Returns the new orthonormal vectors (one per input, in order) or raises
    DegenerateBase when an input is dependent on what came before.
    """
    out = [np.asarray(b, dtype=np.float64) for b in basis]
    new = []
    for v in vectors:
        w = np.array(v, dtype=np.float64)
        scale = max(1.0, float(np.linalg.norm(w)))
        for _ in range(2):
            for b in out:
                w -= (w @ b) * b
        nrm = float(np.linalg.norm(w))
        if nrm <= tol * scale:
            raise DegenerateBase("vectors are linearly dependent")
        w /= nrm
        out.append(w)
        new.append(w)
    return new


def _complete_basis(basis, dim):
    """Orthonormal completion of ``basis`` using the standard axes in order."""
    out = [np.asarray(b, dtype=np.float64) for b in basis]
    extra = []
    for j in range(dim):
        if len(out) == dim:
            break
        e = np.zeros(dim)
        e[j] = 1.0
        w = e.copy()
        for _ in range(2):
            for b in out:
                w -= (w @ b) * b
        nrm = float(np.linalg.norm(w))
        if nrm > 1e-6:
            w /= nrm
            out.append(w)
            extra.append(w)
    return extra


def check_affinely_independent(points, tol=TOL.rank) -> float:
    """Return the smallest singular value of the difference matrix.

    Raises DegenerateBase when it does not exceed ``tol``.
    """
    pts = as_points(points)
    if len(pts) <= 1:
        return math.inf
    diffs = pts[1:] - pts[0]
    sigma = float(np.linalg.svd(diffs, compute_uv=False).min())
    if sigma <= tol:
        raise DegenerateBase(f"base is affinely dependent (sigma_min={sigma:.3g})")
    return sigma


@dataclass(frozen=True)
class CanonicalFrame:
    """Orthonormal coordinates attached to a base sequence.

    ``origin`` is the first base point, ``flat_basis`` spans the directions of
    flat(B), ``ext1`` extends it to the canonical halfflat G and ``ext2`` to
    H'. ``complement`` is an orthonormal basis of the orthogonal complement of
    flat(B); it starts with ``ext1`` and ``ext2``.
    """

    origin: np.ndarray
    flat_basis: np.ndarray  # (k-2, d)
    ext1: np.ndarray
    ext2: np.ndarray | None
    complement: np.ndarray  # (d-k+2, d)
    base_coords: np.ndarray  # (k-1, k-2) base points in flat coordinates

    @property
    def dim(self) -> int:
        return self.origin.shape[0]

    @property
    def flat_dim(self) -> int:
        return self.flat_basis.shape[0]

    def split(self, x):
        """Return (flat coordinates, ambient offset orthogonal to the flat)."""
        w = np.asarray(x, dtype=np.float64) - self.origin
        y = self.flat_basis @ w
        return y, w - y @ self.flat_basis

    def flat_coords(self, x) -> np.ndarray:
        return self.flat_basis @ (np.asarray(x, dtype=np.float64) - self.origin)

    def complement_coords(self, x) -> np.ndarray:
        return self.complement @ (np.asarray(x, dtype=np.float64) - self.origin)

    def dist_to_flat(self, x) -> float:
        return float(np.linalg.norm(self.split(x)[1]))

    def project_to_flat(self, x) -> np.ndarray:
        return self.origin + self.flat_coords(x) @ self.flat_basis

    def to_canonical(self, x) -> np.ndarray:
        """Canonical G coordinates ``(y, h)`` of the rotation of ``x`` into G."""
        y, w = self.split(x)
        return np.append(y, np.linalg.norm(w))

    def from_canonical(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.float64)
        out = self.origin + c[: self.flat_dim] @ self.flat_basis + c[self.flat_dim] * self.ext1
        if c.shape[0] > self.flat_dim + 1:
            out = out + c[self.flat_dim + 1] * self.ext2
        return out


def orthonormal_frame(base, aux1=None, aux2=None) -> CanonicalFrame:
    """Build the canonical frame of ``base``.

    ``aux1`` fixes the halfflat G (it must lie off flat(B)) and ``aux2`` fixes
    H' (off flat(B + aux1)). Without them the first standard axes that are
    independent of flat(B) are used, so the frame stays deterministic.
    """
    pts = as_points(base)
    check_affinely_independent(pts)
    d = pts.shape[1]
    origin = pts[0].copy()
    flat = _mgs(pts[1:] - origin)
    ext = []
    if aux1 is not None:
        try:
            ext += _mgs([np.asarray(aux1, dtype=np.float64) - origin], flat)
        except DegenerateBase:
            raise DegenerateAux("aux1 lies in flat(B)") from None
        if aux2 is not None:
            try:
                ext += _mgs([np.asarray(aux2, dtype=np.float64) - origin], flat + ext)
            except DegenerateBase:
                raise DegenerateAux("aux2 lies in flat(B + aux1)") from None
    rest = _complete_basis(flat + ext, d)
    complement = ext + rest
    flat_basis = np.array(flat).reshape(len(flat), d)
    ext1 = complement[0] if complement else np.zeros(d)
    ext2 = complement[1] if len(complement) > 1 else None
    base_coords = (pts - origin) @ flat_basis.T
    return CanonicalFrame(
        origin=origin,
        flat_basis=flat_basis,
        ext1=ext1,
        ext2=ext2,
        complement=np.array(complement).reshape(len(complement), d),
        base_coords=base_coords,
    )


# ---------------------------------------------------------------------------
# distances to flats and simplices


def flat_distance(S, q):
    """Distance from ``q`` to aff(S), its projection and affine coefficients."""
    pts = as_points(S)
    q = np.asarray(q, dtype=np.float64)
    if pts.shape[1] != q.shape[0]:
        raise DimensionMismatch("query and points differ in dimension")
    check_affinely_independent(pts)
    if len(pts) == 1:
        return float(np.linalg.norm(q - pts[0])), pts[0].copy(), np.ones(1)
    diffs = pts[1:] - pts[0]
    c, *_ = np.linalg.lstsq(diffs.T, q - pts[0], rcond=None)
    proj = pts[0] + c @ diffs
    coef = np.concatenate([[1.0 - c.sum()], c])
    return float(np.linalg.norm(q - proj)), proj, coef


def linear_flat_distance(S, q):
    """Distance from ``q`` to span(S), i.e. the flat of S with the origin adjoined."""
    pts = as_points(S)
    q = np.asarray(q, dtype=np.float64)
    if pts.shape[1] != q.shape[0]:
        raise DimensionMismatch("query and points differ in dimension")
    check_affinely_independent(np.vstack([np.zeros(pts.shape[1]), pts]))
    c, *_ = np.linalg.lstsq(pts.T, q, rcond=None)
    proj = c @ pts
    return float(np.linalg.norm(q - proj)), proj, c


def _dedupe(pts):
    keep = []
    for i in range(len(pts)):
        if not any(np.array_equal(pts[i], pts[j]) for j in keep):
            keep.append(i)
    return keep


def simplex_distance(S, q) -> SimplexWitness:
    """Exact nearest point of conv(S) by recursive face enumeration.

    Project onto aff(S); accept if every barycentric coordinate is at least
    ``-1e-12``, otherwise recurse on each facet and keep the minimum.
    """
    pts = as_points(S)
    q = np.asarray(q, dtype=np.float64)
    keep = _dedupe(pts)
    memo = {}

    def solve(face):
        if face in memo:
            return memo[face]
        sub = pts[list(face)]
        best = None
        try:
            if len(face) == 1:
                dist, proj, coef = float(np.linalg.norm(q - sub[0])), sub[0], np.ones(1)
            else:
                dist, proj, coef = flat_distance(sub, q)
            if np.all(coef >= -TOL.face_accept):
                best = (dist, proj, dict(zip(face, coef)))
        except DegenerateBase:
            pass
        if best is None:
            for facet in itertools.combinations(face, len(face) - 1):
                cand = solve(facet)
                if best is None or cand[0] < best[0]:
                    best = cand
        memo[face] = best
        return best

    dist, proj, weights = solve(tuple(keep))
    bary = np.zeros(len(pts))
    for i, w in weights.items():
        bary[i] = max(w, 0.0) if w > -TOL.face_accept else w
    support = tuple(i for i in sorted(weights) if bary[i] != 0.0) or tuple(sorted(weights))
    return SimplexWitness(vertex_ids=support, nearest_point=np.asarray(proj), barycentric=bary, distance=dist)


def segment_distance(q, a, b):
    """Distance from ``q`` to segment ab and the parameter of the nearest point."""
    dist, t = _kernels.segment_distances(
        np.asarray(q, dtype=np.float64),
        np.asarray(a, dtype=np.float64)[None, :],
        np.asarray(b, dtype=np.float64)[None, :],
    )
    return float(dist[0]), float(t[0])


def direction(frame: CanonicalFrame, p) -> np.ndarray:
    """Unit direction of ``p`` relative to flat(B), in complement coordinates."""
    w = frame.complement_coords(p)
    nrm = float(np.linalg.norm(w))
    if nrm <= TOL.zero_direction:
        raise OnFlat("point lies on the base flat")
    return w / nrm


# ---------------------------------------------------------------------------
# canonical realisation


def trilaterate(frame: CanonicalFrame, lengths: Sequence[float]) -> np.ndarray:
    """The point of G at the given distances from the base points.

    Returned in canonical coordinates ``(y, h)`` with ``h >= 0``.
    """
    lengths = np.asarray(lengths, dtype=np.float64)
    Y = frame.base_coords
    if lengths.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"need {Y.shape[0]} lengths, got {lengths.shape[0]}")
    if np.any(lengths < 0):
        raise ValueError("lengths must be non-negative")
    f = frame.flat_dim
    if f == 0:
        y = np.zeros(0)
    else:
        # |y - Y_i|^2 - |y - Y_0|^2 = l_i^2 - l_0^2 is linear in y
        A = 2.0 * (Y[1:] - Y[0])
        rhs = lengths[0] ** 2 - lengths[1:] ** 2 + np.sum(Y[1:] ** 2, axis=1) - np.sum(Y[0] ** 2)
        y = np.linalg.solve(A, rhs)
    h2 = lengths[0] ** 2 - float(np.sum((y - Y[0]) ** 2))
    if h2 < -TOL.trilateration_clamp:
        raise NotRealizable(f"no point of G realises these lengths (h^2={h2:.3g})")
    return np.append(y, math.sqrt(max(h2, 0.0)))


@dataclass(frozen=True)
class AngleGeometry:
    """Per-base data for base angles: ridge normals and offsets in flat coords."""

    normals: np.ndarray  # (k-1, k-2), normal i points from ridge i towards p_i
    offsets: np.ndarray  # (k-1,)

    @classmethod
    def from_base(cls, base_coords: np.ndarray) -> "AngleGeometry":
        m, f = base_coords.shape
        if f == 0:
            return cls(np.zeros((1, 0)), np.zeros(1))
        normals = np.empty((m, f))
        offsets = np.empty(m)
        for i in range(m):
            ridge = np.delete(base_coords, i, axis=0)
            if len(ridge) == 1:
                n = base_coords[i] - ridge[0]
            else:
                diffs = ridge[1:] - ridge[0]
                # null vector of the ridge directions
                _, _, vt = np.linalg.svd(diffs)
                n = vt[-1]
            n = n / np.linalg.norm(n)
            if n @ (base_coords[i] - ridge[0]) < 0:
                n = -n
            normals[i] = n
            offsets[i] = n @ ridge[0]
        return cls(normals, offsets)

    def angles(self, pts) -> np.ndarray:
        """Base angles of canonical points ``(..., k-1)`` with positive height."""
        pts = np.asarray(pts, dtype=np.float64)
        h = pts[..., -1]
        if self.normals.shape[1] == 0:
            # k = 2: a single monotone proxy for the height
            return (2.0 * np.arctan(h))[..., None]
        s = pts[..., :-1] @ self.normals.T - self.offsets
        return np.arctan2(h[..., None], s)


def base_angles(frame: CanonicalFrame, p) -> np.ndarray:
    """Dihedral angles between each facet through ``p`` and the base facet.

    ``p`` is given in canonical coordinates. Angle ``i`` belongs to the facet
    that omits base point ``i``; for k = 2 the single value is ``2*atan(h)``,
    a monotone stand-in since a point base has no facets.
    """
    p = np.asarray(p, dtype=np.float64)
    if p[-1] <= TOL.on_flat:
        raise DegenerateSimplex("point lies on the base flat")
    return AngleGeometry.from_base(frame.base_coords).angles(p)


def orbit_point(q_flat, r: float, length: float):
    """Canonical positions of the query for a page at distance ``length``.

    Returns ``(qG, qH)``: the query's projection onto the page, realised in G,
    and the query itself realised in H'.
    """
    if length < 0 or length > r + 1e-12:
        raise OutOfRange(f"length {length} outside [0, {r}]")
    h = math.sqrt(max(r * r - length * length, 0.0))
    q_flat = np.asarray(q_flat, dtype=np.float64)
    qG = np.append(q_flat, h)
    qH = np.append(qG, min(length, r))
    return qG, qH


def barycentric(vertices, x) -> np.ndarray:
    """Barycentric coordinates of ``x`` w.r.t. a full-dimensional simplex."""
    V = np.asarray(vertices, dtype=np.float64)
    A = (V[1:] - V[0]).T
    c = np.linalg.solve(A, np.asarray(x, dtype=np.float64) - V[0])
    return np.concatenate([[1.0 - c.sum()], c])


def affine_fit(S, q):
    """Like ``flat_distance`` but tolerant of dependent points (minimum-norm fit)."""
    pts = as_points(S)
    q = np.asarray(q, dtype=np.float64)
    if len(pts) == 1:
        return float(np.linalg.norm(q - pts[0])), pts[0].copy(), np.ones(1)
    diffs = pts[1:] - pts[0]
    c, *_ = np.linalg.lstsq(diffs.T, q - pts[0], rcond=None)
    proj = pts[0] + c @ diffs
    return float(np.linalg.norm(q - proj)), proj, np.concatenate([[1.0 - c.sum()], c])


def linear_fit(S, q):
    """Like ``linear_flat_distance`` but tolerant of dependent points."""
    pts = as_points(S)
    q = np.asarray(q, dtype=np.float64)
    c, *_ = np.linalg.lstsq(pts.T, q, rcond=None)
    proj = c @ pts
    return float(np.linalg.norm(q - proj)), proj, c
