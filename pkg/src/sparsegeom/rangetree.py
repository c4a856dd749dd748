"""Multilevel range tree reporting canonical subsets for half-open boxes.

Level ``j`` is a balanced tree over the points sorted by coordinate ``j``
(ties by index); each of its nodes owns a level ``j + 1`` tree over the
node's points. Nodes of the last level are the canonical sets. A box query
returns disjoint canonical sets whose union is exactly the points inside the
box; each point belongs to O(log^D n) canonical sets.
"""

from __future__ import annotations

from bisect import bisect_left

import numpy as np


class _Level:
    __slots__ = ("dim", "keys", "order", "lo", "hi", "left", "right", "child")

    def __init__(self, tree: "RangeTree", members: np.ndarray, dim: int):
        coords = tree.coords[members, dim]
        perm = np.lexsort((members, coords))
        self.dim = dim
        self.order = members[perm]
        self.keys = coords[perm].tolist()
        self.lo: list[int] = []
        self.hi: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.child: list = []
        self._build(tree, 0, len(self.order))

    def _build(self, tree, lo, hi):
        node = len(self.lo)
        self.lo.append(lo)
        self.hi.append(hi)
        self.left.append(-1)
        self.right.append(-1)
        members = self.order[lo:hi]
        if self.dim + 1 < tree.dims:
            self.child.append(_Level(tree, np.sort(members), self.dim + 1))
        else:
            self.child.append(tree._new_canonical(np.sort(members)))
        if hi - lo > 1:
            mid = (lo + hi) // 2
            a = self._build(tree, lo, mid)
            b = self._build(tree, mid, hi)
            self.left[node] = a
            self.right[node] = b
        return node

    def cover(self, a, b, out, node=0):
        """Nodes whose position ranges tile ``[a, b)``."""
        lo, hi = self.lo[node], self.hi[node]
        if b <= lo or hi <= a:
            return
        if a <= lo and hi <= b:
            out.append(node)
            return
        self.cover(a, b, out, self.left[node])
        self.cover(a, b, out, self.right[node])

    def query(self, box_lo, box_hi, out):
        a = bisect_left(self.keys, box_lo[self.dim])
        b = bisect_left(self.keys, box_hi[self.dim])
        if a >= b:
            return
        nodes: list[int] = []
        self.cover(a, b, nodes)
        for node in nodes:
            child = self.child[node]
            if isinstance(child, _Level):
                child.query(box_lo, box_hi, out)
            else:
                out.append(child)


class RangeTree:
    """Range tree over ``coords`` of shape ``(n, D)``.

    ``canonical[h]`` is the sorted array of point indices of canonical set
    ``h``; ``query`` returns handles into it. ``on_canonical`` is called once
    per canonical set with its members, and its return value is kept in
    ``payload[h]``.
    """

    def __init__(self, coords, on_canonical=None):
        self.coords = np.asarray(coords, dtype=np.float64)
        if self.coords.ndim != 2 or self.coords.shape[1] < 1:
            raise ValueError("range tree needs an (n, D) coordinate array with D >= 1")
        self.dims = self.coords.shape[1]
        self.canonical: list[np.ndarray] = []
        self.payload: list = []
        self._on_canonical = on_canonical
        n = len(self.coords)
        self.root = _Level(self, np.arange(n), 0) if n else None

    def _new_canonical(self, members):
        self.canonical.append(members)
        self.payload.append(self._on_canonical(members) if self._on_canonical else None)
        return len(self.canonical) - 1

    def __len__(self):
        return len(self.coords)

    @property
    def total_membership(self) -> int:
        return int(sum(len(c) for c in self.canonical))

    def query(self, box_lo, box_hi) -> list[int]:
        """Handles of canonical sets tiling ``{x : box_lo <= x < box_hi}``."""
        out: list[int] = []
        if self.root is None:
            return out
        self.root.query(self._bounds(box_lo), self._bounds(box_hi), out)
        return out

    def _bounds(self, v):
        if np.ndim(v) == 0:
            return [float(v)] * self.dims
        return [float(x) for x in v]

    def members(self, handles) -> np.ndarray:
        if not handles:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([self.canonical[h] for h in handles])
