"""Finite unions of intervals and axis rectangles with exact bookkeeping.

Every eliminated set in the scale-by-scale constructions is maintained
explicitly as a union of intervals (1-D) or axis-aligned rectangles
(2-D), normalized so that measure (total length/area) and complexity
(component count) are exactly computable.  Union, intersection, and
difference all renormalize.

The 2-D representation is a vertical-slab decomposition: sorted x-edges
with one 1-D interval set per slab, merging adjacent slabs that carry
identical y-sets.  This keeps the invariants (pairwise disjoint, measure
additive) by construction.
"""

from __future__ import annotations

import numpy as np

from .errors import QpsError

__all__ = ["SimpleSet1D", "SimpleSet2D"]

_EMPTY = np.empty((0, 2))


def _merge_sorted(iv: np.ndarray) -> np.ndarray:
    """Merge an (K,2) array (any order, possibly overlapping/touching)."""
    iv = iv[iv[:, 1] > iv[:, 0]]
    if iv.shape[0] == 0:
        return _EMPTY.copy()
    order = np.argsort(iv[:, 0], kind="stable")
    lo = iv[order, 0]
    hi = iv[order, 1]
    cummax = np.maximum.accumulate(hi)
    new_run = np.empty(lo.size, dtype=bool)
    new_run[0] = True
    new_run[1:] = lo[1:] > cummax[:-1]
    starts = np.nonzero(new_run)[0]
    ends = np.append(starts[1:], lo.size)
    out = np.empty((starts.size, 2))
    out[:, 0] = lo[starts]
    for k, (s, e) in enumerate(zip(starts, ends)):
        out[k, 1] = cummax[e - 1]
    return out


class SimpleSet1D:
    """Sorted disjoint union of open-ish intervals on the line.

    Endpoints are plain floats; measure-zero distinctions (open/closed)
    are not tracked.  Construction merges overlapping and touching
    components, so `complexity` is the minimal interval count.
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals=None, _normalized=False):
        if intervals is None:
            self.intervals = _EMPTY.copy()
            return
        iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
        self.intervals = iv if _normalized else _merge_sorted(iv)

    @staticmethod
    def from_torus_intervals(pairs) -> "SimpleSet1D":
        """Reduce (lo, hi) pairs mod 1 into [0, 1), splitting wraps."""
        out = []
        for lo, hi in pairs:
            if hi - lo >= 1.0:
                return SimpleSet1D([[0.0, 1.0]])
            if hi <= lo:
                continue
            l = lo % 1.0
            h = l + (hi - lo)
            if h <= 1.0:
                out.append((l, h))
            else:
                out.append((l, 1.0))
                out.append((0.0, h - 1.0))
        return SimpleSet1D(out)

    @staticmethod
    def full_circle() -> "SimpleSet1D":
        return SimpleSet1D([[0.0, 1.0]])

    @property
    def measure(self) -> float:
        if self.intervals.size == 0:
            return 0.0
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    @property
    def complexity(self) -> int:
        return self.intervals.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.intervals.shape[0] == 0

    def union(self, other: "SimpleSet1D") -> "SimpleSet1D":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return SimpleSet1D(np.vstack([self.intervals, other.intervals]))

    def intersect(self, other: "SimpleSet1D") -> "SimpleSet1D":
        if self.is_empty or other.is_empty:
            return SimpleSet1D()
        out = []
        b = other.intervals
        for lo, hi in self.intervals:
            i0 = np.searchsorted(b[:, 1], lo, side="right")
            i1 = np.searchsorted(b[:, 0], hi, side="left")
            for j in range(i0, i1):
                l = max(lo, b[j, 0])
                h = min(hi, b[j, 1])
                if h > l:
                    out.append((l, h))
        return SimpleSet1D(out) if out else SimpleSet1D()

    def complement(self, lo: float, hi: float) -> "SimpleSet1D":
        """Complement within [lo, hi]."""
        cur = lo
        out = []
        for l, h in self.intervals:
            if h <= lo or l >= hi:
                continue
            l = max(l, lo)
            h = min(h, hi)
            if l > cur:
                out.append((cur, l))
            cur = max(cur, h)
        if cur < hi:
            out.append((cur, hi))
        return SimpleSet1D(out) if out else SimpleSet1D()

    def subtract(self, other: "SimpleSet1D") -> "SimpleSet1D":
        if self.is_empty or other.is_empty:
            return self
        lo = min(self.intervals[0, 0], other.intervals[0, 0]) - 1.0
        hi = max(self.intervals[-1, 1], other.intervals[-1, 1]) + 1.0
        return self.intersect(other.complement(lo, hi))

    def contains(self, x):
        """Vectorized membership (boundary points count as inside)."""
        flat = self.intervals.reshape(-1)
        idx = np.searchsorted(flat, np.asarray(x, dtype=float), side="left")
        inside = idx % 2 == 1
        on_left_edge = np.isin(np.asarray(x, dtype=float), self.intervals[:, 0])
        return inside | on_left_edge

    def sample(self, rng, size: int) -> np.ndarray:
        if self.is_empty:
            raise QpsError("cannot sample from an empty set")
        lengths = self.intervals[:, 1] - self.intervals[:, 0]
        probs = lengths / lengths.sum()
        which = rng.choice(lengths.size, size=size, p=probs)
        u = rng.uniform(size=size)
        return self.intervals[which, 0] + u * lengths[which]

    def __eq__(self, other) -> bool:
        return (isinstance(other, SimpleSet1D)
                and self.intervals.shape == other.intervals.shape
                and bool(np.all(self.intervals == other.intervals)))

    def __repr__(self) -> str:
        return f"SimpleSet1D({self.complexity} intervals, mes={self.measure:.6g})"


class SimpleSet2D:
    """Disjoint union of axis rectangles via a vertical-slab decomposition."""

    __slots__ = ("x_edges", "slabs")

    def __init__(self, rects=None):
        """rects: iterable of (x0, x1, y0, y1); overlaps are normalized away."""
        if not rects:
            self.x_edges = np.empty(0)
            self.slabs = []
            return
        r = np.asarray(rects, dtype=float).reshape(-1, 4)
        r = r[(r[:, 1] > r[:, 0]) & (r[:, 3] > r[:, 2])]
        if r.shape[0] == 0:
            self.x_edges = np.empty(0)
            self.slabs = []
            return
        edges = np.unique(np.concatenate([r[:, 0], r[:, 1]]))
        slabs = []
        for i in range(edges.size - 1):
            x0, x1 = edges[i], edges[i + 1]
            cover = (r[:, 0] <= x0) & (r[:, 1] >= x1)
            ys = SimpleSet1D(r[cover][:, 2:4]) if np.any(cover) else SimpleSet1D()
            slabs.append(ys)
        self.x_edges, self.slabs = _compress_slabs(edges, slabs)

    @staticmethod
    def _from_slabs(edges, slabs) -> "SimpleSet2D":
        obj = SimpleSet2D()
        obj.x_edges, obj.slabs = _compress_slabs(np.asarray(edges, float), slabs)
        return obj

    def rect_list(self) -> np.ndarray:
        out = []
        for i, ys in enumerate(self.slabs):
            x0, x1 = self.x_edges[i], self.x_edges[i + 1]
            for y0, y1 in ys.intervals:
                out.append((x0, x1, y0, y1))
        return np.asarray(out).reshape(-1, 4)

    @property
    def measure(self) -> float:
        tot = 0.0
        for i, ys in enumerate(self.slabs):
            tot += (self.x_edges[i + 1] - self.x_edges[i]) * ys.measure
        return tot

    @property
    def complexity(self) -> int:
        return int(sum(ys.complexity for ys in self.slabs))

    @property
    def is_empty(self) -> bool:
        return all(ys.is_empty for ys in self.slabs)

    def _binary(self, other: "SimpleSet2D", op: str) -> "SimpleSet2D":
        if not isinstance(other, SimpleSet2D):
            raise QpsError("operand must be SimpleSet2D")
        if self.x_edges.size == 0:
            return other if op == "union" else SimpleSet2D()
        if other.x_edges.size == 0:
            return self if op in ("union", "subtract") else SimpleSet2D()
        edges = np.unique(np.concatenate([self.x_edges, other.x_edges]))
        slabs = []
        for i in range(edges.size - 1):
            xm = 0.5 * (edges[i] + edges[i + 1])
            a = self._slab_at(xm)
            b = other._slab_at(xm)
            if op == "union":
                slabs.append(a.union(b))
            elif op == "intersect":
                slabs.append(a.intersect(b))
            else:
                slabs.append(a.subtract(b))
        return SimpleSet2D._from_slabs(edges, slabs)

    def union(self, other):
        return self._binary(other, "union")

    def intersect(self, other):
        return self._binary(other, "intersect")

    def subtract(self, other):
        return self._binary(other, "subtract")

    def _slab_at(self, x: float) -> SimpleSet1D:
        if self.x_edges.size == 0 or x < self.x_edges[0] or x >= self.x_edges[-1]:
            return SimpleSet1D()
        i = int(np.searchsorted(self.x_edges, x, side="right") - 1)
        i = min(i, len(self.slabs) - 1)
        return self.slabs[i]

    def contains(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros(x.shape, dtype=bool)
        if self.x_edges.size == 0:
            return out
        idx = np.searchsorted(self.x_edges, x, side="right") - 1
        valid = (idx >= 0) & (idx < len(self.slabs)) & (x <= self.x_edges[-1])
        for i in np.unique(idx[valid]):
            sel = valid & (idx == i)
            out[sel] = self.slabs[i].contains(y[sel])
        return out

    def sample(self, rng, size: int):
        rects = self.rect_list()
        if rects.shape[0] == 0:
            raise QpsError("cannot sample from an empty set")
        areas = (rects[:, 1] - rects[:, 0]) * (rects[:, 3] - rects[:, 2])
        probs = areas / areas.sum()
        which = rng.choice(areas.size, size=size, p=probs)
        ux = rng.uniform(size=size)
        uy = rng.uniform(size=size)
        xs = rects[which, 0] + ux * (rects[which, 1] - rects[which, 0])
        ys = rects[which, 2] + uy * (rects[which, 3] - rects[which, 2])
        return xs, ys

    def __repr__(self) -> str:
        return f"SimpleSet2D({self.complexity} rects, mes={self.measure:.6g})"


def _compress_slabs(edges: np.ndarray, slabs: list):
    """Drop empty boundary slabs and merge adjacent slabs with equal y-sets."""
    keep_edges = [edges[0]]
    keep_slabs = []
    for i, ys in enumerate(slabs):
        if keep_slabs and ys == keep_slabs[-1]:
            keep_edges[-1] = edges[i + 1]
            continue
        keep_slabs.append(ys)
        keep_edges.append(edges[i + 1])
    # trim empty slabs at either end (interior empties must stay as gaps)
    while keep_slabs and keep_slabs[0].is_empty:
        keep_slabs.pop(0)
        keep_edges.pop(0)
    while keep_slabs and keep_slabs[-1].is_empty:
        keep_slabs.pop()
        keep_edges.pop()
    if not keep_slabs:
        return np.empty(0), []
    return np.asarray(keep_edges), keep_slabs
