"""Compressed quadtree and its well-separated pair decomposition, plus the candidate distances.

The tree is built level by level with numpy: every active node takes the
bounding box of its points and splits it at the box center into up to 2^d
children. Because the box is shrunk to the points first, every split separates
at least two points, so no internal node ever has a single child. Points with
identical coordinates are never separated and share one leaf.

Pair generation is the usual recursive procedure (split the node with the larger
box diagonal until the pair is separated), run under numba with an explicit stack.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from lbcenter.geometry import as_points


@dataclass(frozen=True)
class TreeNode:
    """Read-only view of one quadtree node."""

    tree: "QuadTree"
    id: int

    @property
    def center(self) -> np.ndarray:
        return self.tree.center[self.id]

    @property
    def half_sides(self) -> np.ndarray:
        return self.tree.half[self.id]

    @property
    def diameter(self) -> float:
        return float(self.tree.diam[self.id])

    @property
    def representative(self) -> int:
        return int(self.tree.rep[self.id])

    @property
    def points(self) -> np.ndarray:
        return self.tree.perm[self.tree.start[self.id] : self.tree.end[self.id]]

    @property
    def children(self) -> list["TreeNode"]:
        f, c = self.tree.first_child[self.id], self.tree.child_count[self.id]
        return [TreeNode(self.tree, int(k)) for k in range(f, f + c)]

    @property
    def is_leaf(self) -> bool:
        return self.tree.child_count[self.id] == 0


@dataclass
class QuadTree:
    """Flat node arrays; node 0 is the root and children of a node have consecutive ids.

    ``perm`` lists point indices so that each node owns the slice
    ``perm[start:end]``.
    """

    points: np.ndarray
    perm: np.ndarray
    start: np.ndarray
    end: np.ndarray
    center: np.ndarray
    half: np.ndarray
    rep: np.ndarray
    first_child: np.ndarray
    child_count: np.ndarray
    diam: np.ndarray

    @property
    def root(self) -> TreeNode:
        return TreeNode(self, 0)

    @property
    def size(self) -> int:
        return self.start.shape[0]

    def node(self, i: int) -> TreeNode:
        return TreeNode(self, i)

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.child_count == 0)


def _segments(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenation of arange(s, s + l) for every (s, l)."""
    offsets = np.cumsum(lengths) - lengths
    return np.repeat(starts - offsets, lengths) + np.arange(lengths.sum())


def build_tree(points) -> QuadTree:
    points = as_points(points)
    n, d = points.shape
    if n < 1:
        raise ValueError("cannot build a tree over an empty point set")
    if d > 62:
        raise ValueError("quadtree child codes support d <= 62")
    cap = 2 * n
    perm = np.arange(n)
    start = np.zeros(cap, dtype=np.int64)
    end = np.zeros(cap, dtype=np.int64)
    center = np.zeros((cap, d))
    half = np.zeros((cap, d))
    rep = np.zeros(cap, dtype=np.int64)
    first_child = np.zeros(cap, dtype=np.int64)
    child_count = np.zeros(cap, dtype=np.int64)
    end[0] = n
    nodes = 1
    active = np.array([0])
    weights = np.int64(1) << np.arange(d, dtype=np.int64)
    while active.size:
        lengths = end[active] - start[active]
        pos = _segments(start[active], lengths)
        bounds = np.cumsum(lengths) - lengths
        idx = perm[pos]
        block = points[idx]
        lo = np.minimum.reduceat(block, bounds, axis=0)
        hi = np.maximum.reduceat(block, bounds, axis=0)
        mid = lo + (hi - lo) / 2.0
        center[active] = mid
        half[active] = (hi - lo) / 2.0
        rep[active] = np.minimum.reduceat(idx, bounds)

        split = (hi > lo).any(axis=1)
        if not split.any():
            break
        # the split threshold must lie in (lo, hi] along every non-flat axis
        thresh = np.where(mid <= lo, hi, mid)
        seg = np.repeat(np.arange(active.size), lengths)
        keep = split[seg]
        pos, idx, seg = pos[keep], idx[keep], seg[keep]
        code = (points[idx] >= thresh[seg]).astype(np.int64) @ weights
        # active segments are laid out left to right, so a stable sort by
        # (segment, code) keeps every segment inside its own slice of perm
        order = np.lexsort((code, seg))
        perm[pos] = idx[order]
        seg, code = seg[order], code[order]
        new_run = np.ones(seg.size, dtype=bool)
        new_run[1:] = (seg[1:] != seg[:-1]) | (code[1:] != code[:-1])
        run_at = np.flatnonzero(new_run)
        kids = run_at.size
        child_ids = np.arange(nodes, nodes + kids)
        start[child_ids] = pos[run_at]
        end[child_ids] = pos[np.append(run_at[1:], seg.size) - 1] + 1
        counts = np.bincount(seg[run_at], minlength=active.size)
        parents = active[counts > 0]
        first_child[parents] = nodes + (np.cumsum(counts) - counts)[counts > 0]
        child_count[parents] = counts[counts > 0]
        nodes += kids
        active = child_ids
    half = half[:nodes].copy()
    diam = np.zeros(nodes)
    for k in range(d):
        diam = diam + (2.0 * half[:, k]) * (2.0 * half[:, k])
    return QuadTree(
        diam=np.sqrt(diam),
        points=points,
        perm=perm,
        start=start[:nodes].copy(),
        end=end[:nodes].copy(),
        center=center[:nodes].copy(),
        half=half,
        rep=rep[:nodes].copy(),
        first_child=first_child[:nodes].copy(),
        child_count=child_count[:nodes].copy(),
    )


@dataclass
class PairDecomposition:
    """Node pairs (a[i], b[i]) with representative distance ``length[i]``."""

    tree: QuadTree
    sigma: float
    a: np.ndarray
    b: np.ndarray
    length: np.ndarray

    def __len__(self) -> int:
        return self.a.shape[0]


@numba.njit(cache=True)
def _pair_kernel(points, rep, diam, first_child, child_count, sigma, out_a, out_b, out_len):
    """Fill the output arrays; returns the pair count, or -1 if they are too small."""
    su = np.empty(64, dtype=np.int64)
    sv = np.empty(64, dtype=np.int64)
    top = 0
    emitted = 0
    for w in range(first_child.shape[0]):
        f = first_child[w]
        for i in range(child_count[w]):
            for j in range(i + 1, child_count[w]):
                if top == su.shape[0]:
                    su = np.concatenate((su, np.empty_like(su)))
                    sv = np.concatenate((sv, np.empty_like(sv)))
                su[top] = f + i
                sv[top] = f + j
                top += 1
        while top > 0:
            top -= 1
            u = su[top]
            v = sv[top]
            acc = 0.0
            for k in range(points.shape[1]):
                t = points[rep[u], k] - points[rep[v], k]
                acc += t * t
            length = np.sqrt(acc)
            if max(diam[u], diam[v]) <= length / sigma:
                if emitted == out_a.shape[0]:
                    return -1
                out_a[emitted] = u
                out_b[emitted] = v
                out_len[emitted] = length
                emitted += 1
                continue
            # split whichever side has the larger box; ties split u
            big_is_v = diam[v] > diam[u]
            big = v if big_is_v else u
            if top + child_count[big] > su.shape[0]:
                su = np.concatenate((su, np.empty_like(su)))
                sv = np.concatenate((sv, np.empty_like(sv)))
            for c in range(first_child[big], first_child[big] + child_count[big]):
                if big_is_v:
                    su[top] = u
                    sv[top] = c
                else:
                    su[top] = c
                    sv[top] = v
                top += 1
    return emitted


def compute_pairs(tree: QuadTree, sigma: float = 4.0) -> PairDecomposition:
    """sigma-separated pair decomposition; every distinct-coordinate point pair is covered once."""
    if not sigma > 2:
        raise ValueError(f"separation must exceed 2, got {sigma}")
    points = np.ascontiguousarray(tree.points)
    capacity = 128 * points.shape[0] + 64
    while True:
        a = np.empty(capacity, dtype=np.int64)
        b = np.empty(capacity, dtype=np.int64)
        length = np.empty(capacity)
        emitted = _pair_kernel(points, tree.rep, tree.diam, tree.first_child, tree.child_count, float(sigma), a, b, length)
        if emitted >= 0:
            break
        capacity *= 4
    return PairDecomposition(tree=tree, sigma=float(sigma), a=a[:emitted], b=b[:emitted], length=length[:emitted])


@dataclass
class CandidateSet:
    """Sorted distinct candidate radii drawn from a pair decomposition."""

    values: np.ndarray
    pairs: PairDecomposition
    scales: tuple[float, float, float]

    def __len__(self) -> int:
        return self.values.shape[0]

    def provenance(self, i: int) -> tuple[int, float]:
        """(pair index, scale factor) that produced ``values[i]``; first match wins."""
        for scale in self.scales:
            hit = np.flatnonzero(self.pairs.length * scale == self.values[i])
            if hit.size:
                return int(hit[0]), scale
        raise LookupError(f"no pair generates candidate {self.values[i]}")


def candidate_distances(pairs: PairDecomposition) -> CandidateSet:
    """Each pair contributes its representative distance scaled by (1 - 2/sigma), 1 and (1 + 2/sigma).

    With sigma = 4 these are l/2, l and 3l/2, which bracket every point-pair
    distance the pair covers.
    """
    spread = 2.0 / pairs.sigma
    scales = (1.0 - spread, 1.0, 1.0 + spread)
    length = pairs.length[pairs.length > 0]
    values = np.unique(np.concatenate([length * s for s in scales]))
    return CandidateSet(values=values, pairs=pairs, scales=scales)
