"""Brute-force ground truth for small instances.

Nothing here is fast. ``naive_net`` is the textbook quadratic greedy net and
``brute_force_opt`` finds the exact optimal price by trying every center subset
at every candidate radius, deciding each (subset, radius) pair with a
lower-bounded flow.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from lbcenter.geometry import Instance, Solution, as_points, validate_instance
from lbcenter.grid import Net

DEFAULT_CAP = 14


class OracleSizeError(ValueError):
    """The instance is too large for exhaustive enumeration."""


def pairwise_sq_distances(points: np.ndarray) -> np.ndarray:
    """All squared distances, accumulated coordinate by coordinate like the grid kernels."""
    out = np.zeros((points.shape[0], points.shape[0]))
    for k in range(points.shape[1]):
        diff = points[:, None, k] - points[None, :, k]
        out = out + diff * diff
    return out


def naive_net(points, r: float) -> Net:
    """Quadratic greedy r-net with nearest-center assignment, for cross-checking."""
    if not r > 0:
        raise ValueError(f"net radius must be positive, got {r}")
    points = as_points(points)
    n = points.shape[0]
    sq = pairwise_sq_distances(points)
    r2 = float(r) * float(r)
    marked = np.zeros(n, dtype=bool)
    centers = []
    for i in range(n):
        if marked[i]:
            continue
        centers.append(i)
        marked |= sq[i] <= r2
    centers = np.array(centers, dtype=np.int64)
    # argmin returns the first minimum, i.e. the smallest center index on ties
    assignment = centers[np.argmin(sq[:, centers], axis=1)]
    counts = np.bincount(assignment, minlength=n)[centers]
    return Net(radius=float(r), centers=centers, assignment=assignment, counts=counts)


@dataclass
class FlowNetwork:
    """Circulation for assigning every point to a center within reach, each center taking >= lam.

    Node layout: source 0, points 1..n, centers n+1..n+k, sink n+k+1. Arcs carry
    (lower, capacity): source->point (1, 1), point->center (0, 1) when within
    reach, center->sink (lam, n), plus an uncapacitated sink->source return arc.
    """

    n: int
    centers: np.ndarray
    lam: int
    reach: np.ndarray  # (n, k) bool

    @classmethod
    def build(cls, sq: np.ndarray, centers, lam: int, r2: float) -> "FlowNetwork":
        centers = np.asarray(centers, dtype=np.int64)
        return cls(n=sq.shape[0], centers=centers, lam=lam, reach=sq[:, centers] <= r2)

    def arcs(self):
        """Yield (tail, head, lower, capacity) for every arc."""
        n, k = self.n, len(self.centers)
        source, sink = 0, n + k + 1
        for i in range(n):
            yield source, 1 + i, 1, 1
        for i, j in zip(*np.nonzero(self.reach)):
            yield 1 + int(i), 1 + n + int(j), 0, 1
        for j in range(k):
            yield 1 + n + j, sink, self.lam, n
        yield sink, source, 0, n

    def solve(self) -> np.ndarray | None:
        """Feasible assignment (point -> center point index) or None.

        Lower bounds are removed the usual way: each arc keeps capacity
        ``cap - lower``, and every node's lower-bound imbalance is routed through a
        super source / super sink. A feasible circulation exists iff the max flow
        from the super source saturates all its arcs.
        """
        n, k = self.n, len(self.centers)
        nodes = n + k + 2
        super_source, super_sink = nodes, nodes + 1
        excess = np.zeros(nodes, dtype=np.int64)
        cap: dict[tuple[int, int], int] = {}
        for u, v, lower, c in self.arcs():
            if c - lower > 0:
                cap[u, v] = cap.get((u, v), 0) + c - lower
            excess[v] += lower
            excess[u] -= lower
        demand = 0
        for v in range(nodes):
            if excess[v] > 0:
                cap[super_source, v] = int(excess[v])
                demand += int(excess[v])
            elif excess[v] < 0:
                cap[v, super_sink] = int(-excess[v])
        rows, cols = zip(*cap)
        graph = csr_matrix(
            (np.fromiter(cap.values(), dtype=np.int32), (rows, cols)), shape=(nodes + 2, nodes + 2)
        )
        result = maximum_flow(graph, super_source, super_sink)
        if result.flow_value < demand:
            return None
        flow = result.flow.tocoo()
        assignment = np.full(n, -1, dtype=np.int64)
        for u, v, f in zip(flow.row, flow.col, flow.data):
            if f > 0 and 1 <= u <= n and n + 1 <= v <= n + k:
                assignment[u - 1] = self.centers[v - n - 1]
        return assignment


def _feasible(inst: Instance, sq: np.ndarray, centers, r2: float) -> np.ndarray | None:
    return FlowNetwork.build(sq, centers, inst.lam, r2).solve()


def assignment_feasible(inst: Instance, centers, r: float) -> bool:
    """Can every point go to a center within ``r`` with each center receiving >= lam points?"""
    centers = np.unique(np.asarray(centers, dtype=np.int64))
    if centers.size == 0:
        raise ValueError("center set must be non-empty")
    sq = pairwise_sq_distances(inst.points)
    return _feasible(inst, sq, centers, float(r) * float(r)) is not None


def _first_feasible(inst: Instance, sq: np.ndarray, r2: float):
    """First (size ascending, then lexicographic) center set feasible at squared radius r2."""
    n, lam = inst.n, inst.lam
    within = sq <= r2
    full = (1 << n) - 1
    balls = [int(sum(1 << j for j in np.flatnonzero(row))) for row in within]
    # a center needs lam points within reach; a subset must cover everything
    eligible = [c for c in range(n) if within[c].sum() >= lam]
    for size in range(1, n // lam + 1):
        for subset in itertools.combinations(eligible, size):
            cover = 0
            for c in subset:
                cover |= balls[c]
            if cover != full:
                continue
            assignment = _feasible(inst, sq, subset, r2)
            if assignment is not None:
                return assignment
    return None


def brute_force_opt(inst: Instance, cap: int = DEFAULT_CAP) -> Solution:
    """Exact optimum by exhaustive search over candidate radii and center subsets."""
    validate_instance(inst)
    if inst.n > cap:
        raise OracleSizeError(f"oracle limited to n <= {cap}, got n = {inst.n}")
    sq = pairwise_sq_distances(inst.points)
    radii = np.unique(np.concatenate([[0.0], sq[np.triu_indices(inst.n, 1)]]))
    # feasibility of "some center set works" is monotone in the radius
    lo, hi = -1, len(radii) - 1
    best = _first_feasible(inst, sq, radii[hi])
    assert best is not None, "the largest pairwise distance always admits one center"
    while hi - lo > 1:
        mid = (lo + hi) // 2
        found = _first_feasible(inst, sq, radii[mid])
        if found is None:
            lo = mid
        else:
            hi, best = mid, found
    return Solution.from_assignment(inst, best, meta={"algorithm": "oracle"})
