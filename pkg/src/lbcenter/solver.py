"""Constant-factor approximations for lower-bounded center clustering.

A net of radius r is *valid* when every center's nearest-center cluster holds at
least ``lam`` points; a valid net is itself a solution of price <= r. If the net
at radius 4x is valid the optimum is at most 4x, and if it is invalid the
optimum exceeds x. Every search below is built on that one-sided test.

Validity is not monotone in the radius, so no search assumes it is. Each search
keeps two anchors instead: ``lo`` always carries a failed test (or is the virtual
value 0) and ``hi`` always carries a passed test together with its witness net.
Probes only ever move one anchor toward the other, and both guarantees survive
every step.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from lbcenter.geometry import Instance, Solution, validate_instance
from lbcenter.grid import Net, net_with_assignment
from lbcenter.wspd import CandidateSet, build_tree, candidate_distances, compute_pairs

log = logging.getLogger(__name__)

SIGMA = 4.0
MAX_EPS = 8.0


@dataclass(frozen=True)
class PriceAtMost:
    """The optimum is at most ``x``; ``net`` is a valid net of radius ``x``."""

    x: float
    net: Net


@dataclass(frozen=True)
class PriceGreater:
    """The optimum exceeds ``bound``."""

    bound: float


@dataclass(frozen=True)
class SearchInterval:
    """Half-open bracket (lo, hi] known to contain the optimal price."""

    lo: float
    hi: float
    checks: int = field(default=0, compare=False)

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError(f"need 0 < lo < hi, got ({self.lo}, {self.hi}]")

    @property
    def spread(self) -> float:
        return self.hi / self.lo

    def __contains__(self, value: float) -> bool:
        return self.lo < value <= self.hi


def check_valid(inst: Instance, r: float) -> tuple[bool, Net]:
    net = net_with_assignment(inst.points, r)
    return net.is_valid(inst.lam), net


def decide(inst: Instance, x: float) -> PriceAtMost | PriceGreater:
    """One-sided comparison of the optimum against ``x`` (either answer is allowed in [x/4, x])."""
    if not x > 0:
        raise ValueError(f"decision threshold must be positive, got {x}")
    ok, net = check_valid(inst, x)
    return PriceAtMost(x, net) if ok else PriceGreater(x / 4.0)


def _solution(inst: Instance, net: Net, **meta) -> Solution:
    return Solution.from_assignment(inst, net.assignment, meta=meta)


def zero_price_check(inst: Instance) -> Solution | None:
    """Price-0 solution when every group of identical points has at least ``lam`` members."""
    validate_instance(inst)
    _, first, group, sizes = np.unique(
        inst.points, axis=0, return_index=True, return_inverse=True, return_counts=True
    )
    if sizes.min() < inst.lam:
        return None
    return Solution.from_assignment(inst, first[group.ravel()], meta={"algorithm": "zero-price"})


class _Anchors:
    """Low/high anchor pair for a search over an ordered set of radii."""

    def __init__(self, inst: Instance, scale: float):
        self.inst = inst
        self.scale = scale
        self.lo: float = 0.0
        self.hi: float | None = None
        self.hi_net: Net | None = None
        self.checks = 0

    def probe(self, value: float) -> bool:
        ok, net = check_valid(self.inst, self.scale * value)
        self.checks += 1
        if ok:
            if self.hi is not None:
                assert value < self.hi, "probe outside the anchors"
            self.hi, self.hi_net = value, net
        else:
            assert value > self.lo, "probe outside the anchors"
            self.lo = value
        assert self.hi_net is None or self.hi_net.is_valid(self.inst.lam)
        return ok


def select(values: np.ndarray, k: int, rng: np.random.Generator) -> float:
    """k-th smallest entry (0-based) by randomized quickselect; expected linear time."""
    if not 0 <= k < values.size:
        raise IndexError(f"rank {k} out of range for {values.size} values")
    pool = values
    while True:
        pivot = pool[rng.integers(pool.size)]
        below = pool[pool < pivot]
        if k < below.size:
            pool = below
            continue
        ties = np.count_nonzero(pool == pivot)
        if k < below.size + ties:
            return float(pivot)
        k -= below.size + ties
        pool = pool[pool > pivot]


def positive_distances(points: np.ndarray) -> np.ndarray:
    """Every positive pairwise distance, with multiplicity."""
    i, j = np.triu_indices(points.shape[0], 1)
    acc = np.zeros(i.shape[0])
    for k in range(points.shape[1]):
        t = points[i, k] - points[j, k]
        acc = acc + t * t
    acc = acc[acc > 0]
    return np.sqrt(acc)


def solve_exact_distances(inst: Instance, seed: int = 0) -> Solution:
    """4-approximation by median-selection search over all pairwise distances.

    Probes ``v`` by testing the net of radius 4v. When the anchors become
    adjacent among the distances, the optimum (itself a pairwise distance) is
    above ``lo`` and hence at least ``hi``, while the witness at ``hi`` has
    price at most 4 * hi.
    """
    zero = zero_price_check(inst)
    if zero is not None:
        return zero
    rng = np.random.default_rng(seed)
    dist = positive_distances(inst.points)
    anchors = _Anchors(inst, 4.0)
    top = float(dist.max())
    assert anchors.probe(top), "a net of radius 4 * diameter is a single valid center"
    pool = dist[dist < top]
    while pool.size:
        median = select(pool, (pool.size - 1) // 2, rng)
        if anchors.probe(median):
            pool = pool[pool < median]
        else:
            pool = pool[pool > median]
    return _solution(
        inst, anchors.hi_net, algorithm="exact-distances", lo=anchors.lo, hi=anchors.hi, checks=anchors.checks
    )


def grid_size(x: float, y: float, eps: float) -> int:
    """Largest M with x * (1 + eps/8)^M <= 16 y."""
    step = 1.0 + eps / 8.0
    target = 16.0 * y / x
    m = int(math.floor(math.log(target) / math.log(step)))
    while step ** (m + 1) <= target:
        m += 1
    while m > 0 and step**m > target:
        m -= 1
    return m


def refine_interval(inst: Instance, interval: SearchInterval, eps: float) -> Solution:
    """(4 + eps/2)-approximation from a bracket on the optimum, via a geometric radius grid."""
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    eps = min(float(eps), MAX_EPS)
    x, y = interval.lo, interval.hi
    step = 1.0 + eps / 8.0
    m = grid_size(x, y, eps)

    def radius(i: int) -> float:
        return x * step**i

    ok, net = check_valid(inst, radius(0))
    checks = 1
    if ok:
        # the bracket's lower end already admits a valid net
        return _solution(inst, net, algorithm="refine", grid_index=0, grid_size=m, checks=checks)
    # lo indexes an invalid radius, hi a valid one
    lo, hi = 0, m
    ok, hi_net = check_valid(inst, radius(m))
    checks += 1
    while not ok:
        # the grid top is >= 4x the optimum whenever the bracket holds
        log.warning("top of refinement grid invalid at r=%g; bracket did not hold", radius(hi))
        lo, hi = hi, 2 * hi
        ok, hi_net = check_valid(inst, radius(hi))
        checks += 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ok, net = check_valid(inst, radius(mid))
        checks += 1
        if ok:
            hi, hi_net = mid, net
        else:
            lo = mid
    return _solution(inst, hi_net, algorithm="refine", grid_index=hi, grid_size=m, checks=checks)


def bracket_search(inst: Instance, candidates: CandidateSet) -> SearchInterval:
    """Bracket (lo, hi] on the optimum with spread at most 16, from WSPD candidate radii.

    Binary search over the sorted candidates, probing ``v`` with the net of
    radius 4v. A failed probe at ``lo`` puts the optimum above ``lo``; a passed
    probe at ``hi`` puts it at most 4 * hi. When ``hi`` is much larger than its
    neighbour ``lo``, the candidate envelope forces the optimum to be at least
    ``hi``, which lets the low end move up to ``hi / 2``.
    """
    values = candidates.values
    if values.size == 0:
        raise RuntimeError("empty candidate set for an instance with a positive optimum")
    anchors = _Anchors(inst, 4.0)
    assert anchors.probe(float(values[-1])), "largest candidate covers the diameter"
    lo_i, hi_i = -1, values.size - 1
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if anchors.probe(float(values[mid])):
            hi_i = mid
        else:
            lo_i = mid
    hi = float(values[hi_i])
    if lo_i < 0:
        # the optimum is a point distance, and no point distance is below the smallest candidate
        return SearchInterval(hi / 4.0, 4.0 * hi, checks=anchors.checks)
    spread = 2.0 / candidates.pairs.sigma
    gap = max(1.0 / (1.0 - spread), 1.0 + spread)
    return SearchInterval(max(float(values[lo_i]), hi / gap), 4.0 * hi, checks=anchors.checks)


def solve_wspd(inst: Instance, eps: float = 0.5) -> Solution:
    """(4 + eps)-approximation: bracket the optimum with WSPD candidates, then refine on a radius grid."""
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    zero = zero_price_check(inst)
    if zero is not None:
        return zero
    tree = build_tree(inst.points)
    candidates = candidate_distances(compute_pairs(tree, SIGMA))
    interval = bracket_search(inst, candidates)
    sol = refine_interval(inst, interval, eps)
    sol.meta.update(
        algorithm="wspd",
        candidates=len(candidates),
        bracket=(interval.lo, interval.hi),
        bracket_checks=interval.checks,
    )
    return sol
