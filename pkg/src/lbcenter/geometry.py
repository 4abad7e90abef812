"""Instances and solutions, plus the distance arithmetic everything else uses.

Points are stored as rows of a float64 array of shape (n, d). Centers are
always referred to by point index, never by coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InstanceError(ValueError):
    """Malformed input such as ragged rows or a bad lower bound."""


class InfeasibleError(InstanceError):
    """The lower bound exceeds the number of points, so no assignment exists."""


def as_points(points) -> np.ndarray:
    """Coerce ``points`` into a finite (n, d) float64 array."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 1)
    if arr.ndim != 2:
        raise InstanceError(f"points must be a 2-D array, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise InstanceError("points must have dimension d >= 1")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0, 0])
        raise InstanceError(f"point {bad} has a non-finite coordinate")
    return arr


def _pair(p, q):
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise InstanceError(f"dimension mismatch: {p.size} vs {q.size}")
    return p, q


def squared_distance(p, q) -> float:
    p, q = _pair(p, q)
    total = 0.0
    for a, b in zip(p.tolist(), q.tolist()):
        total += (a - b) * (a - b)
    return total


def distance(p, q) -> float:
    """Euclidean distance between two points of equal dimension."""
    return math.sqrt(squared_distance(p, q))


@dataclass(frozen=True)
class Instance:
    """A point set together with the lower bound ``lam`` on cluster sizes."""

    points: np.ndarray
    lam: int

    def __post_init__(self):
        object.__setattr__(self, "points", as_points(self.points))
        if isinstance(self.lam, bool) or int(self.lam) != self.lam:
            raise InstanceError(f"lambda must be an integer, got {self.lam!r}")
        object.__setattr__(self, "lam", int(self.lam))
        if self.lam < 1:
            raise InstanceError(f"lambda must be >= 1, got {self.lam}")
        if self.n < 1:
            raise InstanceError("instance needs at least one point")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def validate_instance(inst: Instance) -> None:
    """Raise unless ``inst`` admits at least one feasible clustering."""
    points = as_points(inst.points)
    if inst.lam < 1:
        raise InstanceError(f"lambda must be >= 1, got {inst.lam}")
    if inst.lam > points.shape[0]:
        raise InfeasibleError(
            f"infeasible: lower bound exceeds point count ({inst.lam} > {points.shape[0]})"
        )


def assigned_sq_distances(points: np.ndarray, assignment: np.ndarray) -> np.ndarray:
    """Squared distance from every point to its assigned center, coordinate-sequential."""
    diff = points - points[assignment]
    out = diff[:, 0] * diff[:, 0]
    for k in range(1, points.shape[1]):
        out = out + diff[:, k] * diff[:, k]
    return out


def price_of(inst: Instance, centers, assignment) -> float:
    """Maximum distance from a point to the center it is assigned to."""
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape != (inst.n,):
        raise InstanceError(f"assignment must have length {inst.n}, got {assignment.shape}")
    centers = np.unique(np.asarray(centers, dtype=np.int64))
    if centers.size == 0:
        raise InstanceError("empty center set")
    if centers[0] < 0 or centers[-1] >= inst.n:
        raise InstanceError("center index out of range")
    stray = ~np.isin(assignment, centers)
    if stray.any():
        i = int(np.flatnonzero(stray)[0])
        raise InstanceError(f"point {i} is assigned to {assignment[i]}, which is not a center")
    return math.sqrt(float(assigned_sq_distances(inst.points, assignment).max()))


@dataclass(frozen=True)
class Solution:
    """Centers and the per-point assignment, together with the price they realize."""

    centers: np.ndarray
    assignment: np.ndarray
    price: float
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_assignment(cls, inst: Instance, assignment, meta: dict | None = None) -> "Solution":
        assignment = np.asarray(assignment, dtype=np.int64)
        centers = np.unique(assignment)
        price = price_of(inst, centers, assignment)
        return cls(centers=centers, assignment=assignment, price=price, meta=dict(meta or {}))

    def loads(self) -> dict[int, int]:
        idx, cnt = np.unique(self.assignment, return_counts=True)
        return {int(c): int(k) for c, k in zip(idx, cnt)}

    def check(self, inst: Instance) -> None:
        """Raise ``AssertionError`` unless this is a feasible solution for ``inst``."""
        assert self.assignment.shape == (inst.n,), "assignment length"
        assert np.all(np.isin(self.assignment, self.centers)), "assignment to non-center"
        loads = self.loads()
        assert set(loads) == set(self.centers.tolist()), "center without points"
        assert min(loads.values()) >= inst.lam, f"load below lambda: {loads}"
        assert self.price == price_of(inst, self.centers, self.assignment), "stale price"
