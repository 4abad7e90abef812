import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lbcenter import InfeasibleError, Instance, InstanceError, Solution, distance, price_of, squared_distance, validate_instance


@pytest.mark.parametrize(
    "p, q, expected",
    [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 5.0), ((1, 0), (-2, 0), 3.0)],
)
def test_distance(p, q, expected):
    assert distance(p, q) == expected


@pytest.mark.parametrize(
    "p, q, expected",
    [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 25.0), ((0, 0), (1, 1), 2.0)],
)
def test_squared_distance(p, q, expected):
    assert squared_distance(p, q) == expected


def test_dimension_mismatch():
    with pytest.raises(InstanceError):
        distance((0, 0), (0, 0, 0))
    with pytest.raises(InstanceError):
        squared_distance((1,), (1, 2))


# dyadic coordinates keep squared differences clear of underflow
coord = st.integers(-(10**9), 10**9).map(lambda v: v / 1024)
point3 = st.tuples(coord, coord, coord)


@settings(max_examples=300)
@given(point3, point3, point3)
def test_metric_axioms(p, q, s):
    pq, qs, ps = distance(p, q), distance(q, s), distance(p, s)
    assert pq == distance(q, p)
    assert pq >= 0
    assert (pq == 0) == (tuple(p) == tuple(q))
    assert ps <= (pq + qs) * (1 + 1e-9) + 1e-300


@settings(max_examples=300)
@given(point3, point3)
def test_squared_matches_distance(p, q):
    sq = squared_distance(p, q)
    assert math.isclose(distance(p, q) ** 2, sq, rel_tol=1e-12, abs_tol=0.0) or sq == 0


def test_validate_instance():
    pts = np.zeros((4, 2))
    validate_instance(Instance(pts, 2))
    with pytest.raises(InfeasibleError, match="infeasible"):
        validate_instance(Instance(pts, 5))
    with pytest.raises(InstanceError):
        Instance([(0.0, float("nan")), (1.0, 1.0)], 1)
    with pytest.raises(InstanceError):
        Instance([(0.0, float("inf"))], 1)
    with pytest.raises(InstanceError):
        Instance(pts, 0)


def test_price_of(collinear4):
    inst = Instance(collinear4, 1)
    assert price_of(inst, range(4), range(4)) == 0.0
    assert price_of(inst, [0, 2], [0, 0, 2, 2]) == 1.0
    assert price_of(inst, [0], [0, 0, 0, 0]) == 3.0
    with pytest.raises(InstanceError, match="not a center"):
        price_of(inst, [0], [0, 0, 2, 2])


@settings(max_examples=100)
@given(st.permutations([0, 3, 5, 7]), st.integers(0, 2**32 - 1))
def test_price_of_ignores_center_order(centers, seed):
    rng = np.random.default_rng(seed)
    inst = Instance(rng.random((9, 2)), 1)
    assignment = [0, 3, 5, 7] + list(rng.choice([0, 3, 5, 7], size=5))
    assert price_of(inst, centers, assignment) == price_of(inst, sorted(centers), assignment)


def test_solution_check(collinear4):
    inst = Instance(collinear4, 2)
    Solution.from_assignment(inst, [0, 0, 2, 2]).check(inst)
    with pytest.raises(AssertionError):
        Solution.from_assignment(inst, [0, 0, 0, 3]).check(inst)
