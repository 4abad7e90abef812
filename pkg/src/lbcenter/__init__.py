"""Approximation algorithms for lower-bounded center clustering in R^d."""
from lbcenter.geometry import (
    Instance,
    InfeasibleError,
    InstanceError,
    Solution,
    distance,
    price_of,
    squared_distance,
    validate_instance,
)
from lbcenter.grid import Grid, Net, build_grid, cell_of, compute_net, neighborhood_cells, net_with_assignment
from lbcenter.solver import (
    PriceAtMost,
    PriceGreater,
    SearchInterval,
    bracket_search,
    check_valid,
    decide,
    refine_interval,
    solve_exact_distances,
    solve_wspd,
    zero_price_check,
)
from lbcenter.wspd import CandidateSet, PairDecomposition, QuadTree, build_tree, candidate_distances, compute_pairs
from lbcenter.oracle import OracleSizeError, assignment_feasible, brute_force_opt, naive_net

__version__ = "0.1.0"
