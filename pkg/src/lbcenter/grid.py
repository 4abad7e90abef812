"""Grid hashing, r-nets and nearest-center assignment.

Points are bucketed into a uniform grid of side ``r / (2 sqrt(d))``; a cell then
has diameter ``r / 2`` and can hold at most one net center. The greedy net scan
visits points in input order and, for each new center, only inspects the cells
in a constant-size box around it.

The hot loops run under numba. When the occupied key range is compact, cells
are numbered in row-major order and points are sorted by that number, so the
box around a cell is a few contiguous runs of memory. Otherwise cells live in an
open-addressing hash table keyed on the integer cell tuple.
``build_grid``/``neighborhood_cells`` expose the same bucketing as plain Python
objects.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np

from lbcenter.geometry import as_points

# keys beyond this magnitude would overflow the int64 cell table
_MAX_KEY = float(2**62)


def neighborhood_reach(d: int) -> int:
    """Largest per-coordinate key offset that can separate points at distance <= r.

    Equal to ceil(2 sqrt d) unless 2 sqrt d is an integer, where one extra ring
    absorbs rounding in the floor of ``p / delta``.
    """
    return math.floor(2.0 * math.sqrt(d)) + 1


def cell_side(r: float, d: int) -> float:
    return r / (2.0 * math.sqrt(d))


def cell_of(p, delta: float) -> tuple[int, ...]:
    """Integer key of the grid cell of side ``delta`` containing ``p``."""
    if not delta > 0:
        raise ValueError(f"cell side must be positive, got {delta}")
    return tuple(math.floor(float(x) / delta) for x in np.asarray(p, dtype=np.float64).ravel())


@dataclass
class Grid:
    delta: float
    cells: dict[tuple[int, ...], list[int]]


def build_grid(points, delta: float) -> Grid:
    if not delta > 0:
        raise ValueError(f"cell side must be positive, got {delta}")
    cells: dict[tuple[int, ...], list[int]] = {}
    for i, p in enumerate(np.asarray(points, dtype=np.float64)):
        cells.setdefault(cell_of(p, delta), []).append(i)
    return Grid(delta=delta, cells=cells)


def neighborhood_cells(key, grid: Grid) -> list[tuple[int, ...]]:
    """Non-empty cells whose key is within the neighborhood reach of ``key`` in every coordinate."""
    key = tuple(key)
    k = neighborhood_reach(len(key))
    if (2 * k + 1) ** len(key) > len(grid.cells):
        return [c for c in grid.cells if max(abs(a - b) for a, b in zip(c, key)) <= k]
    out = []
    for off in itertools.product(range(-k, k + 1), repeat=len(key)):
        c = tuple(a + b for a, b in zip(key, off))
        if c in grid.cells:
            out.append(c)
    return out


@dataclass
class Net:
    """Centers of an r-net (creation order), optionally with the nearest-center assignment."""

    radius: float
    centers: np.ndarray
    assignment: np.ndarray | None = None
    counts: np.ndarray | None = None

    def counts_by_center(self) -> dict[int, int]:
        return {int(c): int(k) for c, k in zip(self.centers, self.counts)}

    def is_valid(self, lam: int) -> bool:
        return bool(self.counts.min() >= lam)


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True)
def _hash(keys, i, mask):
    h = np.int64(0)
    for k in range(keys.shape[1]):
        h = (h ^ keys[i, k]) * np.int64(0x100000001B3)
        h = h ^ (h >> 29)
    return h & mask


@numba.njit(cache=True)
def _same(a, i, b, j):
    for k in range(a.shape[1]):
        if a[i, k] != b[j, k]:
            return False
    return True


@numba.njit(cache=True)
def _bucket(keys):
    """Hash every key row into the table and group the points into CSR buckets by cell."""
    n, d = keys.shape
    size = 1
    while size < 2 * n:
        size *= 2
    mask = np.int64(size - 1)
    table = np.full(size, -1, dtype=np.int64)
    cell_keys = np.empty((n, d), dtype=np.int64)
    point_cell = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        h = _hash(keys, i, mask)
        while True:
            c = table[h]
            if c < 0:
                table[h] = m
                cell_keys[m] = keys[i]
                point_cell[i] = m
                m += 1
                break
            if _same(cell_keys, c, keys, i):
                point_cell[i] = c
                break
            h = (h + 1) & mask
    start = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        start[point_cell[i] + 1] += 1
    for c in range(m):
        start[c + 1] += start[c]
    fill = start[:m].copy()
    members = np.empty(n, dtype=np.int64)
    for i in range(n):
        c = point_cell[i]
        members[fill[c]] = i
        fill[c] += 1
    return point_cell, cell_keys[:m].copy(), table, start, members


@numba.njit(cache=True)
def _box_cells(c, cell_keys, table, offsets, reach, out):
    """Write the ids of non-empty cells in the offset box around cell ``c`` into ``out``."""
    m, d = cell_keys.shape
    found = 0
    if offsets.shape[0] == 0:
        for e in range(m):
            near = True
            for k in range(d):
                if abs(cell_keys[e, k] - cell_keys[c, k]) > reach:
                    near = False
                    break
            if near:
                out[found] = e
                found += 1
        return found
    mask = np.int64(table.shape[0] - 1)
    for o in range(offsets.shape[0]):
        h = np.int64(0)
        for k in range(d):
            h = (h ^ (cell_keys[c, k] + offsets[o, k])) * np.int64(0x100000001B3)
            h = h ^ (h >> 29)
        h = h & mask
        while True:
            e = table[h]
            if e < 0:
                break
            same = True
            for k in range(d):
                if cell_keys[e, k] != cell_keys[c, k] + offsets[o, k]:
                    same = False
                    break
            if same:
                out[found] = e
                found += 1
                break
            h = (h + 1) & mask
    return found


@numba.njit(cache=True)
def _cell_keys(points, delta, limit):
    """floor(p / delta) per coordinate plus the per-axis key range; ok is False on overflow."""
    n, d = points.shape
    keys = np.empty((n, d), dtype=np.int64)
    lo = np.full(d, np.iinfo(np.int64).max, dtype=np.int64)
    hi = np.full(d, np.iinfo(np.int64).min, dtype=np.int64)
    for i in range(n):
        for k in range(d):
            v = points[i, k] / delta
            if not abs(v) < limit:
                return keys, lo, hi, False
            key = np.int64(np.floor(v))
            keys[i, k] = key
            lo[k] = min(lo[k], key)
            hi[k] = max(hi[k], key)
    return keys, lo, hi, True


@numba.njit(cache=True)
def _row_major(keys, i, ext):
    lin = 0
    for k in range(keys.shape[1]):
        lin = lin * ext[k] + keys[i, k]
    return lin


@numba.njit(cache=True)
def _counting_sort(keys, lo, ext, size):
    """Shift keys to start at 0, then stably bucket the points by row-major cell number.

    Returns the bucket order and the CSR bucket starts.
    """
    n, d = keys.shape
    start = np.zeros(size + 1, dtype=np.int64)
    for i in range(n):
        for k in range(d):
            keys[i, k] -= lo[k]
        start[_row_major(keys, i, ext) + 1] += 1
    for c in range(size):
        start[c + 1] += start[c]
    fill = start[:size].copy()
    members = np.empty(n, dtype=np.int64)
    for i in range(n):
        c = _row_major(keys, i, ext)
        members[fill[c]] = i
        fill[c] += 1
    return members, start


@numba.njit(cache=True)
def _sorted_copy(points, members):
    n, d = points.shape
    out = np.empty((n, d))
    for s in range(n):
        for k in range(d):
            out[s, k] = points[members[s], k]
    return out


@numba.njit(cache=True)
def _visit(points, i, sorted_pts, lo, hi, r2, marked, best, best_d, assign):
    """Center ``i`` marks its r-ball and, when assigning, bids for every slot in [lo, hi)."""
    for s in range(lo, hi):
        dd = 0.0
        for k in range(points.shape[1]):
            diff = points[i, k] - sorted_pts[s, k]
            dd += diff * diff
        if dd <= r2:
            marked[s] = True
        if assign and dd < best_d[s]:
            best_d[s] = dd
            best[s] = i


@numba.njit(cache=True)
def _unslot(best, members, assign):
    if not assign:
        return np.empty(0, dtype=np.int64)
    assignment = np.empty(best.shape[0], dtype=np.int64)
    for s in range(best.shape[0]):
        assignment[members[s]] = best[s]
    return assignment


@numba.njit(cache=True)
def _greedy_net(points, r2, point_cell, cell_keys, table, cell_start, members, offsets, reach, assign):
    """Scan in input order; each new center marks its r-ball and bids for nearby points.

    Centers are created in increasing index order and a bid only wins on a strictly
    smaller squared distance, so exact ties go to the smaller center index.
    Per-point state is kept by bucket slot, next to a cell-sorted copy of the
    coordinates.
    """
    n = points.shape[0]
    m = cell_keys.shape[0]
    sorted_pts = _sorted_copy(points, members)
    slot_of = np.empty(n, dtype=np.int64)
    slot_of[members] = np.arange(n)
    marked = np.zeros(n, dtype=np.bool_)
    # bid state is only needed for the assignment
    best = np.full(n if assign else 0, -1, dtype=np.int64)
    best_d = np.full(n if assign else 0, np.inf)
    centers = np.empty(n, dtype=np.int64)
    box = np.empty(max(offsets.shape[0], m), dtype=np.int64)
    nc = 0
    for i in range(n):
        if marked[slot_of[i]]:
            continue
        centers[nc] = i
        nc += 1
        found = _box_cells(point_cell[i], cell_keys, table, offsets, reach, box)
        for t in range(found):
            e = box[t]
            _visit(points, i, sorted_pts, cell_start[e], cell_start[e + 1], r2, marked, best, best_d, assign)
    return centers[:nc].copy(), _unslot(best, members, assign)


@numba.njit(cache=True)
def _greedy_net_dense(points, r2, keys, ext, cell_start, members, reach, assign):
    """Same scan over a dense grid whose cells are numbered in row-major key order.

    Points are sorted by that number, so the box around a cell is a handful of
    contiguous slot ranges: one per combination of the leading coordinates.
    """
    n, d = points.shape
    sorted_pts = _sorted_copy(points, members)
    slot_of = np.empty(n, dtype=np.int64)
    slot_of[members] = np.arange(n)
    marked = np.zeros(n, dtype=np.bool_)
    # bid state is only needed for the assignment
    best = np.full(n if assign else 0, -1, dtype=np.int64)
    best_d = np.full(n if assign else 0, np.inf)
    centers = np.empty(n, dtype=np.int64)
    lo = np.empty(d, dtype=np.int64)
    hi = np.empty(d, dtype=np.int64)
    cur = np.empty(d, dtype=np.int64)
    nc = 0
    for i in range(n):
        if marked[slot_of[i]]:
            continue
        centers[nc] = i
        nc += 1
        for k in range(d):
            lo[k] = max(keys[i, k] - reach, 0)
            hi[k] = min(keys[i, k] + reach, ext[k] - 1)
            cur[k] = lo[k]
        # odometer over the leading d - 1 coordinates; the last one is a contiguous run
        while True:
            row = 0
            for k in range(d - 1):
                row = row * ext[k] + cur[k]
            first = row * ext[d - 1] + lo[d - 1]
            last = row * ext[d - 1] + hi[d - 1]
            _visit(points, i, sorted_pts, cell_start[first], cell_start[last + 1], r2, marked, best, best_d, assign)
            k = d - 2
            while k >= 0 and cur[k] == hi[k]:
                cur[k] = lo[k]
                k -= 1
            if k < 0:
                break
            cur[k] += 1
    return centers[:nc].copy(), _unslot(best, members, assign)


# ---------------------------------------------------------------------------


def _net(points, r, assign):
    if not r > 0 or not math.isfinite(r):
        raise ValueError(f"net radius must be positive and finite, got {r}")
    points = np.ascontiguousarray(as_points(points))
    n, d = points.shape
    if n == 0:
        raise ValueError("cannot build a net of an empty point set")
    r = float(r)
    keys, key_lo, key_hi, ok = _cell_keys(points, cell_side(r, d), _MAX_KEY)
    if not ok:
        raise ValueError(f"radius {r} is too small for the coordinate range")
    reach = neighborhood_reach(d)
    ext = key_hi - key_lo + 1
    runs = float(2 * reach + 1) ** (d - 1)
    if float(np.prod(ext.astype(np.float64))) <= 8.0 * n + 64 and runs <= 4.0 * n:
        # compact key range: number cells row-major so nearby cells share memory
        members, start = _counting_sort(keys, key_lo, ext, int(np.prod(ext)))
        centers, assignment = _greedy_net_dense(points, r * r, keys, ext, start, members, reach, assign)
    else:
        point_cell, cell_keys, table, start, members = _bucket(keys)
        if (2 * reach + 1) ** d <= 4 * cell_keys.shape[0]:
            offsets = np.array(list(itertools.product(range(-reach, reach + 1), repeat=d)), dtype=np.int64)
        else:
            # sparse high-dimensional grid: scanning the occupied cells is cheaper
            offsets = np.empty((0, d), dtype=np.int64)
        centers, assignment = _greedy_net(
            points, r * r, point_cell, cell_keys, table, start, members, offsets, reach, assign
        )
    if not assign:
        return Net(radius=r, centers=centers)
    counts = np.bincount(assignment, minlength=n)[centers]
    return Net(radius=r, centers=centers, assignment=assignment, counts=counts)


def compute_net(points, r: float) -> Net:
    """Greedy r-net in input order; ``assignment`` and ``counts`` are left unset."""
    return _net(points, r, assign=False)


def net_with_assignment(points, r: float) -> Net:
    """r-net plus nearest-center assignment (ties go to the smaller center index)."""
    return _net(points, r, assign=True)
