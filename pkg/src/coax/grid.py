"""Grid-file index: quantile or uniform cell boundaries over a subset of
dimensions, contiguous per-cell row storage, and one optional in-cell sort
dimension served by binary search.

The same structure backs the correlation-aware primary index, the outlier
index, the column-files baseline (quantile mode + sort dim), and the uniform
grid baseline (uniform mode, no sort dim, pure per-cell scans).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .translate import QueryRect

# Directory accounting: one (start, count) descriptor per cell and one float
# per stored boundary edge. The row store itself is deliberately excluded.
CELL_DESCRIPTOR_BYTES = 16
BOUNDARY_ENTRY_BYTES = 8

QUANTILE = "quantile"
UNIFORM = "uniform"


class GridError(Exception):
    pass


@dataclass
class QueryStats:
    cells_visited: int = 0
    rows_scanned: int = 0
    rows_returned: int = 0


@dataclass
class GridIndex:
    grid_dims: tuple[int, ...]
    sort_dim: Optional[int]
    boundaries: list[np.ndarray]  # per grid dim, strictly increasing interior edges
    cell_start: np.ndarray
    cell_count: np.ndarray
    records: np.ndarray  # (n, n_dims) grouped by cell, sorted in-cell by sort_dim
    row_ids: np.ndarray
    mode: str
    dim_mins: np.ndarray  # per-dim bounding box over all stored rows
    dim_maxs: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.records)

    @property
    def n_dims(self) -> int:
        return self.records.shape[1]

    @property
    def n_cells(self) -> int:
        return len(self.cell_start)

    def cells_per_dim(self) -> tuple[int, ...]:
        return tuple(len(b) + 1 for b in self.boundaries)


def _interior_boundaries(col: np.ndarray, cells_per_dim: int, mode: str) -> np.ndarray:
    lo, hi = float(col.min()), float(col.max())
    if cells_per_dim == 1 or lo == hi:
        return np.empty(0, dtype=np.float64)
    if mode == QUANTILE:
        levels = np.arange(1, cells_per_dim) / cells_per_dim
        edges = np.quantile(col, levels, method="linear")
    elif mode == UNIFORM:
        edges = lo + np.arange(1, cells_per_dim) * (hi - lo) / cells_per_dim
    else:
        raise GridError(f"unknown mode {mode!r}")
    edges = np.unique(edges)
    # Heavy ties can push a quantile onto an extremum; such an edge would only
    # create a cell no row can land in, so it is dropped.
    return edges[(edges > lo) & (edges < hi)]


def _cell_coords(g_boundaries: Sequence[np.ndarray], values: np.ndarray) -> np.ndarray:
    """Row-major cell id for every row; values has one column per grid dim."""
    n = len(values)
    cell = np.zeros(n, dtype=np.int64)
    for k, b in enumerate(g_boundaries):
        cell = cell * (len(b) + 1) + np.searchsorted(b, values[:, k], side="right")
    return cell


def build_grid(
    records: np.ndarray,
    grid_dims: Sequence[int],
    sort_dim: Optional[int],
    cells_per_dim: int,
    mode: str = QUANTILE,
    row_ids: Optional[np.ndarray] = None,
) -> GridIndex:
    """Build a grid index over the given rows.

    grid_dims may be empty, which degenerates to a single cell holding all
    rows (sorted by sort_dim if one is given). Boundary edges are quantiles
    of each grid dim (quantile mode) or equally spaced between min and max
    (uniform mode); duplicate edges are removed, shrinking that dim's cell
    count. sort_dim=None disables in-cell sorting; queries then scan whole
    cells.
    """
    records = np.ascontiguousarray(records, dtype=np.float64)
    if records.ndim != 2 or records.shape[0] == 0:
        raise GridError("need a nonempty (n, n_dims) row matrix")
    n, n_dims = records.shape
    grid_dims = tuple(int(d) for d in grid_dims)
    if sort_dim is not None and sort_dim in grid_dims:
        raise GridError("sort_dim must not be a grid dim")
    if any(not 0 <= d < n_dims for d in grid_dims):
        raise GridError("grid dim out of range")
    if cells_per_dim < 1:
        raise GridError("cells_per_dim must be >= 1")
    if row_ids is None:
        row_ids = np.arange(n, dtype=np.int64)
    else:
        row_ids = np.asarray(row_ids, dtype=np.int64)
        if len(row_ids) != n:
            raise GridError("row_ids length mismatch")

    boundaries = [_interior_boundaries(records[:, d], cells_per_dim, mode) for d in grid_dims]
    if grid_dims:
        cell = _cell_coords(boundaries, records[:, list(grid_dims)])
        n_cells = int(np.prod([len(b) + 1 for b in boundaries]))
    else:
        cell = np.zeros(n, dtype=np.int64)
        n_cells = 1

    if sort_dim is not None:
        order = np.lexsort((records[:, sort_dim], cell))
    else:
        order = np.argsort(cell, kind="stable")
    records = records[order]
    row_ids = row_ids[order]
    cell = cell[order]

    counts = np.bincount(cell, minlength=n_cells).astype(np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int64)

    return GridIndex(
        grid_dims=grid_dims,
        sort_dim=sort_dim,
        boundaries=boundaries,
        cell_start=starts,
        cell_count=counts,
        records=records,
        row_ids=row_ids,
        mode=mode,
        dim_mins=records.min(axis=0),
        dim_maxs=records.max(axis=0),
    )


def full_scan(records: np.ndarray, q: QueryRect, row_ids: Optional[np.ndarray] = None) -> np.ndarray:
    """Filter every row against the rectangle; the oracle for all indexes."""
    records = np.asarray(records, dtype=np.float64)
    if records.size == 0:
        return np.empty(0, dtype=np.int64)
    if row_ids is None:
        row_ids = np.arange(len(records), dtype=np.int64)
    mask = q.contains_mask(records)
    return np.asarray(row_ids)[mask]


def range_query(g: GridIndex, q: QueryRect) -> tuple[np.ndarray, QueryStats]:
    """Row ids of exactly the stored rows satisfying q, plus scan statistics.

    Only cells whose grid-dim ranges intersect q are visited. Inside a
    visited cell the sort dimension is narrowed by two binary searches and
    the remaining dims are filtered by scanning.
    """
    stats = QueryStats()
    if q.n_dims != g.n_dims:
        raise GridError(f"query has {q.n_dims} dims, index has {g.n_dims}")
    lows, highs = q.lows, q.highs
    # Reject queries disjoint from the data bounding box without touching cells.
    if ((lows > g.dim_maxs) | (highs < g.dim_mins)).any():
        return np.empty(0, dtype=np.int64), stats

    dim_ranges = []
    for k, d in enumerate(g.grid_dims):
        b = g.boundaries[k]
        n_b = len(b)
        if n_b <= 16:
            # Tiny boundary arrays: scalar comparisons beat searchsorted calls.
            v_lo, v_hi = lows[d], highs[d]
            lo_c = 0
            while lo_c < n_b and b[lo_c] <= v_lo:
                lo_c += 1
            hi_c = lo_c
            while hi_c < n_b and b[hi_c] <= v_hi:
                hi_c += 1
        else:
            lo_c = int(b.searchsorted(lows[d], side="right"))
            hi_c = int(b.searchsorted(highs[d], side="right"))
        dim_ranges.append(range(lo_c, hi_c + 1))

    dim_sizes = [len(b) + 1 for b in g.boundaries]
    cell_start = g.cell_start
    cell_count = g.cell_count
    if g.sort_dim is not None:
        sort_col = g.records[:, g.sort_dim]
        s_lo = lows[g.sort_dim]
        s_hi = highs[g.sort_dim]
    else:
        sort_col = None

    spans: list[tuple[int, int]] = []
    visited = 0
    for coords in product(*dim_ranges) if g.grid_dims else [()]:
        cell = 0
        for size, c in zip(dim_sizes, coords):
            cell = cell * size + c
        visited += 1
        count = cell_count[cell]
        if count == 0:
            continue
        start = cell_start[cell]
        end = start + count
        if sort_col is not None:
            seg = sort_col[start:end]
            lo = start + seg.searchsorted(s_lo, "left")
            hi = start + seg.searchsorted(s_hi, "right")
            if lo < hi:
                spans.append((lo, hi))
        else:
            spans.append((start, end))
    stats.cells_visited = visited

    if not spans:
        return np.empty(0, dtype=np.int64), stats

    if len(spans) == 1:
        lo, hi = spans[0]
        rows = g.records[lo:hi]  # contiguous span: filter the view directly
        mask = ((rows >= lows) & (rows <= highs)).all(axis=1)
        out = g.row_ids[lo:hi][mask]
        stats.rows_scanned = hi - lo
    else:
        candidate = np.concatenate([np.arange(lo, hi) for lo, hi in spans])
        rows = g.records[candidate]
        mask = ((rows >= lows) & (rows <= highs)).all(axis=1)
        out = g.row_ids[candidate[mask]]
        stats.rows_scanned = len(candidate)
    stats.rows_returned = len(out)
    return out, stats


def point_query(g: GridIndex, point: Sequence[float]) -> np.ndarray:
    """All rows at exactly these coordinates (a range query with lo = hi)."""
    ids, _ = range_query(g, QueryRect.point(point))
    return ids


def directory_bytes(g: GridIndex) -> int:
    """Bytes of the cell directory and boundary arrays, excluding the row store."""
    n_boundary_entries = sum(len(b) for b in g.boundaries)
    return g.n_cells * CELL_DESCRIPTOR_BYTES + n_boundary_entries * BOUNDARY_ENTRY_BYTES


def directory_bytes_for(cells_per_dim_counts: Sequence[int]) -> int:
    """Directory accounting for a hypothetical grid without building it."""
    n_cells = 1
    n_edges = 0
    for c in cells_per_dim_counts:
        if c < 1:
            raise GridError("cell counts must be >= 1")
        n_cells *= int(c)
        n_edges += int(c) - 1
    return n_cells * CELL_DESCRIPTOR_BYTES + n_edges * BOUNDARY_ENTRY_BYTES
