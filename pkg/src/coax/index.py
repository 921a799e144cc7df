"""The correlation-aware index: a dimension-reduced primary grid over the
indexed attributes plus a full-dimensional grid for the outliers.

Queries are answered exactly: constraints on dependent attributes are
translated onto their group predictor for the primary side, candidates are
re-filtered against the original rectangle, and the outlier side is merged in
unless its bounding box rules it out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset
from .grid import GridIndex, QueryStats, build_grid, directory_bytes, range_query
from .softfd import (
    CorrelationGroup,
    DetectConfig,
    detect_pairs,
    fit_pair,
    merge_groups,
    split_data,
)
from .translate import QueryRect, dependent_range_to_indexed


class CoaxError(Exception):
    pass


@dataclass(frozen=True)
class CoaxConfig:
    detect: DetectConfig = field(default_factory=DetectConfig)
    cells_per_dim: int = 16
    sort_dim: Optional[int] = None  # default: predictor of the largest group
    outlier_cells_per_dim: Optional[int] = None  # default: sized to the outlier count
    mode: str = "quantile"


@dataclass
class CoaxIndex:
    groups: list[CorrelationGroup]
    primary: GridIndex
    outliers: Optional[GridIndex]
    names: tuple[str, ...]
    n_rows_total: int

    @property
    def n_dims(self) -> int:
        return self.primary.n_dims

    @property
    def dependent_dims(self) -> tuple[int, ...]:
        out: list[int] = []
        for g in self.groups:
            out.extend(g.dependent_dims)
        return tuple(sorted(out))

    @property
    def indexed_dims(self) -> tuple[int, ...]:
        dep = set(self.dependent_dims)
        return tuple(d for d in range(self.n_dims) if d not in dep)

    @property
    def outlier_bbox(self) -> Optional[tuple[np.ndarray, np.ndarray]]:
        if self.outliers is None:
            return None
        return self.outliers.dim_mins, self.outliers.dim_maxs


@dataclass
class CoaxQueryStats:
    primary: QueryStats = field(default_factory=QueryStats)
    outlier: QueryStats = field(default_factory=QueryStats)

    @property
    def cells_visited(self) -> int:
        return self.primary.cells_visited + self.outlier.cells_visited

    @property
    def rows_scanned(self) -> int:
        return self.primary.rows_scanned + self.outlier.rows_scanned

    @property
    def rows_returned(self) -> int:
        return self.primary.rows_returned + self.outlier.rows_returned


@dataclass(frozen=True)
class IndexStats:
    primary_ratio: float
    indexed_dims: int
    dependent_dims: int
    primary_directory_bytes: int
    outlier_directory_bytes: int


def _auto_outlier_cells(n_outliers: int, n_grid_dims: int, cap: int) -> int:
    """Directory sized to the outlier population, about 32 rows per cell."""
    if n_grid_dims == 0:
        return 1
    c = int(round((max(1, n_outliers) / 32.0) ** (1.0 / n_grid_dims)))
    return max(1, min(cap, c))


def _pick_sort_dim(groups: Sequence[CorrelationGroup], indexed: Sequence[int]) -> int:
    if groups:
        # The predictor of the largest group receives translated constraints
        # most often, so it earns the in-cell sort.
        best = max(groups, key=lambda g: (len(g.models), -g.predictor))
        return best.predictor
    return indexed[0]


def build(
    d: Dataset,
    cfg: CoaxConfig = CoaxConfig(),
    models_override: Optional[Sequence[CorrelationGroup]] = None,
) -> CoaxIndex:
    """Learn groups (unless overridden), split the rows, and build both grids.

    With no detected groups the index degrades gracefully to column files:
    the primary grid spans all dimensions and the outlier grid is empty.
    """
    if d.n_rows == 0:
        raise CoaxError("dataset is empty")

    if models_override is not None:
        groups = list(models_override)
    elif d.n_dims >= 2:
        models = detect_pairs(d, cfg.detect)
        groups = merge_groups(models, refit=lambda x, dep: fit_pair(d, x, dep, cfg.detect))
    else:
        groups = []

    dep_dims = sorted({m.dependent_dim for g in groups for m in g.models})
    if any(not 0 <= dim < d.n_dims for g in groups for dim in (g.predictor, *g.dependent_dims)):
        raise CoaxError("group dims out of range for this dataset")
    indexed = [dim for dim in range(d.n_dims) if dim not in set(dep_dims)]

    sort_dim = cfg.sort_dim if cfg.sort_dim is not None else _pick_sort_dim(groups, indexed)
    if sort_dim not in indexed:
        raise CoaxError(f"sort dim {sort_dim} is a dependent dim")

    split = split_data(d, groups)
    rows = d.matrix()

    primary_grid_dims = [dim for dim in indexed if dim != sort_dim]
    primary = build_grid(
        rows[split.primary_rows],
        grid_dims=primary_grid_dims,
        sort_dim=sort_dim,
        cells_per_dim=cfg.cells_per_dim,
        mode=cfg.mode,
        row_ids=split.primary_rows,
    )

    outliers: Optional[GridIndex] = None
    if len(split.outlier_rows) > 0:
        out_grid_dims = [dim for dim in range(d.n_dims) if dim != sort_dim]
        cells = cfg.outlier_cells_per_dim
        if cells is None:
            cells = _auto_outlier_cells(len(split.outlier_rows), len(out_grid_dims), cfg.cells_per_dim)
        outliers = build_grid(
            rows[split.outlier_rows],
            grid_dims=out_grid_dims,
            sort_dim=sort_dim,
            cells_per_dim=cells,
            mode=cfg.mode,
            row_ids=split.outlier_rows,
        )

    return CoaxIndex(
        groups=groups,
        primary=primary,
        outliers=outliers,
        names=d.names,
        n_rows_total=d.n_rows,
    )


def query(ix: CoaxIndex, q: QueryRect) -> tuple[np.ndarray, CoaxQueryStats]:
    """Exact result of the rectangle over the whole dataset.

    The primary side tightens each group predictor's interval with the
    translated constraints of its dependents and skips the grid entirely if
    any intersection is empty (no in-band row can match then). The outlier
    side is skipped when the rectangle misses the outlier bounding box.
    """
    if q.n_dims != ix.n_dims:
        raise CoaxError(f"query has {q.n_dims} dims, index has {ix.n_dims}")
    stats = CoaxQueryStats()

    lows = q.lows.copy()
    highs = q.highs.copy()
    skip_primary = False
    neg_inf, pos_inf = -np.inf, np.inf
    for g in ix.groups:
        lo = lows[g.predictor]
        hi = highs[g.predictor]
        for m in g.models:
            y_lo = lows[m.dependent_dim]
            y_hi = highs[m.dependent_dim]
            if y_lo == neg_inf and y_hi == pos_inf:
                continue  # unconstrained dependents translate to everything
            iv = dependent_range_to_indexed(m, float(y_lo), float(y_hi))
            if iv.lo > lo:
                lo = iv.lo
            if iv.hi < hi:
                hi = iv.hi
            if lo > hi:
                skip_primary = True
                break
        if skip_primary:
            break
        lows[g.predictor] = lo
        highs[g.predictor] = hi

    parts = []
    if not skip_primary:
        # The rectangle keeps the original dependent-dim bounds, so the grid's
        # own filter re-checks every candidate against the full query.
        ids, stats.primary = range_query(ix.primary, QueryRect._trusted(lows, highs))
        parts.append(ids)

    if ix.outliers is not None:
        bbox_lo, bbox_hi = ix.outliers.dim_mins, ix.outliers.dim_maxs
        if not ((q.lows > bbox_hi).any() or (q.highs < bbox_lo).any()):
            ids, stats.outlier = range_query(ix.outliers, q)
            parts.append(ids)

    if not parts:
        return np.empty(0, dtype=np.int64), stats
    if len(parts) == 1:
        return parts[0], stats
    return np.concatenate(parts), stats


def stats(ix: CoaxIndex) -> IndexStats:
    n_primary = ix.primary.n_rows
    return IndexStats(
        primary_ratio=n_primary / ix.n_rows_total,
        indexed_dims=len(ix.indexed_dims),
        dependent_dims=len(ix.dependent_dims),
        primary_directory_bytes=directory_bytes(ix.primary),
        outlier_directory_bytes=directory_bytes(ix.outliers) if ix.outliers is not None else 0,
    )
