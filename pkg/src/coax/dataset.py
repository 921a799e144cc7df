"""Columnar numeric datasets: CSV ingestion, sampling, and per-column diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd


class DatasetError(Exception):
    """Raised when a dataset cannot be constructed or an operation's inputs are invalid."""


@dataclass(frozen=True)
class Dataset:
    """Immutable columnar table of finite float64 attributes.

    All columns have the same length and contain no NaN/Inf; the arrays are
    marked read-only so a Dataset can be shared across threads.
    """

    columns: tuple[np.ndarray, ...]
    names: tuple[str, ...]
    dropped_rows: int = 0

    def __post_init__(self) -> None:
        if len(self.columns) == 0:
            raise DatasetError("dataset needs at least one column")
        lengths = {len(c) for c in self.columns}
        if len(lengths) != 1:
            raise DatasetError(f"ragged columns: lengths {sorted(lengths)}")
        if len(self.names) != len(self.columns):
            raise DatasetError("one name per column required")
        for c in self.columns:
            if not np.all(np.isfinite(c)):
                raise DatasetError("non-finite values in column data")
            c.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return len(self.columns[0])

    @property
    def n_dims(self) -> int:
        return len(self.columns)

    def matrix(self) -> np.ndarray:
        """Rows as an (n_rows, n_dims) array. Fresh copy; callers may mutate."""
        return np.column_stack(self.columns)

    @staticmethod
    def from_matrix(rows: np.ndarray, names: Sequence[str] | None = None) -> "Dataset":
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise DatasetError("expected a 2-D row matrix")
        if names is None:
            names = [f"c{i}" for i in range(rows.shape[1])]
        return Dataset(
            columns=tuple(np.ascontiguousarray(rows[:, j]) for j in range(rows.shape[1])),
            names=tuple(names),
        )


@dataclass(frozen=True)
class ColumnStats:
    """Extrema, mean, and evenly spaced empirical quantiles of one column."""

    minimum: float
    maximum: float
    mean: float
    quantiles: tuple[float, ...] = field(default=())


def _resolve_dims(header: Sequence[str], dims: Sequence[str | int] | None) -> list[int]:
    if dims is None:
        return list(range(len(header)))
    if len(dims) == 0:
        raise DatasetError("no columns selected")
    positions: list[int] = []
    for d in dims:
        if isinstance(d, int) or (isinstance(d, str) and d.lstrip("-").isdigit()):
            idx = int(d)
            if not 0 <= idx < len(header):
                raise DatasetError(f"column index {idx} out of range for {len(header)} columns")
            positions.append(idx)
        else:
            try:
                positions.append(header.index(d))  # type: ignore[arg-type]
            except ValueError:
                raise DatasetError(f"no column named {d!r}; header is {list(header)}") from None
    return positions


def load_csv(path: str | Path, dims: Sequence[str | int] | None = None) -> Dataset:
    """Load selected columns of a headered CSV file into a Dataset.

    Columns are selected by name or zero-based position. Rows with values
    that do not parse as finite numbers in any selected column are dropped
    and counted in ``Dataset.dropped_rows`` rather than failing the load.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such file: {path}")
    frame = pd.read_csv(path, sep=",", encoding="utf-8", dtype=str, skipinitialspace=True)
    header = [str(c) for c in frame.columns]
    positions = _resolve_dims(header, dims)

    selected = frame.iloc[:, positions]
    numeric = selected.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    keep = np.all(np.isfinite(numeric), axis=1) if len(numeric) else np.zeros(0, dtype=bool)
    dropped = int(len(numeric) - keep.sum())
    numeric = numeric[keep]
    if numeric.shape[0] == 0:
        raise DatasetError(f"no usable rows in {path} (dropped {dropped})")

    return Dataset(
        columns=tuple(np.ascontiguousarray(numeric[:, j]) for j in range(numeric.shape[1])),
        names=tuple(header[p] for p in positions),
        dropped_rows=dropped,
    )


def sample(d: Dataset, n: int, seed: int) -> Dataset:
    """Uniform sample of min(n, n_rows) rows without replacement, deterministic per seed."""
    if n < 1:
        raise DatasetError("sample size must be >= 1")
    take = min(n, d.n_rows)
    rng = np.random.default_rng(seed)
    idx = rng.choice(d.n_rows, size=take, replace=False)
    idx.sort()
    return Dataset(
        columns=tuple(np.ascontiguousarray(c[idx]) for c in d.columns),
        names=d.names,
    )


def column_stats(d: Dataset, dim: int, q: int) -> ColumnStats:
    """Stats for one column with q quantiles at levels i/(q+1), i = 1..q.

    Quantiles use linear interpolation between order statistics.
    """
    if not 0 <= dim < d.n_dims:
        raise DatasetError(f"dim {dim} out of range")
    if q < 1:
        raise DatasetError("quantile count must be >= 1")
    col = d.columns[dim]
    if len(col) == 0:
        raise DatasetError("empty column")
    levels = np.arange(1, q + 1) / (q + 1)
    qs = np.quantile(col, levels, method="linear")
    return ColumnStats(
        minimum=float(col.min()),
        maximum=float(col.max()),
        mean=float(col.mean()),
        quantiles=tuple(float(v) for v in qs),
    )


def kl_uniform_divergence(d: Dataset, dim: int) -> float:
    """KL divergence (natural log) between a column's value frequencies and uniform.

    Computed over the empirical distribution of the column's unique values
    against the uniform distribution on those same values: zero iff every
    unique value occurs equally often.
    """
    if not 0 <= dim < d.n_dims:
        raise DatasetError(f"dim {dim} out of range")
    col = d.columns[dim]
    if len(col) == 0:
        raise DatasetError("empty column")
    _, counts = np.unique(col, return_counts=True)
    p = counts / counts.sum()
    n_unique = len(counts)
    if n_unique == 1:
        return 0.0
    return float(np.sum(p * np.log(p * n_unique)))
