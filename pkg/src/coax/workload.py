"""Query workload generation: rectangles around the K nearest neighbours of
random seed records, or point lookups at the records themselves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .translate import QueryRect

POINT = "point"
RANGE = "range"


class WorkloadError(Exception):
    pass


@dataclass(frozen=True)
class Workload:
    queries: tuple[QueryRect, ...]
    kind: str
    k: int
    seed: int


def gen_workload(d: Dataset, k: int, n_queries: int, kind: str, seed: int) -> Workload:
    """Generate n_queries rectangles, each guaranteed to contain >= k records.

    Range queries take the per-dimension min/max of the k nearest records to
    a random seed record; nearness is Euclidean after min-max normalizing
    every dimension so wide-ranged attributes do not dominate. Point queries
    use the seed record's coordinates with lo = hi.
    """
    if kind not in (POINT, RANGE):
        raise WorkloadError(f"unknown workload kind {kind!r}")
    if not 1 <= k <= d.n_rows:
        raise WorkloadError(f"k must be in [1, {d.n_rows}]")
    if n_queries < 1:
        raise WorkloadError("n_queries must be >= 1")

    rng = np.random.default_rng(seed)
    rows = d.matrix()
    mins = rows.min(axis=0)
    span = rows.max(axis=0) - mins
    span[span == 0] = 1.0
    normalized = (rows - mins) / span

    queries = []
    seeds = rng.integers(0, d.n_rows, size=n_queries)
    for s in seeds:
        if kind == POINT:
            queries.append(QueryRect.point(rows[s]))
            continue
        dist2 = np.einsum("ij,ij->i", normalized - normalized[s], normalized - normalized[s])
        nearest = np.argpartition(dist2, k - 1)[:k]
        block = rows[nearest]
        queries.append(QueryRect(block.min(axis=0), block.max(axis=0)))
    return Workload(queries=tuple(queries), kind=kind, k=k, seed=seed)
