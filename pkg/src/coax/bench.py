"""Benchmark harness: build indexes, replay a workload, verify every result
against the full-scan oracle, and time what survives verification."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import index as coax_index
from .dataset import Dataset
from .grid import build_grid, directory_bytes, full_scan, range_query
from .softfd import CorrelationGroup
from .translate import QueryRect
from .workload import Workload

FULL_SCAN = "fullscan"
COLUMN_FILES = "columnfiles"
UNIFORM_GRID = "uniformgrid"
COAX = "coax"
KINDS = (COAX, COLUMN_FILES, UNIFORM_GRID, FULL_SCAN)


class BenchError(Exception):
    pass


class BenchCorrectnessError(BenchError):
    """An index disagreed with the oracle; carries up to ten example diffs."""

    def __init__(self, name: str, diffs: list[dict]):
        self.name = name
        self.diffs = diffs
        super().__init__(f"{name} failed correctness on {len(diffs)}+ queries")


@dataclass(frozen=True)
class IndexSpec:
    kind: str
    cells_per_dim: Optional[int] = None
    sort_dim: Optional[int] = None
    coax_config: Optional[coax_index.CoaxConfig] = None
    groups_override: Optional[tuple[CorrelationGroup, ...]] = None
    label: Optional[str] = None

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == FULL_SCAN or self.cells_per_dim is None:
            return self.kind
        return f"{self.kind}[cells={self.cells_per_dim}]"


class _Runner:
    """Uniform query interface over the benched index kinds."""

    def __init__(self, spec: IndexSpec, d: Dataset):
        self.spec = spec
        kind = spec.kind
        cells = spec.cells_per_dim or 16
        rows = d.matrix()
        if kind == FULL_SCAN:
            self._rows = rows
            self._query = self._full_scan
            self.directory_bytes = 0
        elif kind == COLUMN_FILES:
            sort_dim = spec.sort_dim if spec.sort_dim is not None else 0
            g = build_grid(
                rows,
                grid_dims=[dim for dim in range(d.n_dims) if dim != sort_dim],
                sort_dim=sort_dim,
                cells_per_dim=cells,
                mode="quantile",
            )
            self._grid = g
            self._query = self._grid_query
            self.directory_bytes = directory_bytes(g)
        elif kind == UNIFORM_GRID:
            g = build_grid(
                rows,
                grid_dims=list(range(d.n_dims)),
                sort_dim=None,
                cells_per_dim=cells,
                mode="uniform",
            )
            self._grid = g
            self._query = self._grid_query
            self.directory_bytes = directory_bytes(g)
        elif kind == COAX:
            cfg = spec.coax_config or coax_index.CoaxConfig(cells_per_dim=cells)
            ix = coax_index.build(d, cfg, models_override=spec.groups_override)
            self._coax = ix
            self._query = self._coax_query
            self.directory_bytes = (
                directory_bytes(ix.primary)
                + (directory_bytes(ix.outliers) if ix.outliers is not None else 0)
            )
        else:
            raise BenchError(f"unknown index kind {kind!r}")

    def _full_scan(self, q: QueryRect) -> tuple[np.ndarray, int]:
        ids = full_scan(self._rows, q)
        return ids, len(self._rows)

    def _grid_query(self, q: QueryRect) -> tuple[np.ndarray, int]:
        ids, st = range_query(self._grid, q)
        return ids, st.rows_scanned

    def _coax_query(self, q: QueryRect) -> tuple[np.ndarray, int]:
        ids, st = coax_index.query(self._coax, q)
        return ids, st.rows_scanned

    def query(self, q: QueryRect) -> tuple[np.ndarray, int]:
        return self._query(q)


def run_bench(d: Dataset, workload: Workload, index_specs: Sequence[IndexSpec]) -> dict:
    """Build each spec once, verify it query-by-query against the oracle, then
    replay the workload for timing (one untimed warm-up replay first).

    Raises BenchCorrectnessError as soon as any index disagrees with the
    oracle, attaching a sample of at most ten mismatched queries. Timing
    fields are the only non-deterministic part of the result.
    """
    if not any(s.kind == FULL_SCAN for s in index_specs):
        raise BenchError("index_specs must include the fullscan oracle")
    names = [s.name for s in index_specs]
    if len(set(names)) != len(names):
        raise BenchError(f"duplicate spec names: {names}")

    rows = d.matrix()
    oracle = [np.sort(full_scan(rows, q)) for q in workload.queries]

    results = []
    for spec in index_specs:
        t0 = time.perf_counter()
        runner = _Runner(spec, d)
        build_ms = (time.perf_counter() - t0) * 1e3

        diffs: list[dict] = []
        rows_scanned_total = 0
        for qi, q in enumerate(workload.queries):
            got, scanned = runner.query(q)
            rows_scanned_total += scanned
            got = np.sort(got)
            if not np.array_equal(got, oracle[qi]):
                diffs.append(
                    {
                        "query": qi,
                        "expected_count": int(len(oracle[qi])),
                        "got_count": int(len(got)),
                        "missing": np.setdiff1d(oracle[qi], got)[:5].tolist(),
                        "spurious": np.setdiff1d(got, oracle[qi])[:5].tolist(),
                    }
                )
                if len(diffs) >= 10:
                    break
        if diffs:
            raise BenchCorrectnessError(spec.name, diffs)

        for q in workload.queries:  # warm-up replay, excluded from timing
            runner.query(q)
        lat_us = np.empty(len(workload.queries))
        for qi, q in enumerate(workload.queries):
            t0 = time.perf_counter_ns()
            runner.query(q)
            lat_us[qi] = (time.perf_counter_ns() - t0) / 1e3

        results.append(
            {
                "name": spec.name,
                "kind": spec.kind,
                "cells_per_dim": spec.cells_per_dim,
                "build_ms": build_ms,
                "median_query_us": float(np.median(lat_us)),
                "p99_query_us": float(np.percentile(lat_us, 99)),
                "rows_scanned_total": int(rows_scanned_total),
                "directory_bytes": int(runner.directory_bytes),
                "correctness": "pass",
            }
        )

    return {
        "workload": {
            "kind": workload.kind,
            "k": workload.k,
            "n_queries": len(workload.queries),
            "seed": workload.seed,
        },
        "indexes": results,
    }
