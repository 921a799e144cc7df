"""Binary snapshots for build-once / query-many runs.

Layout (all integers and floats little-endian):

    magic      4 bytes   b"CXGF" for a bare grid, b"CXIX" for a full index
    version    u16
    header_len u32
    header     UTF-8 JSON carrying scalar metadata, array shapes, and the
               serialized correlation groups (index files only)
    arrays     raw array payloads in the order listed in header["arrays"],
               each as dtype '<f8' or '<i8'
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import BinaryIO, Optional

import numpy as np

from .grid import GridIndex
from .index import CoaxIndex
from .softfd import groups_from_json, groups_to_json

GRID_MAGIC = b"CXGF"
INDEX_MAGIC = b"CXIX"
VERSION = 1


class SnapshotError(Exception):
    pass


def _grid_header(g: GridIndex) -> dict:
    return {
        "grid_dims": list(g.grid_dims),
        "sort_dim": g.sort_dim,
        "mode": g.mode,
        "n_rows": g.n_rows,
        "n_dims": g.n_dims,
        "n_cells": g.n_cells,
        "boundary_lens": [len(b) for b in g.boundaries],
    }


def _write_arrays(f: BinaryIO, arrays: list[np.ndarray]) -> None:
    for a in arrays:
        f.write(np.ascontiguousarray(a).astype(a.dtype.newbyteorder("<")).tobytes())


def _grid_arrays(g: GridIndex) -> list[np.ndarray]:
    return [
        *g.boundaries,
        g.cell_start,
        g.cell_count,
        g.records.reshape(-1),
        g.row_ids,
        g.dim_mins,
        g.dim_maxs,
    ]


def _read_array(f: BinaryIO, dtype: str, count: int) -> np.ndarray:
    raw = f.read(count * 8)
    if len(raw) != count * 8:
        raise SnapshotError("truncated snapshot")
    return np.frombuffer(raw, dtype=dtype).copy()


def _read_grid(f: BinaryIO, h: dict) -> GridIndex:
    boundaries = [_read_array(f, "<f8", n) for n in h["boundary_lens"]]
    cell_start = _read_array(f, "<i8", h["n_cells"])
    cell_count = _read_array(f, "<i8", h["n_cells"])
    records = _read_array(f, "<f8", h["n_rows"] * h["n_dims"]).reshape(h["n_rows"], h["n_dims"])
    row_ids = _read_array(f, "<i8", h["n_rows"])
    dim_mins = _read_array(f, "<f8", h["n_dims"])
    dim_maxs = _read_array(f, "<f8", h["n_dims"])
    return GridIndex(
        grid_dims=tuple(h["grid_dims"]),
        sort_dim=h["sort_dim"],
        boundaries=boundaries,
        cell_start=cell_start,
        cell_count=cell_count,
        records=records,
        row_ids=row_ids,
        mode=h["mode"],
        dim_mins=dim_mins,
        dim_maxs=dim_maxs,
    )


def _write_file(path: Path, magic: bytes, header: dict, arrays: list[np.ndarray]) -> None:
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(magic)
        f.write(struct.pack("<HI", VERSION, len(blob)))
        f.write(blob)
        _write_arrays(f, arrays)


def _read_header(f: BinaryIO, magic: bytes) -> dict:
    got = f.read(4)
    if got != magic:
        raise SnapshotError(f"bad magic {got!r}, expected {magic!r}")
    version, header_len = struct.unpack("<HI", f.read(6))
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    return json.loads(f.read(header_len).decode("utf-8"))


def save_grid(g: GridIndex, path: str | Path) -> None:
    _write_file(Path(path), GRID_MAGIC, _grid_header(g), _grid_arrays(g))


def load_grid(path: str | Path) -> GridIndex:
    with open(path, "rb") as f:
        h = _read_header(f, GRID_MAGIC)
        return _read_grid(f, h)


def save_index(ix: CoaxIndex, path: str | Path) -> None:
    header = {
        "names": list(ix.names),
        "n_rows_total": ix.n_rows_total,
        "groups": json.loads(groups_to_json(ix.groups))["groups"],
        "primary": _grid_header(ix.primary),
        "outliers": _grid_header(ix.outliers) if ix.outliers is not None else None,
    }
    arrays = _grid_arrays(ix.primary)
    if ix.outliers is not None:
        arrays += _grid_arrays(ix.outliers)
    _write_file(Path(path), INDEX_MAGIC, header, arrays)


def load_index(path: str | Path) -> CoaxIndex:
    with open(path, "rb") as f:
        h = _read_header(f, INDEX_MAGIC)
        primary = _read_grid(f, h["primary"])
        outliers: Optional[GridIndex] = None
        if h["outliers"] is not None:
            outliers = _read_grid(f, h["outliers"])
    return CoaxIndex(
        groups=groups_from_json(json.dumps({"groups": h["groups"]})),
        primary=primary,
        outliers=outliers,
        names=tuple(h["names"]),
        n_rows_total=h["n_rows_total"],
    )
