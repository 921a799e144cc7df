"""Command-line front end.

Subcommands: detect (learn correlation groups from a CSV), build (construct
an index snapshot), query (run one rectangle against a snapshot), bench
(compare index kinds on generated workloads), theory (validate the capacity
closed forms by simulation). All outputs are JSON; bench and theory reports
additionally get a CSV summary and figures rendered next to them.

Exit codes: 0 success, 1 usage error, 2 correctness failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import index as coax_index
from .bench import (
    COAX,
    COLUMN_FILES,
    FULL_SCAN,
    KINDS,
    UNIFORM_GRID,
    BenchCorrectnessError,
    IndexSpec,
    run_bench,
)
from .dataset import Dataset, DatasetError, load_csv
from .grid import directory_bytes_for
from .snapshot import load_index, save_index
from .softfd import DetectConfig, detect_pairs, fit_pair, groups_from_json, groups_to_json, merge_groups
from .theory import theory_report
from .translate import QueryRect
from .workload import gen_workload

DEFAULT_CELL_SWEEP = (4, 8, 16, 32, 64)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _split_dims(text: Optional[str]) -> Optional[list[str]]:
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise UsageError("--dims must name at least one column")
    return parts


def _parse_rect(text: str, n_dims: int) -> QueryRect:
    """Rectangle JSON: either a list of [lo, hi] pairs (one per dim) or an
    object {dim_index: [lo, hi]}; null bounds mean unbounded."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"malformed rect JSON: {e}") from None

    def pair(v) -> tuple[Optional[float], Optional[float]]:
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            raise UsageError(f"rect bounds must be [lo, hi], got {v!r}")
        lo = None if v[0] is None else float(v[0])
        hi = None if v[1] is None else float(v[1])
        return lo, hi

    bounds: dict[int, tuple[Optional[float], Optional[float]]] = {}
    if isinstance(doc, list):
        if len(doc) != n_dims:
            raise UsageError(f"rect list has {len(doc)} entries, index has {n_dims} dims")
        for i, v in enumerate(doc):
            bounds[i] = pair(v)
    elif isinstance(doc, dict):
        for k, v in doc.items():
            try:
                dim = int(k)
            except ValueError:
                raise UsageError(f"rect keys must be dim indices, got {k!r}") from None
            if not 0 <= dim < n_dims:
                raise UsageError(f"rect dim {dim} out of range (index has {n_dims} dims)")
            bounds[dim] = pair(v)
    else:
        raise UsageError("rect JSON must be a list or an object")
    try:
        return QueryRect.from_bounds(n_dims, bounds)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _detect_config(args: argparse.Namespace) -> DetectConfig:
    return DetectConfig(
        sample_count=args.sample,
        chunks=args.chunks,
        threshold=args.threshold,
        target_ratio=args.target_ratio,
        min_quality=args.min_quality,
        seed=args.seed,
    )


def _add_detect_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sample", type=int, default=100_000, help="detection sample size")
    p.add_argument("--chunks", type=int, default=100, help="bucket grid resolution")
    p.add_argument("--threshold", type=int, default=None, help="bucket density threshold (default: auto)")
    p.add_argument("--target-ratio", type=float, default=0.9, help="target primary-set fraction")
    p.add_argument("--min-quality", type=float, default=0.75, help="minimum model quality to keep a pair")


def _write_json(doc: dict | str, out: Optional[Path]) -> None:
    text = doc if isinstance(doc, str) else json.dumps(doc, indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        out.write_text(text + "\n")


def _cmd_detect(args: argparse.Namespace) -> int:
    d = load_csv(args.csv, dims=_split_dims(args.dims))
    cfg = _detect_config(args)
    models = detect_pairs(d, cfg)
    groups = merge_groups(models, refit=lambda x, dep: fit_pair(d, x, dep, cfg))
    _write_json(groups_to_json(groups), args.output)
    print(
        f"detected {len(groups)} group(s), "
        f"{sum(len(g.models) for g in groups)} dependent dim(s) over {d.n_dims} dims",
        file=sys.stderr,
    )
    return 0


def _cmd_build(args: argparse.Namespace) -> int:
    d = load_csv(args.csv, dims=_split_dims(args.dims))
    override = None
    if args.models is not None:
        override = groups_from_json(Path(args.models).read_text())
    cfg = coax_index.CoaxConfig(
        detect=_detect_config(args),
        cells_per_dim=args.cells,
        sort_dim=args.sort_dim,
    )
    ix = coax_index.build(d, cfg, models_override=override)
    save_index(ix, args.output)
    st = coax_index.stats(ix)
    print(
        f"built index over {d.n_rows} rows: primary_ratio={st.primary_ratio:.4f}, "
        f"indexed={st.indexed_dims}, dependent={st.dependent_dims} -> {args.output}",
        file=sys.stderr,
    )
    return 0


def _cmd_query(args: argparse.Namespace) -> int:
    ix = load_index(args.index)
    rect = _parse_rect(args.rect, ix.n_dims)
    ids, st = coax_index.query(ix, rect)
    ids = np.sort(ids)
    shown = ids if args.limit is None else ids[: args.limit]
    _write_json(
        {
            "count": int(len(ids)),
            "row_ids": [int(i) for i in shown],
            "truncated": args.limit is not None and len(ids) > args.limit,
            "stats": {
                "cells_visited": st.cells_visited,
                "rows_scanned": st.rows_scanned,
                "rows_returned": st.rows_returned,
                "primary_rows_scanned": st.primary.rows_scanned,
                "outlier_rows_scanned": st.outlier.rows_scanned,
                "outlier_cells_visited": st.outlier.cells_visited,
            },
        },
        args.output,
    )
    return 0


def _sweep_specs(
    kinds: Sequence[str],
    cells: Sequence[int],
    d: Dataset,
    detect_cfg: DetectConfig,
) -> tuple[list[IndexSpec], list[dict]]:
    """Expand kind x cells, applying the directory memory cap.

    Grid configurations whose directory would outweigh the data itself are
    skipped, mirroring how oversized grids are excluded from comparisons.
    For the correlation-aware index, detection runs once here and the learned
    groups are reused by every swept cell count.
    """
    data_bytes = d.n_rows * d.n_dims * 8
    specs: list[IndexSpec] = []
    skipped: list[dict] = []

    groups = None
    if COAX in kinds and d.n_dims >= 2:
        models = detect_pairs(d, detect_cfg)
        groups = tuple(merge_groups(models, refit=lambda x, dep: fit_pair(d, x, dep, detect_cfg)))

    for kind in kinds:
        if kind == FULL_SCAN:
            specs.append(IndexSpec(kind=FULL_SCAN))
            continue
        for c in cells:
            if kind == UNIFORM_GRID:
                grid_dim_count = d.n_dims
            elif kind == COLUMN_FILES:
                grid_dim_count = d.n_dims - 1
            else:  # coax primary: indexed dims minus the sort dim
                dep = sum(len(g.models) for g in groups) if groups else 0
                grid_dim_count = max(0, d.n_dims - dep - 1)
            est = directory_bytes_for([c] * grid_dim_count) if grid_dim_count else 16
            if est > data_bytes:
                skipped.append(
                    {
                        "name": f"{kind}[cells={c}]",
                        "reason": f"directory estimate {est} exceeds data bytes {data_bytes}",
                    }
                )
                continue
            if kind == COAX:
                specs.append(
                    IndexSpec(
                        kind=COAX,
                        cells_per_dim=c,
                        coax_config=coax_index.CoaxConfig(detect=detect_cfg, cells_per_dim=c),
                        groups_override=groups,
                    )
                )
            else:
                specs.append(IndexSpec(kind=kind, cells_per_dim=c))
    return specs, skipped


def _cmd_bench(args: argparse.Namespace) -> int:
    d = load_csv(args.csv, dims=_split_dims(args.dims))
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for k in kinds:
        if k not in ("point", "range"):
            raise UsageError(f"unknown workload kind {k!r} (use point,range)")
    index_kinds = [k.strip() for k in args.indexes.split(",") if k.strip()]
    for k in index_kinds:
        if k not in KINDS:
            raise UsageError(f"unknown index kind {k!r} (use {','.join(KINDS)})")
    if FULL_SCAN not in index_kinds:
        index_kinds.append(FULL_SCAN)
    cells = [int(c) for c in args.cells.split(",") if c.strip()]

    detect_cfg = _detect_config(args)
    specs, skipped = _sweep_specs(index_kinds, cells, d, detect_cfg)

    runs = []
    for kind in kinds:
        wl = gen_workload(d, k=args.workload_k, n_queries=args.queries, kind=kind, seed=args.seed)
        try:
            runs.append(run_bench(d, wl, specs))
        except BenchCorrectnessError as e:
            print(f"correctness failure in {e.name}:", file=sys.stderr)
            print(json.dumps(e.diffs, indent=2), file=sys.stderr)
            return 2

    report = {
        "environment": {
            "dataset": str(args.csv),
            "n_rows": d.n_rows,
            "n_dims": d.n_dims,
            "workload": {"k": args.workload_k, "n_queries": args.queries, "kinds": kinds},
            "seed": args.seed,
            "cells_sweep": cells,
        },
        "runs": runs,
        "skipped": skipped,
    }
    _write_json(report, args.output)
    if args.output is not None and not args.no_figures:
        from . import plots

        stem = args.output.with_suffix("")
        plots.write_bench_csv(report, stem.with_suffix(".csv"))
        plots.render_bench_figures(report, stem)
    return 0


def _cmd_theory(args: argparse.Namespace) -> int:
    ratios = [float(r) for r in args.eps_over_sigma.split(",") if r.strip()]
    if not ratios:
        raise UsageError("--eps-over-sigma needs at least one ratio")
    report = theory_report(
        eps_over_sigma=ratios,
        trials=args.trials,
        n=args.n,
        seed=args.seed,
        variance_trials=args.variance_trials,
    )
    _write_json(report, args.output)
    if args.output is not None and not args.no_figures:
        from . import plots

        stem = args.output.with_suffix("")
        plots.write_theory_csv(report, stem.with_suffix(".csv"))
        plots.render_theory_figures(report, stem)
    return 0


def _build_parser() -> _Parser:
    p = _Parser(prog="coax", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="learn correlation groups from a CSV")
    d.add_argument("csv", type=Path)
    d.add_argument("--dims", help="comma-separated column names or indices (default: all)")
    _add_detect_flags(d)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("-o", "--output", type=Path, default=None, help="models JSON path (default: stdout)")
    d.set_defaults(func=_cmd_detect)

    b = sub.add_parser("build", help="build an index snapshot from a CSV")
    b.add_argument("csv", type=Path)
    b.add_argument("--dims")
    b.add_argument("--models", type=Path, default=None, help="reuse a detect output instead of re-learning")
    b.add_argument("--cells", type=int, default=16, help="grid cells per dimension")
    b.add_argument("--sort-dim", type=int, default=None)
    _add_detect_flags(b)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output", type=Path, required=True, help="index snapshot path")
    b.set_defaults(func=_cmd_build)

    q = sub.add_parser("query", help="run one rectangle against a snapshot")
    q.add_argument("index", type=Path)
    q.add_argument("--rect", required=True, help='JSON: [[lo,hi],...] per dim or {"dim": [lo,hi]}; null = unbounded')
    q.add_argument("--limit", type=int, default=None, help="truncate row_ids in the output")
    q.add_argument("-o", "--output", type=Path, default=None)
    q.set_defaults(func=_cmd_query)

    be = sub.add_parser("bench", help="benchmark index kinds on generated workloads")
    be.add_argument("csv", type=Path)
    be.add_argument("--dims")
    be.add_argument("--workload-k", type=int, default=100, help="neighbour count per generated query")
    be.add_argument("--queries", type=int, default=200)
    be.add_argument("--kinds", default="range", help="comma list of point,range")
    be.add_argument("--indexes", default=",".join(KINDS), help=f"comma list of {','.join(KINDS)}")
    be.add_argument("--cells", default=",".join(str(c) for c in DEFAULT_CELL_SWEEP), help="cells-per-dim sweep")
    _add_detect_flags(be)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--no-figures", action="store_true")
    be.add_argument("-o", "--output", type=Path, default=None, help="report JSON path (default: stdout)")
    be.set_defaults(func=_cmd_bench)

    t = sub.add_parser("theory", help="validate capacity closed forms by simulation")
    t.add_argument("--eps-over-sigma", default="5,10,20")
    t.add_argument("--trials", type=int, default=10_000)
    t.add_argument("--variance-trials", type=int, default=None, help="trials for the variance section")
    t.add_argument("--n", type=int, default=1_000_000, help="stream length / walk cap")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--no-figures", action="store_true")
    t.add_argument("-o", "--output", type=Path, default=None)
    t.set_defaults(func=_cmd_theory)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (UsageError, DatasetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except BenchCorrectnessError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
