"""Render benchmark and theory reports to CSV summaries and matplotlib figures.

Figures land next to the JSON report; the CSV carries the same per-row fields
for spreadsheet use. Everything here is presentation only.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_BENCH_COLUMNS = [
    "workload_kind",
    "name",
    "index_kind",
    "cells_per_dim",
    "build_ms",
    "median_query_us",
    "p99_query_us",
    "rows_scanned_total",
    "directory_bytes",
    "correctness",
]


def write_bench_csv(report: dict, path: Path) -> Path:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(_BENCH_COLUMNS)
        for run in report["runs"]:
            for ix in run["indexes"]:
                w.writerow(
                    [
                        run["workload"]["kind"],
                        ix["name"],
                        ix["kind"],
                        ix["cells_per_dim"],
                        f"{ix['build_ms']:.3f}",
                        f"{ix['median_query_us']:.3f}",
                        f"{ix['p99_query_us']:.3f}",
                        ix["rows_scanned_total"],
                        ix["directory_bytes"],
                        ix["correctness"],
                    ]
                )
    return path


def render_bench_figures(report: dict, stem: Path) -> list[Path]:
    """Latency-vs-memory tradeoff and total scan volume, one panel per workload kind."""
    out: list[Path] = []
    runs = report["runs"]
    if not runs:
        return out

    fig, axes = plt.subplots(1, len(runs), figsize=(6 * len(runs), 4.5), squeeze=False)
    for ax, run in zip(axes[0], runs):
        by_kind: dict[str, list[dict]] = {}
        for ix in run["indexes"]:
            by_kind.setdefault(ix["kind"], []).append(ix)
        for kind, entries in sorted(by_kind.items()):
            xs = [max(1, e["directory_bytes"]) for e in entries]
            ys = [e["median_query_us"] for e in entries]
            ax.plot(xs, ys, "o-", label=kind)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("directory bytes")
        ax.set_ylabel("median query latency (us)")
        ax.set_title(f"{run['workload']['kind']} queries (k={run['workload']['k']})")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    p = stem.with_name(stem.name + "_latency_memory.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    out.append(p)

    fig, axes = plt.subplots(1, len(runs), figsize=(6 * len(runs), 4.5), squeeze=False)
    for ax, run in zip(axes[0], runs):
        names = [ix["name"] for ix in run["indexes"]]
        scans = [ix["rows_scanned_total"] for ix in run["indexes"]]
        ax.bar(range(len(names)), scans)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
        ax.set_yscale("log")
        ax.set_ylabel("rows scanned (total)")
        ax.set_title(f"{run['workload']['kind']} queries")
        ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    p = stem.with_name(stem.name + "_rows_scanned.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    out.append(p)
    return out


def write_theory_csv(report: dict, path: Path) -> Path:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["section", "eps_over_sigma", "dist", "drift_over_sigma", "closed_form", "simulated", "relative_error", "trials"])
        for section in ("expected_keys", "drift", "variance", "segments"):
            for e in report[section]:
                w.writerow(
                    [
                        section,
                        e.get("eps_over_sigma", ""),
                        e.get("dist", ""),
                        e.get("drift_over_sigma", ""),
                        f"{e['closed_form']:.6g}",
                        f"{e['simulated']:.6g}",
                        f"{e['relative_error']:+.4%}",
                        e["trials"],
                    ]
                )
    return path


def render_theory_figures(report: dict, stem: Path) -> list[Path]:
    """Simulated vs closed-form curves for exit means and the drift sweep."""
    out: list[Path] = []

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    by_dist: dict[str, list[dict]] = {}
    for e in report["expected_keys"]:
        by_dist.setdefault(e["dist"], []).append(e)
    ratios = sorted({e["eps_over_sigma"] for e in report["expected_keys"]})
    ax1.plot(ratios, [r * r for r in ratios], "k--", label="closed form")
    for dist, entries in sorted(by_dist.items()):
        entries.sort(key=lambda e: e["eps_over_sigma"])
        ax1.plot(
            [e["eps_over_sigma"] for e in entries],
            [e["simulated"] for e in entries],
            "o-",
            label=f"simulated ({dist})",
        )
    ax1.set_xscale("log")
    ax1.set_yscale("log")
    ax1.set_xlabel("margin / gap std")
    ax1.set_ylabel("mean keys per segment")
    ax1.set_title("segment capacity")
    ax1.legend()
    ax1.grid(True, which="both", alpha=0.3)

    drifts = sorted(report["drift"], key=lambda e: e["drift_over_sigma"])
    ax2.plot([e["drift_over_sigma"] for e in drifts], [e["closed_form"] for e in drifts], "k--", label="closed form")
    ax2.plot([e["drift_over_sigma"] for e in drifts], [e["simulated"] for e in drifts], "o", label="simulated")
    ax2.set_xlabel("slope mismatch / gap std")
    ax2.set_ylabel("mean keys per segment")
    ax2.set_title("capacity under slope mismatch")
    ax2.legend()
    ax2.grid(True, alpha=0.3)

    fig.tight_layout()
    p = stem.with_name(stem.name + "_convergence.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    out.append(p)
    return out
