"""Synthetic dataset builders shared by the test modules.

Planted datasets have independent uniform base columns; each planted
dependency overwrites a dependent column as slope*x + intercept plus uniform
noise, then displaces one shared set of outlier rows far outside the noise
band (half upward, half downward per dependency) so the planted outlier
fraction is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coax.dataset import Dataset


@dataclass(frozen=True)
class PlantedFd:
    x_dim: int
    d_dim: int
    slope: float
    intercept: float
    noise: float  # half-width of the inlier displacement band


@dataclass(frozen=True)
class PlantedSpec:
    name: str
    n_dims: int
    fds: tuple[PlantedFd, ...]
    outlier_frac: float
    seed: int


def planted_dataset(
    n_rows: int, n_dims: int, fds: tuple[PlantedFd, ...], outlier_frac: float, seed: int
) -> tuple[Dataset, np.ndarray]:
    """Returns (dataset, planted outlier row indices, sorted)."""
    rng = np.random.default_rng(seed)
    cols = [rng.uniform(0.0, 100.0 * (j + 1), n_rows) for j in range(n_dims)]

    n_out = int(round(outlier_frac * n_rows))
    out_rows = rng.choice(n_rows, size=n_out, replace=False) if n_out else np.empty(0, dtype=np.int64)
    out_rows.sort()

    for fd in fds:
        x = cols[fd.x_dim]
        d = fd.slope * x + fd.intercept + rng.uniform(-fd.noise, fd.noise, n_rows)
        if n_out:
            # Alternate displacement sign so each margin quantile sits exactly
            # at the gap between inliers and outliers.
            signs = np.where(np.arange(n_out) % 2 == 0, 1.0, -1.0)
            d[out_rows] += signs * rng.uniform(8.0, 16.0, n_out) * fd.noise
        cols[fd.d_dim] = d

    return Dataset(columns=tuple(c for c in cols), names=tuple(f"c{j}" for j in range(n_dims))), out_rows


# The five dataset shapes used by the acceptance suite (row count varies by test).
ACCEPTANCE_SPECS: tuple[PlantedSpec, ...] = (
    PlantedSpec("independent_4d", 4, (), 0.0, 101),
    PlantedSpec(
        "one_fd_4d",
        4,
        (PlantedFd(x_dim=0, d_dim=1, slope=2.0, intercept=5.0, noise=4.0),),
        0.10,
        102,
    ),
    PlantedSpec(
        "two_fd_6d",
        6,
        (
            PlantedFd(x_dim=0, d_dim=1, slope=1.5, intercept=-10.0, noise=3.0),
            PlantedFd(x_dim=2, d_dim=3, slope=-0.8, intercept=250.0, noise=4.0),
        ),
        0.05,
        103,
    ),
    PlantedSpec(
        "star_3fd_8d",
        8,
        (
            PlantedFd(x_dim=0, d_dim=1, slope=2.0, intercept=0.0, noise=4.0),
            PlantedFd(x_dim=0, d_dim=2, slope=-1.0, intercept=120.0, noise=3.0),
            PlantedFd(x_dim=4, d_dim=5, slope=0.5, intercept=30.0, noise=2.0),
        ),
        0.15,
        104,
    ),
    PlantedSpec(
        "mixed_3fd_8d",
        8,
        (
            PlantedFd(x_dim=0, d_dim=1, slope=3.0, intercept=7.0, noise=5.0),
            PlantedFd(x_dim=2, d_dim=3, slope=1.2, intercept=-40.0, noise=4.0),
            PlantedFd(x_dim=4, d_dim=5, slope=-2.0, intercept=600.0, noise=6.0),
        ),
        0.25,
        105,
    ),
)


def dependent_dims(spec: PlantedSpec) -> set[int]:
    return {fd.d_dim for fd in spec.fds}
