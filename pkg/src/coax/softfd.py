"""Soft functional dependency detection, linear model fitting, and primary/outlier splitting.

A soft FD between a predictor attribute and a dependent attribute is modelled
as a line with asymmetric error margins: records whose dependent value lies
within [slope*x + intercept - eps_lb, slope*x + intercept + eps_ub] belong to
the primary set, everything else is an outlier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dataset import Dataset, sample


class SoftFdError(Exception):
    pass


class NoDependencyError(SoftFdError):
    """No cell count exceeded the density threshold; nothing to train on."""


class DegenerateFitError(SoftFdError):
    """Training points do not determine a line (all x equal, or width zero)."""


@dataclass(frozen=True)
class BucketGrid:
    """2-D occupancy histogram over shifted (min = 0 per axis) value pairs."""

    counts: np.ndarray  # (chunks, chunks) int64
    w_x: float
    w_d: float

    @property
    def chunks(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class TrainingSet:
    """Cell centers of the dense buckets, repeated by their occupancy counts."""

    xs: np.ndarray
    ds: np.ndarray


@dataclass(frozen=True)
class SoftFdModel:
    """Learned linear dependency indexed_dim -> dependent_dim with error margins."""

    indexed_dim: int
    dependent_dim: int
    slope: float
    intercept: float
    eps_lb: float
    eps_ub: float
    fit_quality: float

    def __post_init__(self) -> None:
        if self.slope == 0.0:
            raise SoftFdError("zero-slope model is not invertible")
        if self.eps_lb < 0 or self.eps_ub < 0:
            raise SoftFdError("margins must be non-negative")


@dataclass(frozen=True)
class CorrelationGroup:
    """One predictor dimension plus the models for every dependent it explains."""

    predictor: int
    models: tuple[SoftFdModel, ...]

    def __post_init__(self) -> None:
        deps = [m.dependent_dim for m in self.models]
        if len(set(deps)) != len(deps):
            raise SoftFdError("duplicate dependent dims in group")
        if any(m.indexed_dim != self.predictor for m in self.models):
            raise SoftFdError("all group models must be indexed on the predictor")
        if self.predictor in deps:
            raise SoftFdError("predictor cannot depend on itself")

    @property
    def dependent_dims(self) -> tuple[int, ...]:
        return tuple(m.dependent_dim for m in self.models)


@dataclass(frozen=True)
class SplitResult:
    primary_rows: np.ndarray
    outlier_rows: np.ndarray


@dataclass(frozen=True)
class DetectConfig:
    """Knobs for the pair detection pipeline.

    threshold=None picks twice the count a uniform spread would put in one
    bucket cell, so only genuinely dense cells train the regression.
    """

    sample_count: int = 100_000
    chunks: int = 100
    threshold: Optional[int] = None
    target_ratio: float = 0.9
    min_quality: float = 0.75
    seed: int = 0

    def resolved_threshold(self, effective_sample: int) -> int:
        if self.threshold is not None:
            return self.threshold
        return max(1, int(2 * effective_sample / (self.chunks * self.chunks)))


def bucketize(xs: np.ndarray, ds: np.ndarray, chunks: int) -> BucketGrid:
    """Count value pairs into a chunks x chunks grid.

    Inputs must be shifted so each axis starts at 0; cell widths are
    max/chunks per axis and the maximum value is clamped into the last cell.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ds = np.asarray(ds, dtype=np.float64)
    if len(xs) != len(ds) or len(xs) == 0:
        raise SoftFdError("need equal-length, nonempty value arrays")
    if chunks < 2:
        raise SoftFdError("chunks must be >= 2")
    w_x = float(xs.max()) / chunks
    w_d = float(ds.max()) / chunks
    if w_x <= 0 or w_d <= 0:
        raise DegenerateFitError("axis has zero width (all values equal)")
    ix = np.minimum((xs / w_x).astype(np.int64), chunks - 1)
    id_ = np.minimum((ds / w_d).astype(np.int64), chunks - 1)
    counts = np.zeros((chunks, chunks), dtype=np.int64)
    np.add.at(counts, (ix, id_), 1)
    return BucketGrid(counts=counts, w_x=w_x, w_d=w_d)


def dense_centers(grid: BucketGrid, threshold: int) -> TrainingSet:
    """Centers of cells whose count exceeds threshold, weighted by repetition."""
    if threshold < 0:
        raise SoftFdError("threshold must be >= 0")
    ii, jj = np.nonzero(grid.counts > threshold)
    if len(ii) == 0:
        raise NoDependencyError(f"no bucket count exceeds threshold {threshold}")
    weights = grid.counts[ii, jj]
    xs = np.repeat((ii + 0.5) * grid.w_x, weights)
    ds = np.repeat((jj + 0.5) * grid.w_d, weights)
    return TrainingSet(xs=xs, ds=ds)


def fit_linear(train: TrainingSet) -> tuple[float, float]:
    """Ordinary least squares line through the (already weight-expanded) centers."""
    xs, ds = train.xs, train.ds
    if len(np.unique(xs)) < 2:
        raise DegenerateFitError("need at least two distinct x values")
    x_mean = xs.mean()
    d_mean = ds.mean()
    sxx = float(np.sum((xs - x_mean) ** 2))
    sxy = float(np.sum((xs - x_mean) * (ds - d_mean)))
    m = sxy / sxx
    b = float(d_mean - m * x_mean)
    return m, b


def select_margins(displacements: np.ndarray, target_ratio: float) -> tuple[float, float]:
    """Margins covering a target fraction of displacements, split evenly per tail.

    Returns (eps_lb, eps_ub) from the displacement quantiles at levels
    ((1-target)/2, 1-(1-target)/2), each floored at zero.
    """
    displacements = np.asarray(displacements, dtype=np.float64)
    if len(displacements) == 0:
        raise SoftFdError("no displacements")
    if not 0.0 < target_ratio <= 1.0:
        raise SoftFdError("target_ratio must be in (0, 1]")
    tail = (1.0 - target_ratio) / 2.0
    lo, hi = np.quantile(displacements, [tail, 1.0 - tail], method="linear")
    return max(0.0, -float(lo)), max(0.0, float(hi))


def displacements(model: SoftFdModel, xs: np.ndarray, ds: np.ndarray) -> np.ndarray:
    """Residuals d - (slope*x + intercept); the quantity the margins bound."""
    return np.asarray(ds, dtype=np.float64) - (
        model.slope * np.asarray(xs, dtype=np.float64) + model.intercept
    )


def _within_margins(model: SoftFdModel, xs: np.ndarray, ds: np.ndarray) -> np.ndarray:
    # Closed bounds so a perfect dependency (all residuals zero) keeps every row.
    disp = displacements(model, xs, ds)
    return (disp >= -model.eps_lb) & (disp <= model.eps_ub)


def fit_pair(
    d: Dataset,
    x_dim: int,
    dep_dim: int,
    cfg: DetectConfig,
    sampled: Optional[Dataset] = None,
) -> Optional[SoftFdModel]:
    """Run the full single-pair pipeline; None when no usable dependency exists.

    Sample -> shift to zero -> bucketize -> dense centers -> OLS -> margins.
    A candidate survives only if its quality (fraction of sampled points
    inside the margins) reaches cfg.min_quality and the margin band is
    informative: no wider than half the dependent attribute's central spread
    at the same target mass. A slope-zero-ish model's band equals that
    spread, so dependencies that are no more selective than scanning the
    dependent attribute outright are rejected even when far outliers
    stretch the attribute's raw range.
    """
    s = sampled if sampled is not None else sample(d, cfg.sample_count, cfg.seed)
    xs = s.columns[x_dim]
    ds_ = s.columns[dep_dim]
    x_min = float(xs.min())
    d_min = float(ds_.min())
    try:
        grid = bucketize(xs - x_min, ds_ - d_min, cfg.chunks)
        train = dense_centers(grid, cfg.resolved_threshold(s.n_rows))
        m, b_shifted = fit_linear(train)
    except SoftFdError:
        return None
    if m == 0.0:
        return None
    # Undo the per-axis shift so the model applies to raw attribute values.
    b = b_shifted + d_min - m * x_min

    disp = ds_ - (m * xs + b)
    eps_lb, eps_ub = select_margins(disp, cfg.target_ratio)
    quality = float(np.mean((disp >= -eps_lb) & (disp <= eps_ub)))

    tail = (1.0 - cfg.target_ratio) / 2.0
    dep_lo, dep_hi = np.quantile(ds_, [tail, 1.0 - tail])
    if quality < cfg.min_quality:
        return None
    if (eps_lb + eps_ub) > 0.5 * float(dep_hi - dep_lo):
        return None
    return SoftFdModel(
        indexed_dim=x_dim,
        dependent_dim=dep_dim,
        slope=m,
        intercept=b,
        eps_lb=eps_lb,
        eps_ub=eps_ub,
        fit_quality=quality,
    )


def detect_pairs(d: Dataset, cfg: DetectConfig = DetectConfig()) -> list[SoftFdModel]:
    """Evaluate every unordered dim pair in both orientations; keep the better one.

    Output is canonically sorted by (indexed_dim, dependent_dim) so results do
    not depend on evaluation order. An empty list means no correlations found.
    """
    if d.n_dims < 2:
        raise SoftFdError("pair detection needs at least two dimensions")
    s = sample(d, cfg.sample_count, cfg.seed)
    kept: list[SoftFdModel] = []
    for i in range(d.n_dims):
        for j in range(i + 1, d.n_dims):
            fwd = fit_pair(d, i, j, cfg, sampled=s)
            rev = fit_pair(d, j, i, cfg, sampled=s)
            best: Optional[SoftFdModel] = None
            if fwd is not None and rev is not None:
                # Ties break toward the lower indexed dim, i.e. the forward fit.
                best = rev if rev.fit_quality > fwd.fit_quality else fwd
            else:
                best = fwd if fwd is not None else rev
            if best is not None:
                kept.append(best)
    kept.sort(key=lambda m: (m.indexed_dim, m.dependent_dim))
    return kept


RefitFn = Callable[[int, int], Optional[SoftFdModel]]


def merge_groups(models: Sequence[SoftFdModel], refit: Optional[RefitFn] = None) -> list[CorrelationGroup]:
    """Union correlated dims into groups, each led by a single predictor.

    The predictor of a component is the dim with the highest fit_quality sum
    over models it already serves as indexed_dim for (ties to the lower dim).
    Dependents connected through some other dim need a direct model from the
    predictor: ``refit(predictor, dep)`` supplies it; dims whose refit fails
    (or when no refit is given) are dropped from the group and stay indexed.
    """
    if not models:
        return []

    parent: dict[int, int] = {}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for m in models:
        parent.setdefault(m.indexed_dim, m.indexed_dim)
        parent.setdefault(m.dependent_dim, m.dependent_dim)
        union(m.indexed_dim, m.dependent_dim)

    components: dict[int, set[int]] = {}
    for dim in parent:
        components.setdefault(find(dim), set()).add(dim)

    groups: list[CorrelationGroup] = []
    for dims in components.values():
        quality_sum = {dim: 0.0 for dim in dims}
        for m in models:
            if m.indexed_dim in dims:
                quality_sum[m.indexed_dim] += m.fit_quality
        predictor = min(dims, key=lambda dim: (-quality_sum[dim], dim))

        direct = {m.dependent_dim: m for m in models if m.indexed_dim == predictor}
        group_models: list[SoftFdModel] = []
        for dep in sorted(dims - {predictor}):
            if dep in direct:
                group_models.append(direct[dep])
                continue
            refitted = refit(predictor, dep) if refit is not None else None
            if refitted is not None:
                group_models.append(refitted)
        if group_models:
            groups.append(CorrelationGroup(predictor=predictor, models=tuple(group_models)))
    groups.sort(key=lambda g: g.predictor)
    return groups


def split_data(d: Dataset, groups: Sequence[CorrelationGroup]) -> SplitResult:
    """Partition row indices into the primary set and the outliers.

    A row is primary iff every model of every group holds for it (closed
    margin bounds). With no groups every row is primary.
    """
    keep = np.ones(d.n_rows, dtype=bool)
    for g in groups:
        xs = d.columns[g.predictor]
        for m in g.models:
            keep &= _within_margins(m, xs, d.columns[m.dependent_dim])
    idx = np.arange(d.n_rows)
    return SplitResult(primary_rows=idx[keep], outlier_rows=idx[~keep])


def groups_to_json(groups: Sequence[CorrelationGroup]) -> str:
    """Serialize groups to the JSON document consumed by the index builder."""
    doc = {
        "groups": [
            {
                "predictor": g.predictor,
                "models": [
                    {
                        "dependent": m.dependent_dim,
                        "m": m.slope,
                        "b": m.intercept,
                        "eps_lb": m.eps_lb,
                        "eps_ub": m.eps_ub,
                        "fit_quality": m.fit_quality,
                    }
                    for m in g.models
                ],
            }
            for g in groups
        ]
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def groups_from_json(text: str) -> list[CorrelationGroup]:
    doc = json.loads(text)
    groups = []
    for g in doc["groups"]:
        models = tuple(
            SoftFdModel(
                indexed_dim=int(g["predictor"]),
                dependent_dim=int(m["dependent"]),
                slope=float(m["m"]),
                intercept=float(m["b"]),
                eps_lb=float(m["eps_lb"]),
                eps_ub=float(m["eps_ub"]),
                fit_quality=float(m["fit_quality"]),
            )
            for m in g["models"]
        )
        groups.append(CorrelationGroup(predictor=int(g["predictor"]), models=models))
    return groups
