"""Correlation-aware multidimensional indexing.

Learns soft functional dependencies between attributes, indexes one attribute
per correlated group, keeps non-conforming records in a full-dimensional
outlier index, and answers range/point queries exactly by translating
dependent-attribute constraints onto the indexed attributes.
"""

from .dataset import ColumnStats, Dataset, DatasetError, column_stats, kl_uniform_divergence, load_csv, sample
from .grid import GridIndex, QueryStats, build_grid, directory_bytes, full_scan, point_query, range_query
from .index import CoaxConfig, CoaxIndex, CoaxQueryStats, IndexStats, build, query, stats
from .softfd import (
    BucketGrid,
    CorrelationGroup,
    DetectConfig,
    SoftFdModel,
    SplitResult,
    TrainingSet,
    bucketize,
    dense_centers,
    detect_pairs,
    fit_linear,
    merge_groups,
    select_margins,
    split_data,
)
from .theory import ExitStats, GapConfig, expected_keys, expected_segments, simulate_exit, simulate_segments
from .translate import (
    EMPTY_INTERVAL,
    Interval,
    QueryRect,
    dependent_range_to_indexed,
    effectiveness,
    predict,
    result_area,
    scanned_area,
    translated_scan_range,
)
from .workload import Workload, gen_workload

__version__ = "0.1.0"
