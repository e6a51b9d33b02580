"""Batch figure renderer for matching-experiment CSV sweeps.

Reads the experiment harness's result CSV plus its JSON run manifest and
renders a fixed set of figure layouts (match-rate curves, rank bars, access
curves, parameter-grid heatmaps) deterministically: same inputs, same bytes.
"""

from .data import (
    CSV_COLUMNS,
    EmptySelectionError,
    SchemaError,
    SeriesCountError,
    Table,
    default_manifest_path,
    group_mean,
    load_manifest,
    load_table,
)
from .render import (
    FIG_ACCESS,
    FIG_GAP_HEAT,
    FIG_MATCH_BY_BETA,
    FIG_RANK,
    FIG_WELFARE_HEAT,
    FIG_WISDOM,
    FIGURE_IDS,
    FORMATS,
    FigureSpec,
    RenderResult,
    expected_series,
    render,
    required_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "CSV_COLUMNS",
    "EmptySelectionError",
    "SchemaError",
    "SeriesCountError",
    "Table",
    "default_manifest_path",
    "group_mean",
    "load_manifest",
    "load_table",
    "FIG_ACCESS",
    "FIG_GAP_HEAT",
    "FIG_MATCH_BY_BETA",
    "FIG_RANK",
    "FIG_WELFARE_HEAT",
    "FIG_WISDOM",
    "FIGURE_IDS",
    "FORMATS",
    "FigureSpec",
    "RenderResult",
    "expected_series",
    "render",
    "required_metrics",
    "__version__",
]
