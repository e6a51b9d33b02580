"""Six fixed figure layouts over harness CSV sweeps.

Rendering is a pure function of the input files: style, axis ranges, and
color scales are constants per figure id, matplotlib's SVG id salt is
pinned, and no timestamps are written, so an SVG re-render is byte
identical and diffs only when the data does.

Builders derive their series from the data (one series per sweep cell found
in the CSV: a line, a bar, or a heatmap cell); render() then rejects the
figure if that count differs from the cardinality the run manifest implies,
so truncated or over-full CSVs cannot silently render.
"""

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import (
    EmptySelectionError,
    SchemaError,
    SeriesCountError,
    Table,
    default_manifest_path,
    group_mean,
    load_manifest,
    load_table,
)

FIG_WISDOM = "fig3"
FIG_RANK = "fig5"
FIG_ACCESS = "fig6"
FIG_WELFARE_HEAT = "fig7"
FIG_MATCH_BY_BETA = "fig8"
FIG_GAP_HEAT = "fig9"
FIGURE_IDS = (
    FIG_WISDOM,
    FIG_RANK,
    FIG_ACCESS,
    FIG_WELFARE_HEAT,
    FIG_MATCH_BY_BETA,
    FIG_GAP_HEAT,
)
FORMATS = ("svg", "png")

BY_K_PREFIX = "match_rate_by_k_"

STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "figure.constrained_layout.use": True,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.6,
    "svg.hashsalt": "matchlab-figures",
    "svg.fonttype": "none",
}

MODE_COLORS = {"mono": "#1f77b4", "poly": "#d62728"}
STRATEGY_DASHES = {"topk": "-", "randomk": "--"}
HEATMAP_CMAP = "viridis"

# Fixed per-figure axis and color ranges; never auto-scaled, so a visual
# regression moves pixels instead of silently rescaling under the reader.
RATE_YLIM = (0.0, 1.0)
RANK_YLIM = (0.0, 14.0)
WELFARE_CLIM = (0.5, 0.75)
RANK_CLIM = (1.0, 6.0)
GAP_CLIM = (0.0, 0.6)


@dataclass(frozen=True)
class FigureSpec:
    """One render request: which layout, which files, which format."""

    figure_id: str
    csv_path: str
    out_path: str
    fmt: str = ""
    manifest_path: str = ""

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(
                f"unknown figure id {self.figure_id!r}; expected one of {', '.join(FIGURE_IDS)}")
        if self.format not in FORMATS:
            raise ValueError(
                f"unsupported format {self.format!r}; expected one of {', '.join(FORMATS)}")

    @property
    def format(self) -> str:
        if self.fmt:
            return self.fmt.lower()
        return os.path.splitext(self.out_path)[1].lstrip(".").lower()

    @property
    def manifest_file(self) -> str:
        return self.manifest_path or default_manifest_path(self.csv_path)


@dataclass(frozen=True)
class RenderResult:
    path: str
    figure_id: str
    series_count: int


def _binned_mask(table: Table, metric: str) -> np.ndarray:
    return (table.metric == metric) & ~np.isnan(table.value_bin)


def _scalar_mask(table: Table, metric: str) -> np.ndarray:
    return (table.metric == metric) & np.isnan(table.value_bin) & np.isnan(table.k_bin)


def _require(mask: np.ndarray, what: str) -> np.ndarray:
    if not mask.any():
        raise EmptySelectionError(f"no rows selected: {what}")
    return mask


def _distinct(column: np.ndarray, mask: np.ndarray) -> list:
    return sorted(set(column[mask]))


def _strategies_in(table: Table) -> list[str]:
    """Strategy names carried by by-k metric suffixes present in the CSV."""
    return sorted({m[len(BY_K_PREFIX):] for m in set(table.metric)
                   if m.startswith(BY_K_PREFIX)})


def _bin_centers(bins: list[float]) -> np.ndarray:
    width = max(bins)
    return (np.asarray(bins) - 0.5) / width


def _line_over_bins(means: dict, prefix: tuple):
    bins = sorted(key[-1] for key in means if key[:-1] == prefix)
    return _bin_centers(bins), np.array([means[prefix + (b,)] for b in bins])


def _build_wisdom(table: Table, manifest: dict):
    """Match rate vs true-value percentile: panel per mode, line per (mode, m)."""
    mask = _require(_binned_mask(table, "match_rate"), "binned match_rate")
    modes = _distinct(table.mode, mask)
    pairs = sorted({(mo, mm) for mo, mm in zip(table.mode[mask], table.m[mask])})
    means = group_mean(table, mask, table.mode, table.m, table.value_bin)

    ms = sorted({mm for _, mm in pairs})
    colors = dict(zip(ms, plt.get_cmap(HEATMAP_CMAP)(np.linspace(0.1, 0.85, len(ms)))))
    fig, axes = plt.subplots(1, len(modes), figsize=(6.4, 3.0), sharey=True, squeeze=False)
    panel = {mode: ax for mode, ax in zip(modes, axes[0])}
    series = 0
    for mode, m in pairs:
        x, y = _line_over_bins(means, (mode, m))
        panel[mode].plot(x, y, color=colors[m], label=f"m = {m}")
        series += 1
    for mode, ax in panel.items():
        ax.set_title(mode)
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(*RATE_YLIM)
        ax.set_xlabel("true value percentile")
    axes[0][0].set_ylabel("match rate")
    axes[0][-1].legend(loc="upper left", framealpha=1.0)
    return fig, series


def _build_rank(table: Table, manifest: dict):
    """Average matched rank by market width m: one bar per (mode, m)."""
    mask = _require(_scalar_mask(table, "avg_rank"), "scalar avg_rank")
    modes = _distinct(table.mode, mask)
    ms = _distinct(table.m, mask)
    means = group_mean(table, mask, table.mode, table.m)

    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    x = np.arange(len(ms), dtype=float)
    width = 0.8 / max(len(modes), 1)
    series = 0
    for i, mode in enumerate(modes):
        offsets = x + (i - (len(modes) - 1) / 2) * width
        drawn = [(off, means[(mode, m)]) for off, m in zip(offsets, ms)
                 if (mode, m) in means]
        ax.bar([off for off, _ in drawn], [h for _, h in drawn], width=width * 0.92,
               color=MODE_COLORS.get(mode, "#777777"), label=mode)
        series += len(drawn)
    ax.set_xticks(x)
    ax.set_xticklabels([str(m) for m in ms])
    ax.set_xlabel("number of firms m")
    ax.set_ylabel("average matched rank")
    ax.set_ylim(*RANK_YLIM)
    ax.legend(framealpha=1.0)
    return fig, series


def _build_access(table: Table, manifest: dict):
    """Match rate vs application count k: line per (strategy, mode)."""
    strategies = _strategies_in(table)
    if not strategies:
        raise EmptySelectionError(f"no rows selected: metrics {BY_K_PREFIX}*")
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    series = 0
    k_all = []
    for strategy in strategies:
        metric = BY_K_PREFIX + strategy
        mask = _require((table.metric == metric) & ~np.isnan(table.k_bin), metric)
        means = group_mean(table, mask, table.mode, table.k_bin)
        for mode in _distinct(table.mode, mask):
            ks = sorted(key[1] for key in means if key[0] == mode)
            k_all.extend(ks)
            label = mode if len(strategies) == 1 else f"{mode}, {strategy}"
            ax.plot(ks, [means[(mode, k)] for k in ks], STRATEGY_DASHES.get(strategy, "-"),
                    color=MODE_COLORS.get(mode, "#777777"), label=label)
            series += 1
    ax.set_xlabel("number of applications k")
    ax.set_ylabel("match rate")
    ax.set_xlim(min(k_all), max(k_all))
    ax.set_ylim(*RATE_YLIM)
    ax.legend(framealpha=1.0)
    return fig, series


def _grid_matrix(means: dict, prefix: tuple, betas, gammas, what: str) -> np.ndarray:
    """Dense (gamma, beta) matrix; any hole in the grid is a data error."""
    matrix = np.empty((len(gammas), len(betas)))
    for gi, g in enumerate(gammas):
        for bi, b in enumerate(betas):
            key = prefix + (b, g)
            if key not in means:
                raise EmptySelectionError(
                    f"no rows selected: {what} at beta={b:g}, gamma={g:g}")
            matrix[gi, bi] = means[key]
    return matrix


def _heat_panels(fig, axes, panels, betas, gammas, clims):
    """Fill a row-major grid of (title, matrix, clim-key) heatmap panels."""
    series = 0
    for ax, (title, matrix, clim_key) in zip(axes.ravel(), panels):
        vmin, vmax = clims[clim_key]
        image = ax.imshow(matrix, origin="lower", aspect="auto",
                          cmap=HEATMAP_CMAP, vmin=vmin, vmax=vmax)
        ax.set_title(title)
        ax.set_xticks(range(len(betas)))
        ax.set_xticklabels([f"{b:g}" for b in betas])
        ax.set_yticks(range(len(gammas)))
        ax.set_yticklabels([f"{g:g}" for g in gammas])
        ax.set_xlabel("beta (shared quality weight)")
        ax.set_ylabel("gamma (location weight)")
        ax.grid(False)
        fig.colorbar(image, ax=ax, shrink=0.85)
        series += matrix.size
    return series


def _build_welfare_heat(table: Table, manifest: dict):
    """Matched-value percentile and average rank over the (beta, gamma) grid."""
    plan = (
        ("avg_matched_value_percentile", "matched value percentile", "welfare"),
        ("avg_rank", "average matched rank", "rank"),
    )
    panels = []
    shape = None
    for metric, label, clim_key in plan:
        mask = _require(_scalar_mask(table, metric) & ~np.isnan(table.beta),
                        f"scalar {metric} with beta/gamma")
        betas = _distinct(table.beta, mask)
        gammas = _distinct(table.gamma, mask)
        means = group_mean(table, mask, table.mode, table.beta, table.gamma)
        for mode in _distinct(table.mode, mask):
            matrix = _grid_matrix(means, (mode,), betas, gammas, f"{metric} ({mode})")
            panels.append((f"{label}, {mode}", matrix, clim_key))
        shape = (betas, gammas)
    rows = 2
    cols = max(len(panels) // rows, 1)
    fig, axes = plt.subplots(rows, cols, figsize=(3.1 * cols, 5.6), squeeze=False)
    series = _heat_panels(fig, axes, panels, *shape,
                          clims={"welfare": WELFARE_CLIM, "rank": RANK_CLIM})
    return fig, series


def _build_match_by_beta(table: Table, manifest: dict):
    """Top-choice and overall match rate vs percentile at gamma = 0."""
    plan = (("top_choice_rate", "top-choice rate"), ("match_rate", "match rate"))
    fig, axes = plt.subplots(1, 2, figsize=(6.8, 3.0), sharey=True)
    series = 0
    for ax, (metric, label) in zip(axes, plan):
        mask = _require(_binned_mask(table, metric) & (table.gamma == 0.0),
                        f"binned {metric} at gamma=0")
        betas = _distinct(table.beta, mask)
        colors = dict(zip(betas, plt.get_cmap(HEATMAP_CMAP)(np.linspace(0.1, 0.85, len(betas)))))
        means = group_mean(table, mask, table.mode, table.beta, table.value_bin)
        for mode, beta in sorted({(mo, b) for mo, b in zip(table.mode[mask], table.beta[mask])}):
            x, y = _line_over_bins(means, (mode, beta))
            style = STRATEGY_DASHES["topk"] if mode == "mono" else STRATEGY_DASHES["randomk"]
            ax.plot(x, y, style, color=colors[beta], label=f"{mode}, beta={beta:g}")
            series += 1
        ax.set_title(label)
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(*RATE_YLIM)
        ax.set_xlabel("true value percentile")
    axes[0].set_ylabel("rate")
    axes[1].legend(loc="upper left", fontsize=7, framealpha=1.0)
    return fig, series


def _build_gap_heat(table: Table, manifest: dict):
    """Match-rate gap, many-applications half minus few, over (beta, gamma)."""
    strategies = _strategies_in(table)
    if not strategies:
        raise EmptySelectionError(f"no rows selected: metrics {BY_K_PREFIX}*")
    panels = []
    shape = None
    for strategy in strategies:
        metric = BY_K_PREFIX + strategy
        mask = _require(
            (table.metric == metric) & ~np.isnan(table.k_bin) & ~np.isnan(table.beta),
            f"{metric} with beta/gamma")
        betas = _distinct(table.beta, mask)
        gammas = _distinct(table.gamma, mask)
        ks = _distinct(table.k_bin, mask)
        low, high = ks[: len(ks) // 2], ks[len(ks) // 2:]
        means = group_mean(table, mask, table.mode, table.k_bin, table.beta, table.gamma)
        for mode in _distinct(table.mode, mask):
            def half(kset):
                grids = [_grid_matrix(means, (mode, k), betas, gammas,
                                      f"{metric} ({mode}, k={k:g})") for k in kset]
                return np.mean(grids, axis=0)

            panels.append((f"{strategy}, {mode}", half(high) - half(low), "gap"))
        shape = (betas, gammas)
    rows = len(strategies)
    cols = max(len(panels) // rows, 1)
    fig, axes = plt.subplots(rows, cols, figsize=(3.1 * cols, 2.9 * rows), squeeze=False)
    series = _heat_panels(fig, axes, panels, *shape, clims={"gap": GAP_CLIM})
    return fig, series


_BUILDERS = {
    FIG_WISDOM: _build_wisdom,
    FIG_RANK: _build_rank,
    FIG_ACCESS: _build_access,
    FIG_WELFARE_HEAT: _build_welfare_heat,
    FIG_MATCH_BY_BETA: _build_match_by_beta,
    FIG_GAP_HEAT: _build_gap_heat,
}


def required_metrics(figure_id: str, manifest: dict) -> set[str]:
    """Metric names a figure needs; by-k names follow the manifest's strategies."""
    by_k = {BY_K_PREFIX + s for s in manifest["sweep"]["strategies"]}
    return {
        FIG_WISDOM: {"match_rate"},
        FIG_RANK: {"avg_rank"},
        FIG_ACCESS: by_k,
        FIG_WELFARE_HEAT: {"avg_matched_value_percentile", "avg_rank"},
        FIG_MATCH_BY_BETA: {"match_rate", "top_choice_rate"},
        FIG_GAP_HEAT: by_k,
    }[figure_id]


def expected_series(figure_id: str, manifest: dict) -> int:
    """Sweep cardinality the manifest implies for a figure's series count."""
    sweep = manifest["sweep"]
    modes, ms = len(sweep["modes"]), len(sweep["m"])
    betas, gammas = len(sweep["beta"]), len(sweep["gamma"])
    strategies = len(sweep["strategies"])
    return {
        FIG_WISDOM: modes * ms,
        FIG_RANK: modes * ms,
        FIG_ACCESS: modes * strategies,
        FIG_WELFARE_HEAT: 2 * modes * betas * gammas,
        FIG_MATCH_BY_BETA: 2 * modes * betas,
        FIG_GAP_HEAT: strategies * modes * betas * gammas,
    }[figure_id]


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; raises before writing anything on bad input."""
    table = load_table(spec.csv_path)
    manifest = load_manifest(spec.manifest_file)
    missing = sorted(required_metrics(spec.figure_id, manifest) - set(table.metric))
    if missing:
        raise SchemaError(
            f"{spec.csv_path}: {spec.figure_id} needs metrics {missing} not in the CSV")
    with plt.rc_context(STYLE):
        fig, series = _BUILDERS[spec.figure_id](table, manifest)
        try:
            want = expected_series(spec.figure_id, manifest)
            if series != want:
                raise SeriesCountError(
                    f"{spec.figure_id}: drew {series} series but the manifest sweep "
                    f"implies {want}")
            fig.savefig(spec.out_path, format=spec.format,
                        metadata={"Date": None} if spec.format == "svg" else None)
        finally:
            plt.close(fig)
    return RenderResult(path=spec.out_path, figure_id=spec.figure_id, series_count=series)
