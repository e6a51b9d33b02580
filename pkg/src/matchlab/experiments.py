"""Experiment harness: sweeps, replication fan-out, CSV/manifest persistence.

A run is a grid of sweep cells (mode x m x beta x gamma x strategy) times
replications. Cell r of replication j draws from the stream keyed by
(master seed, cell index, j), so results are independent of scheduling and
thread count; rows are emitted in a canonical sort order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .access import AccessDistribution, RANDOM_K, TOP_K, Strategy, parse_kappa
from .continuum import MODES, MONO, POLY, MarketSpec
from .distributions import (
    Distribution,
    format_distribution,
    gaussian,
    parse_distribution,
    uniform,
)
from .market_sim import compute_metrics, deferred_acceptance, generate_market
from .preferences import PreferenceModel, RUM_KIND, UNIFORM_KIND
from .seeds import stream

CSV_HEADER = "experiment,replication,mode,m,beta,gamma,k_bin,value_bin,metric,value,seed"

# Full-scale replication counts shrink to desk scale unless full is set.
DESK_REPLICATIONS = {1000: 200, 10000: 2000}

UNIFORM_PREFS = "uniform"
RUM_PREFS = "rum"


class ConfigError(Exception):
    """Malformed experiment config; carries a source location."""

    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line
        self.message = message


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int
    m_values: tuple[int, ...]
    capacity: int
    value_dist: Distribution
    noise_dist: Distribution
    modes: tuple[str, ...]
    preferences: str = UNIFORM_PREFS
    betas: tuple[float, ...] = (0.0,)
    gammas: tuple[float, ...] = (0.0,)
    kappa: AccessDistribution | None = None
    strategies: tuple[str, ...] = (TOP_K,)
    replications: int = 100
    seed: int = 42
    out_dir: str | None = None
    threads: int = 1
    full: bool = False

    def __post_init__(self) -> None:
        if not self.experiment or any(c in self.experiment for c in ",\n\r"):
            raise ValueError(f"bad experiment id {self.experiment!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.m_values or any(m < 1 for m in self.m_values):
            raise ValueError("m sweep must be nonempty positive integers")
        if not 0 < self.capacity < self.n:
            raise ValueError(f"capacity must lie in 1..n-1, got {self.capacity}")
        if not self.modes or any(mode not in MODES for mode in self.modes):
            raise ValueError(f"modes must be a nonempty subset of {MODES}")
        if self.preferences not in (UNIFORM_PREFS, RUM_PREFS):
            raise ValueError(f"preferences must be uniform or rum, got {self.preferences!r}")
        if not self.betas or not self.gammas:
            raise ValueError("beta and gamma grids must be nonempty")
        if self.preferences == UNIFORM_PREFS and (self.betas, self.gammas) != ((0.0,), (0.0,)):
            # Uniform preferences ignore the weights; a sweep would only
            # duplicate every cell.
            raise ValueError("beta/gamma sweeps require preferences = rum")
        if any(s not in (TOP_K, RANDOM_K) for s in self.strategies) or not self.strategies:
            raise ValueError("strategies must be a nonempty subset of (topk, randomk)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.threads < 0:
            raise ValueError("threads must be >= 0 (0 = all cores)")


@dataclass(frozen=True)
class ResultRow:
    """One metric observation; k_bin/value_bin/beta/gamma empty when not applicable."""

    experiment: str
    replication: int
    mode: str
    m: int
    beta: float | None
    gamma: float | None
    k_bin: int | None
    value_bin: int | None
    metric: str
    value: float
    seed: int


@dataclass(frozen=True)
class _Cell:
    index: int
    mode: str
    m: int
    beta: float
    gamma: float
    strategy: str | None  # None = every applicant applies everywhere


def effective_replications(config: ExperimentConfig) -> int:
    if config.full:
        return config.replications
    return DESK_REPLICATIONS.get(config.replications, config.replications)


def _sweep_cells(config: ExperimentConfig) -> list[_Cell]:
    strategies = tuple(config.strategies) if config.kappa is not None else (None,)
    cells = []
    for mode in config.modes:
        for m in config.m_values:
            for beta in config.betas:
                for gamma in config.gammas:
                    for strat in strategies:
                        cells.append(_Cell(len(cells), mode, m, beta, gamma, strat))
    return cells


def _correlated_cells(config: ExperimentConfig) -> list[_Cell]:
    # Full-access welfare/rank cells first, then access-law cells per strategy.
    cells = []
    for mode in config.modes:
        for m in config.m_values:
            for beta in config.betas:
                for gamma in config.gammas:
                    cells.append(_Cell(len(cells), mode, m, beta, gamma, None))
    for strat in config.strategies:
        for mode in config.modes:
            for m in config.m_values:
                for beta in config.betas:
                    for gamma in config.gammas:
                        cells.append(_Cell(len(cells), mode, m, beta, gamma, strat))
    return cells


def simulate_cell_replication(config: ExperimentConfig, cell: _Cell, rep: int) -> list[ResultRow]:
    """One market draw; rows for every metric the cell produces."""
    rng = stream(config.seed, cell.index, rep)
    spec = MarketSpec(
        m=cell.m,
        S=config.capacity / config.n,
        value_dist=config.value_dist,
        noise_dist=config.noise_dist,
        mode=cell.mode,
        kappa=config.kappa if cell.strategy is not None else None,
    )
    if config.preferences == UNIFORM_PREFS:
        pref_model = PreferenceModel(UNIFORM_KIND)
        beta_field = gamma_field = None
    else:
        pref_model = PreferenceModel(RUM_KIND, beta=cell.beta, gamma=cell.gamma)
        beta_field, gamma_field = cell.beta, cell.gamma
    strategy = Strategy(cell.strategy) if cell.strategy is not None else None
    market = generate_market(spec, config.n, pref_model, rng, strategy=strategy)
    metrics = compute_metrics(market, deferred_acceptance(market))

    suffix = f"_{cell.strategy}" if cell.strategy is not None else ""
    base = dict(
        experiment=config.experiment,
        replication=rep,
        mode=cell.mode,
        m=cell.m,
        beta=beta_field,
        gamma=gamma_field,
        seed=config.seed,
    )
    rows = []

    def emit(metric: str, value: float, k_bin: int | None = None, value_bin: int | None = None):
        if not math.isnan(value):
            rows.append(ResultRow(metric=metric + suffix, value=value,
                                  k_bin=k_bin, value_bin=value_bin, **base))

    for b, rate in enumerate(metrics.match_rate_by_value_bin, start=1):
        emit("match_rate", rate, value_bin=b)
    for b, rate in enumerate(metrics.top_choice_rate_by_value_bin, start=1):
        emit("top_choice_rate", rate, value_bin=b)
    emit("avg_matched_value_percentile", metrics.avg_matched_value_percentile)
    emit("avg_rank", metrics.avg_rank_conditional_on_match)
    emit("top_choice_rate", metrics.top_choice_rate)
    emit("match_rate", metrics.match_rate)  # scalar: empty value_bin column
    if metrics.match_rate_by_k is not None:
        for k, rate in metrics.match_rate_by_k:
            emit("match_rate_by_k", rate, k_bin=k)
    return rows


def _run_cell(args: tuple[ExperimentConfig, _Cell, int]) -> list[ResultRow]:
    config, cell, reps = args
    rows = []
    for rep in range(reps):
        try:
            rows.extend(simulate_cell_replication(config, cell, rep))
        except Exception as exc:  # surface the failing coordinates, abort the run
            raise RuntimeError(
                f"cell (mode={cell.mode}, m={cell.m}, beta={cell.beta}, "
                f"gamma={cell.gamma}, strategy={cell.strategy}), replication {rep}: {exc}"
            ) from exc
    return rows


def row_sort_key(row: ResultRow):
    return (
        row.experiment,
        row.mode,
        row.m,
        -1.0 if row.beta is None else row.beta,
        -1.0 if row.gamma is None else row.gamma,
        row.metric,
        -1 if row.k_bin is None else row.k_bin,
        -1 if row.value_bin is None else row.value_bin,
        row.replication,
    )


def _execute(config: ExperimentConfig, cells: list[_Cell]) -> list[ResultRow]:
    reps = effective_replications(config)
    tasks = [(config, cell, reps) for cell in cells]
    workers = config.threads if config.threads != 0 else (os.cpu_count() or 1)
    rows: list[ResultRow] = []
    if workers <= 1:
        for task in tasks:
            rows.extend(_run_cell(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_run_cell, tasks):
                rows.extend(chunk)
    rows.sort(key=row_sort_key)
    return rows


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run the sweep grid; deterministic given the config and master seed."""
    return _execute(config, _sweep_cells(config))


def run_correlated_suite(config: ExperimentConfig) -> list[ResultRow]:
    """Correlated-preference suite: welfare/rank surfaces plus access-gap runs.

    Requires random-utility preferences and an access law; emits full-access
    cells (welfare, rank, match curves over the beta/gamma grid) and then the
    same grid under the access law for every strategy, with metric names
    suffixed by strategy.
    """
    if config.preferences != RUM_PREFS:
        raise ValueError("correlated suite requires preferences = rum")
    if config.kappa is None:
        raise ValueError("correlated suite requires an access law (kappa)")
    return _execute(config, _correlated_cells(config))


def summarize(rows: list[ResultRow], group_keys: tuple[str, ...]) -> list[dict]:
    """Group-by mean and standard error (sample SD / sqrt(count))."""
    if not rows:
        raise ValueError("cannot summarize an empty result table")
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = tuple(getattr(row, k) for k in group_keys)
        groups.setdefault(key, []).append(row.value)
    out = []
    for key in sorted(groups, key=lambda k: tuple(_none_low(x) for x in k)):
        vals = groups[key]
        count = len(vals)
        mean = sum(vals) / count
        if count > 1:
            var = sum((v - mean) ** 2 for v in vals) / (count - 1)
            se = math.sqrt(var / count)
        else:
            se = 0.0
        entry = dict(zip(group_keys, key))
        entry.update(mean=mean, se=se, count=count)
        out.append(entry)
    return out


def _none_low(x):
    return (0, "") if x is None else (1, x)


# ---------------------------------------------------------------------------
# Persistence


def _format_field(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(rows: list[ResultRow], path: str) -> None:
    """Canonical CSV: fixed header, repr floats, LF endings, UTF-8."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for r in rows:
            writer.writerow(
                [
                    r.experiment,
                    r.replication,
                    r.mode,
                    r.m,
                    _format_field(r.beta),
                    _format_field(r.gamma),
                    _format_field(r.k_bin),
                    _format_field(r.value_bin),
                    r.metric,
                    repr(float(r.value)),
                    r.seed,
                ]
            )


def read_csv_rows(path: str) -> list[ResultRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise ValueError(f"unexpected CSV header in {path}: {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append(
                ResultRow(
                    experiment=rec["experiment"],
                    replication=int(rec["replication"]),
                    mode=rec["mode"],
                    m=int(rec["m"]),
                    beta=float(rec["beta"]) if rec["beta"] else None,
                    gamma=float(rec["gamma"]) if rec["gamma"] else None,
                    k_bin=int(rec["k_bin"]) if rec["k_bin"] else None,
                    value_bin=int(rec["value_bin"]) if rec["value_bin"] else None,
                    metric=rec["metric"],
                    value=float(rec["value"]),
                    seed=int(rec["seed"]),
                )
            )
    return rows


def canonical_config_text(config: ExperimentConfig) -> str:
    """Deterministic key=value rendering; hashed into the manifest."""
    lines = [
        f"experiment = {config.experiment}",
        f"n = {config.n}",
        f"m = {','.join(str(m) for m in config.m_values)}",
        f"capacity = {config.capacity}",
        f"values = {format_distribution(config.value_dist)}",
        f"noise = {format_distribution(config.noise_dist)}",
        f"mode = {','.join(config.modes)}",
        f"preferences = {config.preferences}",
        f"beta = {','.join(repr(b) for b in config.betas)}",
        f"gamma = {','.join(repr(g) for g in config.gammas)}",
        f"kappa = {'none' if config.kappa is None else 'weights [' + ', '.join(repr(w) for w in config.kappa.weights) + ']'}",
        f"strategy = {','.join(config.strategies)}",
        f"reps = {config.replications}",
        f"seed = {config.seed}",
        f"full = {str(config.full).lower()}",
    ]
    return "\n".join(lines) + "\n"


def write_outputs(config: ExperimentConfig, rows: list[ResultRow], out_dir: str) -> tuple[str, str]:
    """Write results.csv and manifest.json; returns their paths."""
    from . import __version__

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    manifest_path = os.path.join(out_dir, "manifest.json")
    write_csv(rows, csv_path)
    rum = config.preferences == RUM_PREFS
    manifest = {
        "experiment": config.experiment,
        "version": __version__,
        "seed": config.seed,
        "config_hash": hashlib.sha256(canonical_config_text(config).encode()).hexdigest(),
        "replications": effective_replications(config),
        "preferences": config.preferences,
        "sweep": {
            "modes": list(config.modes),
            "m": list(config.m_values),
            "beta": list(config.betas) if rum else [],
            "gamma": list(config.gammas) if rum else [],
            "strategies": list(config.strategies) if config.kappa is not None else [],
            "k": list(range(1, config.kappa.max_k + 1)) if config.kappa is not None else [],
        },
        "row_count": len(rows),
        "metrics": sorted({r.metric for r in rows}),
        "csv": os.path.basename(csv_path),
    }
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, manifest_path


# ---------------------------------------------------------------------------
# Presets and config files

_PRESETS: dict[str, ExperimentConfig] = {
    # Match-probability curves as m grows: poly steepens, mono is invariant.
    "e_wisdom": ExperimentConfig(
        experiment="E-WISDOM",
        n=1000,
        m_values=(2, 5, 25, 125),
        capacity=500,
        value_dist=uniform(0, 1),
        noise_dist=uniform(-0.5, 0.5),
        modes=(MONO, POLY),
        replications=1000,
    ),
    # Average rank of the match versus m.
    "e_rank": ExperimentConfig(
        experiment="E-RANK",
        n=1000,
        m_values=(2, 5, 25, 125),
        capacity=500,
        value_dist=uniform(0, 1),
        noise_dist=uniform(-0.5, 0.5),
        modes=(MONO, POLY),
        replications=100,
    ),
    # Match rate by number of applications under a uniform access law.
    "e_access": ExperimentConfig(
        experiment="E-ACCESS",
        n=1000,
        m_values=(25,),
        capacity=500,
        value_dist=uniform(0, 1),
        noise_dist=uniform(-0.5, 0.5),
        modes=(MONO, POLY),
        kappa=AccessDistribution.uniform(25),
        strategies=(TOP_K,),
        replications=10000,
    ),
    # Correlated preferences: welfare/rank surfaces and access gaps.
    "e_correlated": ExperimentConfig(
        experiment="E-CORRELATED",
        n=1000,
        m_values=(10,),
        capacity=500,
        value_dist=uniform(0, 1),
        noise_dist=gaussian(0, 0.5),
        modes=(MONO, POLY),
        preferences=RUM_PREFS,
        betas=(0.0, 5.0, 10.0, 20.0),
        gammas=(0.0, 5.0, 10.0, 20.0),
        kappa=AccessDistribution.uniform(10),
        strategies=(TOP_K, RANDOM_K),
        replications=100,
    ),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; have {sorted(_PRESETS)}") from None


def preset_names() -> list[str]:
    return sorted(_PRESETS)


_INT_LIST = ("m",)
_FLOAT_LIST = ("beta", "gamma")


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse the key = value config format; errors carry line numbers."""
    entries: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(source, lineno, f"expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not value:
            raise ConfigError(source, lineno, f"empty value for key {key!r}")
        entries.append((lineno, key, value))

    presets_seen = [(ln, v) for ln, k, v in entries if k == "preset"]
    if len(presets_seen) > 1:
        raise ConfigError(source, presets_seen[1][0], "preset may appear only once")
    if presets_seen:
        ln, name = presets_seen[0]
        try:
            config = preset(name)
        except ValueError as exc:
            raise ConfigError(source, ln, str(exc)) from None
    else:
        config = ExperimentConfig(
            experiment="CUSTOM",
            n=1000,
            m_values=(10,),
            capacity=500,
            value_dist=uniform(0, 1),
            noise_dist=uniform(-0.5, 0.5),
            modes=(MONO, POLY),
        )

    # Parse per line (line-numbered errors), build once at the end so that
    # coupled keys like n and capacity may appear in any order.
    updates: dict[str, object] = {}
    last_lineno = 1
    for lineno, key, value in entries:
        if key == "preset":
            continue
        last_lineno = lineno
        try:
            field, parsed = _parse_key(key, value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(source, lineno, str(exc)) from None
        updates[field] = parsed
    try:
        return replace(config, **updates)
    except (ValueError, TypeError) as exc:
        raise ConfigError(source, last_lineno, str(exc)) from None


def parse_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)


def _parse_mode_list(value: str) -> tuple[str, ...]:
    v = value.strip().lower()
    if v == "both":
        return (MONO, POLY)
    modes = tuple(s.strip() for s in v.split(",") if s.strip())
    return modes


def _parse_strategy_list(value: str) -> tuple[str, ...]:
    v = value.strip().lower()
    if v == "both":
        return (TOP_K, RANDOM_K)
    return tuple(s.strip() for s in v.split(",") if s.strip())


def _parse_key(key: str, value: str) -> tuple[str, object]:
    if key == "experiment":
        return "experiment", value
    if key == "n":
        return "n", int(value)
    if key in _INT_LIST:
        return "m_values", tuple(int(s) for s in value.strip("[]").split(","))
    if key == "capacity":
        return "capacity", int(value)
    if key == "values":
        return "value_dist", parse_distribution(value)
    if key == "noise":
        return "noise_dist", parse_distribution(value)
    if key == "mode":
        return "modes", _parse_mode_list(value)
    if key == "preferences":
        return "preferences", value.lower()
    if key in _FLOAT_LIST:
        return key + "s", tuple(float(s) for s in value.strip("[]").split(","))
    if key == "kappa":
        if value.lower() == "none":
            return "kappa", None
        return "kappa", parse_kappa(value)
    if key == "strategy":
        return "strategies", _parse_strategy_list(value)
    if key == "reps":
        return "replications", int(value)
    if key == "seed":
        return "seed", int(value)
    if key == "out":
        return "out_dir", value
    if key == "threads":
        return "threads", int(value)
    if key == "full":
        if value.lower() not in ("true", "false"):
            raise ValueError(f"full must be true or false, got {value!r}")
        return "full", value.lower() == "true"
    raise ValueError(f"unknown key {key!r}")
