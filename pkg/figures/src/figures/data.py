"""Result-CSV and run-manifest ingestion.

The renderer consumes the experiment harness only through its two file
formats: the eleven-column result CSV and the JSON manifest written beside
it. Columns arrive as strings; this module types them and fails loudly on
schema drift, naming exactly what is missing.
"""

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

CSV_COLUMNS = (
    "experiment",
    "replication",
    "mode",
    "m",
    "beta",
    "gamma",
    "k_bin",
    "value_bin",
    "metric",
    "value",
    "seed",
)

MANIFEST_KEYS = ("experiment", "replications", "sweep", "metrics", "csv")
SWEEP_KEYS = ("modes", "m", "beta", "gamma", "strategies", "k")


class SchemaError(ValueError):
    """Input file does not match the harness contract."""


class EmptySelectionError(ValueError):
    """A figure's row filter matched nothing."""


class SeriesCountError(ValueError):
    """Plotted series disagree with the manifest's sweep cardinality."""


@dataclass(frozen=True)
class Table:
    """Column store for one result CSV.

    Optional numeric columns (beta, gamma, k_bin, value_bin) hold nan where
    the CSV cell was blank; mode and metric stay as object arrays.
    """

    mode: np.ndarray
    metric: np.ndarray
    replication: np.ndarray
    m: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    k_bin: np.ndarray
    value_bin: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.value)


def _optional_float(cell: str) -> float:
    return float(cell) if cell != "" else float("nan")


def load_table(path: str) -> Table:
    """Read a result CSV, validating the header before touching any row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        got = tuple(reader.fieldnames or ())
        if got != CSV_COLUMNS:
            missing = [c for c in CSV_COLUMNS if c not in got]
            extra = [c for c in got if c not in CSV_COLUMNS]
            raise SchemaError(
                f"{path}: header mismatch; missing columns {missing}, unexpected {extra}")
        raw = list(reader)
    if not raw:
        raise EmptySelectionError(f"{path}: no data rows")
    return Table(
        mode=np.array([r["mode"] for r in raw], dtype=object),
        metric=np.array([r["metric"] for r in raw], dtype=object),
        replication=np.array([int(r["replication"]) for r in raw]),
        m=np.array([int(r["m"]) for r in raw]),
        beta=np.array([_optional_float(r["beta"]) for r in raw]),
        gamma=np.array([_optional_float(r["gamma"]) for r in raw]),
        k_bin=np.array([_optional_float(r["k_bin"]) for r in raw]),
        value_bin=np.array([_optional_float(r["value_bin"]) for r in raw]),
        value=np.array([float(r["value"]) for r in raw]),
    )


def default_manifest_path(csv_path: str) -> str:
    return os.path.join(os.path.dirname(os.path.abspath(csv_path)), "manifest.json")


def load_manifest(path: str) -> dict:
    """Read the run manifest and check the keys the renderer relies on."""
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(
            f"{path}: run manifest not found; pass --manifest or render next to one") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: manifest is not valid JSON ({exc})") from None
    missing = [k for k in MANIFEST_KEYS if k not in manifest]
    if not missing:
        missing = [f"sweep.{k}" for k in SWEEP_KEYS if k not in manifest["sweep"]]
    if missing:
        raise SchemaError(f"{path}: manifest missing keys {missing}")
    return manifest


def group_mean(table: Table, mask: np.ndarray, *key_cols: np.ndarray) -> dict[tuple, float]:
    """Mean of `value` over replications, keyed by tuples drawn from key_cols."""
    sums: dict[tuple, float] = {}
    counts: dict[tuple, int] = {}
    idx = np.flatnonzero(mask)
    for i in idx:
        key = tuple(col[i] for col in key_cols)
        sums[key] = sums.get(key, 0.0) + table.value[i]
        counts[key] = counts.get(key, 0) + 1
    return {key: sums[key] / counts[key] for key in sums}
