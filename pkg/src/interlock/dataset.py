"""Supervised sample tables built from simulator runs, scaling and persistence."""
from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .design_space import (
    GRID_ANGLES_DEG,
    GRID_LENGTH_RATIOS,
    DesignGrid,
    PanelDesign,
    encode_features,
    feature_names,
    n_angles,
)
from .oracle import CHANNELS, ResponseSeries, simulate

MAX_ANGLES = 8


@dataclass(frozen=True)
class SampleTable:
    """One row per (design, sampled time); targets are the nine response channels."""

    features: np.ndarray
    targets: np.ndarray
    design_ids: np.ndarray
    grid_size: int | None

    def __post_init__(self):
        n = len(self.features)
        if len(self.targets) != n or len(self.design_ids) != n:
            raise ValueError("features, targets and design ids must have equal row counts")
        if n and (np.isnan(self.features).any() or np.isnan(self.targets).any()):
            raise ValueError("sample table contains NaN")

    def __len__(self):
        return len(self.features)

    @property
    def feature_names(self) -> list[str]:
        return feature_names(self.grid_size) if self.grid_size else []

    @property
    def target_names(self) -> list[str]:
        return list(CHANNELS)

    @property
    def times(self) -> np.ndarray:
        return self.features[:, -1]

    def take(self, index) -> "SampleTable":
        index = np.asarray(index)
        return SampleTable(self.features[index], self.targets[index], self.design_ids[index], self.grid_size)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.features, self.targets, self.design_ids):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


def flatten_runs(runs: Sequence[tuple[PanelDesign, ResponseSeries]], design_ids=None) -> SampleTable:
    """Stack runs into a table; every sampled time becomes one row.

    Repeated runs of the same design are kept as separate rows.
    """
    if not runs:
        return SampleTable(np.empty((0, 0)), np.empty((0, len(CHANNELS))), np.empty(0, dtype=int), None)
    sizes = {design.grid_size for design, _ in runs}
    if len(sizes) != 1:
        raise ValueError(f"runs mix grid sizes {sorted(sizes)}; build one table per size")
    ids = range(len(runs)) if design_ids is None else design_ids
    feats, targets, id_col = [], [], []
    for did, (design, series) in zip(ids, runs):
        base = encode_features(design, 0.0)
        block = np.repeat(base[None, :], len(series), axis=0)
        block[:, -1] = series.times
        feats.append(block)
        targets.append(series.values)
        id_col.append(np.full(len(series), did, dtype=int))
    return SampleTable(np.concatenate(feats), np.concatenate(targets), np.concatenate(id_col), sizes.pop())


def split(table: SampleTable, fraction: float = 0.8, seed: int = 0) -> tuple[SampleTable, SampleTable]:
    """Random row split into train / test, deterministic in ``seed``."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(len(table))
    n_train = int(round(fraction * len(table)))
    return table.take(np.sort(perm[:n_train])), table.take(np.sort(perm[n_train:]))


class MinMaxScaler(TransformerMixin, BaseEstimator):
    """Column-wise min-max scaling to [0, 1]; constant columns map to 0.

    Unlike the scikit-learn scaler this one records column names and refuses
    to transform tables whose columns come in a different order, and it
    serializes to plain JSON.
    """

    def __init__(self, columns=None):
        self.columns = columns

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        span = self.data_max_ - self.data_min_
        self.scale_ = np.where(span > 0, span, 1.0)
        self.n_features_in_ = X.shape[1]
        self.fit_fingerprint_ = hashlib.sha256(np.ascontiguousarray(X).tobytes()).hexdigest()
        self.columns_ = list(self.columns) if self.columns is not None else None
        if self.columns_ is not None and len(self.columns_) != X.shape[1]:
            raise ValueError("columns and data width differ")
        return self

    def _check(self, X, columns):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        if columns is not None and self.columns_ is not None and list(columns) != self.columns_:
            raise ValueError(f"column order {list(columns)} differs from fitted order {self.columns_}")
        return X

    def transform(self, X, columns=None):
        X = self._check(X, columns)
        return (X - self.data_min_) / self.scale_

    def inverse_transform(self, X, columns=None):
        X = self._check(X, columns)
        return X * self.scale_ + self.data_min_

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def to_dict(self) -> dict:
        check_is_fitted(self, "scale_")
        return {
            "columns": self.columns_,
            "data_min": self.data_min_.tolist(),
            "data_max": self.data_max_.tolist(),
            "fit_fingerprint": self.fit_fingerprint_,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MinMaxScaler":
        sc = cls(columns=data["columns"])
        sc.data_min_ = np.asarray(data["data_min"], dtype=float)
        sc.data_max_ = np.asarray(data["data_max"], dtype=float)
        span = sc.data_max_ - sc.data_min_
        sc.scale_ = np.where(span > 0, span, 1.0)
        sc.n_features_in_ = len(sc.data_min_)
        sc.columns_ = data["columns"]
        sc.fit_fingerprint_ = data.get("fit_fingerprint")
        return sc


@dataclass(frozen=True)
class TableScaler:
    features: MinMaxScaler
    targets: MinMaxScaler


def fit_scaler(train: SampleTable) -> TableScaler:
    """Fit feature and target scalers on training rows only."""
    return TableScaler(
        MinMaxScaler(train.feature_names).fit(train.features),
        MinMaxScaler(train.target_names).fit(train.targets),
    )


def apply_scaler(scaler: TableScaler, table: SampleTable) -> SampleTable:
    return replace(
        table,
        features=scaler.features.transform(table.features, table.feature_names),
        targets=scaler.targets.transform(table.targets, table.target_names),
    )


# ------------------------------------------------------------------ persistence
def _csv_header():
    return (
        ["design_id", "n"]
        + [f"angle_{k + 1}" for k in range(MAX_ANGLES)]
        + ["lr", "tiles", "t"]
        + list(CHANNELS)
    )


def write_table_csv(table: SampleTable, path) -> None:
    """Write with round-trip float formatting; unused angle columns stay blank."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_csv_header())
        if not len(table):
            return
        a = n_angles(table.grid_size)
        pad = [""] * (MAX_ANGLES - a)
        for did, f, y in zip(table.design_ids, table.features, table.targets):
            angles = [repr(float(v)) for v in f[:a]]
            rest = [repr(float(v)) for v in f[a:]]
            writer.writerow([int(did), table.grid_size] + angles + pad + rest + [repr(float(v)) for v in y])


def read_table_csv(path) -> SampleTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _csv_header():
            raise ValueError(f"{path}: unexpected dataset header")
        rows = list(reader)
    if not rows:
        return flatten_runs([])
    sizes = {int(r[1]) for r in rows}
    if len(sizes) != 1:
        raise ValueError(f"{path}: dataset mixes grid sizes {sorted(sizes)}")
    n = sizes.pop()
    a = n_angles(n)
    ids = np.array([int(r[0]) for r in rows])
    feats = np.array([[float(v) for v in r[2 : 2 + a] + r[2 + MAX_ANGLES : 5 + MAX_ANGLES]] for r in rows])
    targets = np.array([[float(v) for v in r[5 + MAX_ANGLES :]] for r in rows])
    return SampleTable(feats, targets, ids, n)


def designs_of(table: SampleTable) -> dict[int, PanelDesign]:
    """Design of every id in the table."""
    out = {}
    a = n_angles(table.grid_size)
    for did in np.unique(table.design_ids):
        row = table.features[np.argmax(table.design_ids == did)]
        out[int(did)] = PanelDesign(table.grid_size, tuple(row[:a]), row[a])
    return out


# -------------------------------------------------------------- data generation
def random_designs(grid_size: int, count: int, seed: int = 0,
                   lr_values=GRID_LENGTH_RATIOS, angle_values=GRID_ANGLES_DEG) -> list[PanelDesign]:
    """Distinct grid designs drawn uniformly without replacement."""
    grid = DesignGrid(grid_size, tuple(lr_values), tuple(angle_values), (0, 1))
    if count > grid.n_designs:
        raise ValueError(f"only {grid.n_designs} distinct designs available")
    rng = np.random.default_rng(seed)
    if grid.n_designs <= 10_000_000:
        picks = rng.choice(grid.n_designs, size=count, replace=False)
    else:
        picks = set()
        while len(picks) < count:
            picks.add(int(rng.integers(grid.n_designs)))
        picks = np.array(sorted(picks))
        rng.shuffle(picks)
    return [grid.design(int(i)) for i in picks]


def _run(design, kwargs):
    return simulate(design, **kwargs)


def run_designs(designs: Sequence[PanelDesign], workers: int = 1, **sim_kwargs) -> list[ResponseSeries]:
    """Simulate every design; results keep input order regardless of ``workers``."""
    fn = partial(_run, kwargs=sim_kwargs)
    if workers <= 1:
        return [fn(d) for d in designs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, designs, chunksize=max(1, len(designs) // (4 * workers))))


def generate_dataset(grid_size: int, count: int, seed: int = 0, workers: int = 1, **sim_kwargs) -> SampleTable:
    designs = random_designs(grid_size, count, seed)
    runs = run_designs(designs, workers, **sim_kwargs)
    return flatten_runs(list(zip(designs, runs)))
