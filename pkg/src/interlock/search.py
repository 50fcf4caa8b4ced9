"""Surrogate-driven ranking of grid designs and oracle validation of the winners.

Scoring happens in two passes.  The first streams the grid in design shards,
predicts every design over the search time window and keeps its two objective
maxima.  The second normalizes those maxima over the whole candidate pool,
forms the weighted score and selects the best ``k`` through per-shard
selections that are merged order-independently.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .design_space import DesignGrid, PanelDesign, enumerate_grid
from .oracle import CHANNELS, simulate

SEARCH_TIME_RANGE = (0, 201)  # t = 0 .. 200 s inclusive
OBJECTIVES = {
    "shield": (("edge_temperature", "min"), ("oop_deformation", "min")),
    "sink": (("internal_energy", "max"), ("elastic_energy", "min")),
}
SWEEP_WEIGHTS = ((1.0, 0.0), (0.75, 0.25), (0.5, 0.5), (0.25, 0.75), (0.0, 1.0))
IMPROVEMENT_BENCHMARK_PCT = 30.0
# designs per prediction block; shard boundaries are multiples of this so
# every design is always predicted inside an identical batch
BLOCK_DESIGNS = 64


@dataclass(frozen=True)
class Scenario:
    kind: str
    weights: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise ValueError(f"unknown scenario {self.kind!r}; expected one of {sorted(OBJECTIVES)}")
        w = tuple(float(v) for v in self.weights)
        if len(w) != 2 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"weights must be two non-negative numbers summing to 1, got {self.weights}")
        object.__setattr__(self, "weights", w)

    @property
    def objectives(self) -> tuple[tuple[str, str], ...]:
        return OBJECTIVES[self.kind]

    @property
    def channels(self) -> list[str]:
        return [name for name, _ in self.objectives]

    @property
    def channel_index(self) -> list[int]:
        return [CHANNELS.index(name) for name in self.channels]

    @property
    def maximize(self) -> np.ndarray:
        return np.array([sense == "max" for _, sense in self.objectives])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "weights": list(self.weights), "objectives": [list(o) for o in self.objectives]}


def parse_weights(text: str) -> tuple[float, float]:
    """``"75,25"`` (percent) or ``"0.75,0.25"`` -> ``(0.75, 0.25)``."""
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated weights, got {text!r}")
    total = sum(parts)
    if total <= 0:
        raise ValueError("weights must not both be zero")
    if total > 1.0 + 1e-9:
        parts = [p / 100.0 for p in parts]
    return parts[0], parts[1]


def max_over_time(values, times=None, time_range=SEARCH_TIME_RANGE) -> np.ndarray:
    """Per-channel maxima over the time axis (second to last).

    When ``times`` is given the samples must cover every whole second of
    ``time_range`` exactly once.
    """
    values = np.asarray(values, dtype=float)
    if times is not None:
        expected = np.arange(*time_range, dtype=float)
        times = np.asarray(times, dtype=float)
        if times.shape != expected.shape or not np.array_equal(np.sort(times), expected):
            missing = sorted(set(expected.tolist()) - set(times.tolist()))
            raise ValueError(f"time samples do not cover {time_range[0]}..{time_range[1] - 1} s at 1 s steps; missing {missing[:5]}")
        if values.shape[-2] != len(times):
            raise ValueError("time axis length does not match times")
    return values.max(axis=-2)


@dataclass(frozen=True)
class PoolStats:
    minimum: np.ndarray
    maximum: np.ndarray

    @classmethod
    def of(cls, maxima) -> "PoolStats":
        maxima = np.asarray(maxima, dtype=float)
        return cls(maxima.min(axis=0), maxima.max(axis=0))

    def merge(self, other: "PoolStats") -> "PoolStats":
        return PoolStats(np.minimum(self.minimum, other.minimum), np.maximum(self.maximum, other.maximum))

    def to_dict(self):
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist()}


def orient_and_normalize(maxima, maximize, pool: PoolStats) -> np.ndarray:
    """Min-max normalize over the pool, flipping maximized objectives so lower is better.

    An objective that is constant over the pool contributes 0.
    """
    maxima = np.asarray(maxima, dtype=float)
    span = pool.maximum - pool.minimum
    live = span > 0
    norm = np.where(live, (maxima - pool.minimum) / np.where(live, span, 1.0), 0.0)
    flipped = np.where(np.asarray(maximize), 1.0 - norm, norm)
    return np.where(live, flipped, 0.0)


def weighted_score(oriented, weights) -> np.ndarray:
    oriented = np.asarray(oriented, dtype=float)
    return oriented[..., 0] * weights[0] + oriented[..., 1] * weights[1]


def rank_order(scores, keys) -> np.ndarray:
    """Indices sorted by score, ties broken lexicographically on the key rows."""
    keys = np.asarray(keys, dtype=float)
    return np.lexsort(tuple(keys[:, j] for j in range(keys.shape[1] - 1, -1, -1)) + (np.asarray(scores),))


def top_k(scores, keys, k: int) -> np.ndarray:
    return rank_order(scores, keys)[:k]


@dataclass(frozen=True)
class Selection:
    """A bounded candidate set: ids, scores and tie-break keys, best first."""

    ids: np.ndarray
    scores: np.ndarray
    keys: np.ndarray

    @classmethod
    def empty(cls, key_width: int) -> "Selection":
        return cls(np.empty(0, dtype=np.int64), np.empty(0), np.empty((0, key_width)))

    def merge(self, other: "Selection", k: int) -> "Selection":
        ids = np.concatenate([self.ids, other.ids])
        scores = np.concatenate([self.scores, other.scores])
        keys = np.concatenate([self.keys, other.keys])
        keep = top_k(scores, keys, k)
        return Selection(ids[keep], scores[keep], keys[keep])


@dataclass
class RankedCandidate:
    rank: int
    score: float
    design: PanelDesign
    design_index: int
    maxima: tuple[float, float]
    oriented: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "score": self.score,
            "design": self.design.to_dict(),
            "design_index": self.design_index,
            "maxima": list(self.maxima),
            "oriented": list(self.oriented),
        }


# ------------------------------------------------------------ grid prediction
def _predict_shard(model, grid: DesignGrid, start: int, stop: int, channel_index) -> np.ndarray:
    """Objective maxima of designs ``start .. stop - 1``, shape ``(stop - start, 2)``."""
    out = np.empty((stop - start, len(channel_index)))
    n_t = grid.n_times
    for b in range(start, stop, BLOCK_DESIGNS):
        e = min(b + BLOCK_DESIGNS, stop)
        pred = model.predict(grid.rows_for_designs(b, e), chunk_size=BLOCK_DESIGNS * n_t)
        out[b - start : e - start] = pred.reshape(e - b, n_t, -1)[:, :, channel_index].max(axis=1)
    return out


def _shards(grid: DesignGrid, designs_per_shard: int) -> list[tuple[int, int]]:
    per = max(BLOCK_DESIGNS, (designs_per_shard // BLOCK_DESIGNS) * BLOCK_DESIGNS)
    return grid.design_shards(per)


def predict_grid_maxima(model, grid: DesignGrid, scenario: Scenario, workers: int = 1,
                        designs_per_shard: int = 4096, shard_order=None) -> np.ndarray:
    """Predicted objective maxima for every design of ``grid`` (first pass)."""
    shards = _shards(grid, designs_per_shard)
    order = list(range(len(shards))) if shard_order is None else list(shard_order)
    if sorted(order) != list(range(len(shards))):
        raise ValueError("shard_order must be a permutation of the shard indices")
    maxima = np.empty((grid.n_designs, 2))
    jobs = [shards[i] for i in order]
    if workers <= 1:
        results = [_predict_shard(model, grid, s, e, scenario.channel_index) for s, e in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_predict_shard, model, grid, s, e, scenario.channel_index) for s, e in jobs]
            results = [f.result() for f in futures]
    for (s, e), res in zip(jobs, results):
        maxima[s:e] = res
    return maxima


def select_top(maxima, grid: DesignGrid, scenario: Scenario, k: int = 100,
               designs_per_shard: int = 4096, shard_order=None) -> tuple[Selection, PoolStats]:
    """Second pass: score every design and keep the best ``k`` (merged across shards)."""
    pool = PoolStats.of(maxima)
    maximize = scenario.maximize
    shards = _shards(grid, designs_per_shard)
    order = range(len(shards)) if shard_order is None else shard_order
    best = Selection.empty(grid.n_angles + 1)
    for i in order:
        s, e = shards[i]
        scores = weighted_score(orient_and_normalize(maxima[s:e], maximize, pool), scenario.weights)
        keys = grid.design_features(s, e)[:, :-1]
        keep = top_k(scores, keys, k)
        best = best.merge(Selection(np.arange(s, e)[keep], scores[keep], keys[keep]), k)
    return best, pool


@dataclass
class Ranking:
    scenario: Scenario
    candidates: list[RankedCandidate]
    pool: PoolStats
    grid: DesignGrid
    model_hash: str = ""
    extra: dict = field(default_factory=dict)

    def manifest(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "k": len(self.candidates),
            "pool": self.pool.to_dict(),
            "grid": self.grid.manifest(),
            "grid_hash": self.grid.fingerprint(),
            "model_hash": self.model_hash,
            **self.extra,
        }

    def to_csv(self, path) -> None:
        a = self.grid.n_angles
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "score", "n"] + [f"angle_{i + 1}" for i in range(a)] + ["lr", "obj1_max", "obj2_max"])
            for c in self.candidates:
                w.writerow(
                    [c.rank, repr(c.score), c.design.grid_size]
                    + [repr(v) for v in c.design.angles_deg]
                    + [repr(c.design.length_ratio), repr(c.maxima[0]), repr(c.maxima[1])]
                )

    def save(self, csv_path, manifest_path) -> None:
        self.to_csv(csv_path)
        with open(manifest_path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)


def rank_grid(model, grid: DesignGrid, scenario: Scenario, k: int = 100, workers: int = 1,
              designs_per_shard: int = 4096, shard_order=None, model_hash: str = "") -> Ranking:
    """Full two-pass search over ``grid``."""
    maxima = predict_grid_maxima(model, grid, scenario, workers, designs_per_shard, shard_order)
    sel, pool = select_top(maxima, grid, scenario, k, designs_per_shard, shard_order)
    cands = []
    for rank, (idx, score) in enumerate(zip(sel.ids, sel.scores), start=1):
        m = maxima[idx]
        o = orient_and_normalize(m, scenario.maximize, pool)
        cands.append(RankedCandidate(rank, float(score), grid.design(int(idx)), int(idx), (float(m[0]), float(m[1])), (float(o[0]), float(o[1]))))
    return Ranking(scenario, cands, pool, grid, model_hash, {"n_candidates": grid.n_designs})


def search_grid(grid_size: int) -> DesignGrid:
    """The candidate grid restricted to the search time window."""
    return enumerate_grid(grid_size, time_range=SEARCH_TIME_RANGE)


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -------------------------------------------------------------- oracle checks
def _oracle_maxima_one(design, channel_index, sim_kwargs):
    run = simulate(design, sample_step=1.0, **sim_kwargs).window(*(SEARCH_TIME_RANGE[0], SEARCH_TIME_RANGE[1] - 1))
    return max_over_time(run.values[:, channel_index], run.times)


def oracle_maxima(designs: Sequence[PanelDesign], scenario: Scenario, workers: int = 1, **sim_kwargs) -> np.ndarray:
    """True objective maxima over the search window, one simulation per design."""
    idx = scenario.channel_index
    if workers <= 1:
        rows = [_oracle_maxima_one(d, idx, sim_kwargs) for d in designs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_oracle_maxima_one, designs, [idx] * len(designs), [sim_kwargs] * len(designs)))
    return np.array(rows).reshape(len(designs), 2)


@dataclass
class ValidationRecord:
    scenario: Scenario
    best_design: PanelDesign
    predicted_maxima: tuple[float, float]
    oracle_maxima: tuple[float, float]
    predicted_score: float
    oracle_score: float
    checked: int
    training_best_design: PanelDesign
    training_best_maxima: tuple[float, float]
    training_best_score: float
    improvement_pct: tuple[float, float]
    benchmark_pct: float = IMPROVEMENT_BENCHMARK_PCT

    @property
    def score_gap(self) -> float:
        return self.oracle_score - self.predicted_score

    @property
    def no_worse_than_training(self) -> bool:
        return self.oracle_score <= self.training_best_score

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "best_design": self.best_design.to_dict(),
            "predicted_maxima": list(self.predicted_maxima),
            "oracle_maxima": list(self.oracle_maxima),
            "predicted_score": self.predicted_score,
            "oracle_score": self.oracle_score,
            "score_gap": self.score_gap,
            "candidates_simulated": self.checked,
            "training_best_design": self.training_best_design.to_dict(),
            "training_best_maxima": list(self.training_best_maxima),
            "training_best_score": self.training_best_score,
            "improvement_pct": list(self.improvement_pct),
            "benchmark_pct": self.benchmark_pct,
            "no_worse_than_training": self.no_worse_than_training,
        }

    def summary(self) -> str:
        names = self.scenario.channels
        lines = [
            f"scenario {self.scenario.kind} weights {self.scenario.weights}",
            f"best design: angles {list(self.best_design.angles_deg)} lr {self.best_design.length_ratio}",
            f"  predicted {names[0]} max {self.predicted_maxima[0]:.6g}, {names[1]} max {self.predicted_maxima[1]:.6g}, score {self.predicted_score:.4f}",
            f"  oracle    {names[0]} max {self.oracle_maxima[0]:.6g}, {names[1]} max {self.oracle_maxima[1]:.6g}, score {self.oracle_score:.4f}",
            f"best training design score {self.training_best_score:.4f} ({names[0]} max {self.training_best_maxima[0]:.6g})",
            f"improvement over training pool: {self.improvement_pct[0]:.2f}% ({names[0]}), {self.improvement_pct[1]:.2f}% ({names[1]}); reference figure {self.benchmark_pct:.0f}%",
        ]
        return "\n".join(lines)


def _improvement(best, reference, maximize) -> float:
    if reference == 0:
        return 0.0 if best == reference else math.copysign(math.inf, best - reference if maximize else reference - best)
    gain = (best - reference) if maximize else (reference - best)
    return 100.0 * gain / abs(reference)


def validate_with_oracle(ranking: Ranking, training_designs: Sequence[PanelDesign], top: int = 10,
                         workers: int = 1, training_maxima=None, **sim_kwargs) -> ValidationRecord:
    """Simulate the ``top`` ranked designs and compare with the best training design.

    Oracle maxima of candidates and training designs are scored on the
    ranking's normalization pool, so the scores are directly comparable.
    """
    scenario = ranking.scenario
    if not ranking.candidates:
        raise ValueError("ranking is empty")
    if not training_designs:
        raise ValueError("no training designs to compare against")
    picks = ranking.candidates[:top]
    true_max = oracle_maxima([c.design for c in picks], scenario, workers, **sim_kwargs)
    true_score = weighted_score(orient_and_normalize(true_max, scenario.maximize, ranking.pool), scenario.weights)
    feats = np.array([[*c.design.angles_deg, c.design.length_ratio] for c in picks])
    i = int(top_k(true_score, feats, 1)[0])

    if training_maxima is None:
        training_maxima = oracle_maxima(list(training_designs), scenario, workers, **sim_kwargs)
    training_maxima = np.asarray(training_maxima, dtype=float)
    train_score = weighted_score(orient_and_normalize(training_maxima, scenario.maximize, ranking.pool), scenario.weights)
    tfeats = np.array([[*d.angles_deg, d.length_ratio] for d in training_designs])
    j = int(top_k(train_score, tfeats, 1)[0])

    improvement = tuple(
        _improvement(true_max[i, o], training_maxima[j, o], bool(scenario.maximize[o])) for o in range(2)
    )
    return ValidationRecord(
        scenario=scenario,
        best_design=picks[i].design,
        predicted_maxima=picks[i].maxima,
        oracle_maxima=(float(true_max[i, 0]), float(true_max[i, 1])),
        predicted_score=picks[i].score,
        oracle_score=float(true_score[i]),
        checked=len(picks),
        training_best_design=training_designs[j],
        training_best_maxima=(float(training_maxima[j, 0]), float(training_maxima[j, 1])),
        training_best_score=float(train_score[j]),
        improvement_pct=improvement,
    )


def load_ranking(csv_path, manifest_path) -> Ranking:
    """Rebuild a saved ranking from its CSV and manifest."""
    with open(manifest_path) as fh:
        man = json.load(fh)
    sc = man["scenario"]
    scenario = Scenario(sc["kind"], tuple(sc["weights"]))
    grid = DesignGrid.from_manifest(man["grid"])
    pool = PoolStats(np.asarray(man["pool"]["min"], dtype=float), np.asarray(man["pool"]["max"], dtype=float))
    a = grid.n_angles
    cands = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            design = PanelDesign(int(row[2]), tuple(float(v) for v in row[3 : 3 + a]), float(row[3 + a]), grid.thickness_mm)
            m = np.array([float(row[4 + a]), float(row[5 + a])])
            o = orient_and_normalize(m, scenario.maximize, pool)
            cands.append(RankedCandidate(int(row[0]), float(row[1]), design, grid.design_index(design),
                                         (float(m[0]), float(m[1])), (float(o[0]), float(o[1]))))
    extra = {k: v for k, v in man.items() if k not in ("scenario", "k", "pool", "grid", "grid_hash", "model_hash")}
    return Ranking(scenario, cands, pool, grid, man.get("model_hash", ""), extra)
