"""Regression scores and per-channel evaluation reports."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} vs {yhat.shape[0]}")
    if y.size == 0:
        raise ValueError("empty input")
    return y, yhat


def r_squared(y, yhat) -> float:
    """Coefficient of determination ``1 - SS_res / SS_tot``."""
    y, yhat = _pair(y, yhat)
    if y.size < 2:
        raise ValueError("R^2 needs at least two observations")
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise ValueError("R^2 is undefined for constant observations")
    return float(1.0 - np.sum((y - yhat) ** 2) / ss_tot)


def mean_squared_error(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean((y - yhat) ** 2))


@dataclass
class EvalReport:
    """Per-channel R^2 and MSE of a prediction set.

    ``r2`` holds ``None`` for channels whose observations are constant.
    """

    channels: list[str]
    r2: list[float | None]
    mse: list[float]
    n_samples: int

    @property
    def mean_r2(self) -> float:
        vals = [v for v in self.r2 if v is not None]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def mean_mse(self) -> float:
        return float(np.mean(self.mse))

    def r2_of(self, channel: str) -> float | None:
        return self.r2[self.channels.index(channel)]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mean_r2"] = self.mean_r2
        out["mean_mse"] = self.mean_mse
        return out

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path) as fh:
            data = json.load(fh)
        return cls(data["channels"], data["r2"], data["mse"], data["n_samples"])


def evaluate(y_true, y_pred, channels) -> EvalReport:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.shape[1] != len(channels):
        raise ValueError("prediction and truth must share shape (n, n_channels)")
    r2, mse = [], []
    for k in range(len(channels)):
        try:
            r2.append(r_squared(y_true[:, k], y_pred[:, k]))
        except ValueError:
            r2.append(None)
        mse.append(mean_squared_error(y_true[:, k], y_pred[:, k]))
    return EvalReport(list(channels), r2, mse, int(y_true.shape[0]))


def write_parity_csv(path, y_true, y_pred, channel: str) -> None:
    """Truth/prediction pairs of one channel, for parity plots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow((f"{channel}_true", f"{channel}_pred"))
        for a, b in zip(np.ravel(y_true), np.ravel(y_pred)):
            writer.writerow((repr(float(a)), repr(float(b))))
