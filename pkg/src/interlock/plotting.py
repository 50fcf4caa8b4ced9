"""SVG charts drawn from the CSV artifacts.  Presentation only."""
from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "interlock"  # stable element ids across runs


def _read_columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {name: [] for name in header}
    for row in body:
        for name, value in zip(header, row):
            cols[name].append(float(value) if value != "" else float("nan"))
    return cols


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_learning_curve(csv_path, svg_path, title="") -> None:
    cols = _read_columns(csv_path)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(cols["epoch"], cols["train_mse"], label="train")
    if any(v == v for v in cols["val_mse"]):
        pts = [(e, v) for e, v in zip(cols["epoch"], cols["val_mse"]) if v == v]
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (scaled)")
    ax.set_title(title)
    ax.legend()
    _save(fig, svg_path)


def plot_parity(csv_path, svg_path, channel: str) -> None:
    cols = _read_columns(csv_path)
    y, yhat = cols[f"{channel}_true"], cols[f"{channel}_pred"]
    lo, hi = min(min(y), min(yhat)), max(max(y), max(yhat))
    fig, ax = plt.subplots(figsize=(3.5, 3.5))
    ax.plot([lo, hi], [lo, hi], color="0.6", lw=1)
    ax.scatter(y, yhat, s=4, alpha=0.5)
    ax.set_xlabel("simulated")
    ax.set_ylabel("predicted")
    ax.set_title(channel)
    _save(fig, svg_path)


def plot_ranking(csv_path, svg_path, top: int = 20) -> None:
    cols = _read_columns(csv_path)
    ranks, scores = cols["rank"][:top], cols["score"][:top]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar([int(r) for r in ranks], scores)
    ax.set_xlabel("rank")
    ax.set_ylabel("weighted score (lower is better)")
    _save(fig, svg_path)
