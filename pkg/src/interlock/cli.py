"""Command-line pipeline: simulate, build data, train, rank and validate.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
Every command writes a ``<command>_manifest.json`` next to its outputs; if a
command fails, the files it had written are removed.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import designs_of, generate_dataset, read_table_csv, split, write_table_csv
from .design_space import PanelDesign, enumerate_grid, feature_names, load_design
from .metrics import EvalReport, evaluate, write_parity_csv
from .nn import CNNSurrogate, DivergenceError, MLPSurrogate, load_surrogate
from .oracle import CHANNELS, ContactSpec, LoadProfile, MaterialSpec, StabilityError, simulate
from .search import (
    SEARCH_TIME_RANGE,
    Scenario,
    file_hash,
    load_ranking,
    parse_weights,
    rank_grid,
    search_grid,
    validate_with_oracle,
)

log = logging.getLogger("interlock")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


class Outputs:
    """Tracks files written by one command so a failure can remove them."""

    def __init__(self, root: Path):
        self.root = root
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        self.paths.append(p)
        return p

    def discard(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _require(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"required input {p} does not exist")
    return p


def _load_configs(args):
    try:
        material = MaterialSpec.load(_require(args.material)) if args.material else MaterialSpec()
        contact = ContactSpec.load(_require(args.contact)) if args.contact else ContactSpec()
        profile = LoadProfile.load(_require(args.profile)) if args.profile else LoadProfile()
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return {"material": material, "contact": contact, "profile": profile}


def _sim_kwargs(args) -> dict:
    kw = _load_configs(args)
    kw["nodes_per_tile"] = args.nodes_per_tile
    return kw


def _config_hashes(kwargs) -> dict:
    return {k: v.fingerprint() for k, v in kwargs.items() if hasattr(v, "fingerprint")}


# ------------------------------------------------------------------ commands
def cmd_simulate(args, out: Outputs, manifest: dict):
    if args.design:
        design = load_design(_require(args.design))
    else:
        if args.n is None or args.angles is None:
            raise ConfigError("simulate needs --design FILE or --n, --angles and --lr")
        design = PanelDesign(args.n, tuple(float(a) for a in args.angles.split(",")), args.lr)
    kw = _sim_kwargs(args)
    run = simulate(design, sample_step=args.sample_step, **kw)
    path = out.path("response.csv")
    run.to_csv(path)
    manifest["configs"] = _config_hashes(kw)
    manifest["design"] = design.to_dict()
    edge = run.channel("edge_temperature")
    print(f"simulated {len(run)} samples; peak edge temperature {edge.max():.2f} C at t = {run.times[edge.argmax()]:.0f} s")


def cmd_gen_data(args, out: Outputs, manifest: dict):
    kw = _sim_kwargs(args)
    table = generate_dataset(args.n, args.samples, seed=args.seed, workers=args.workers, sample_step=args.sample_step, **kw)
    path = out.path("dataset.csv")
    write_table_csv(table, path)
    manifest["configs"] = _config_hashes(kw)
    manifest["dataset"] = {"rows": len(table), "designs": args.samples, "grid_size": args.n, "sample_step": args.sample_step}
    print(f"wrote {len(table)} rows from {args.samples} designs to {path}")


def _split_table(args):
    table = read_table_csv(_require(args.data))
    if len(table) < 2:
        raise ConfigError(f"{args.data} holds fewer than two rows")
    return table, split(table, args.split, seed=args.seed)


def cmd_train(args, out: Outputs, manifest: dict):
    table, (train, test) = _split_table(args)
    common = dict(epochs=args.epochs, learning_rate=args.learning_rate, batch_size=args.batch_size,
                  seed=args.seed, dtype=args.dtype, eval_every=args.eval_every)
    est = MLPSurrogate(**common) if args.model == "mlp" else CNNSurrogate(**common)
    est.fit(train.features, train.targets, test.features, test.targets,
            feature_names=table.feature_names, target_names=table.target_names)
    model_path = out.path(f"model_{args.model}.json")
    est.save(model_path)
    est.curve_.to_csv(out.path(f"curve_{args.model}.csv"))
    report = evaluate(test.targets, est.predict(test.features), table.target_names)
    report.save(out.path(f"eval_{args.model}.json"))
    manifest["model"] = {"kind": args.model, "hash": file_hash(model_path), "params": est.get_params()}
    manifest["split"] = {"fraction": args.split, "train_rows": len(train), "test_rows": len(test)}
    print(f"{args.model}: final train MSE {est.curve_.train_mse[-1]:.3e}, test mean R2 {report.mean_r2:.4f}")


def cmd_evaluate(args, out: Outputs, manifest: dict):
    model = load_surrogate(_require(args.model))
    table, (train, test) = _split_table(args)
    rows = table if args.all_rows else test
    pred = model.predict(rows.features, feature_names=table.feature_names)
    report = evaluate(rows.targets, pred, table.target_names)
    report.save(out.path(f"eval_{model.kind}.json"))
    for k, name in enumerate(CHANNELS):
        write_parity_csv(out.path(f"parity_{model.kind}_{name}.csv"), rows.targets[:, k], pred[:, k], name)
    manifest["model_hash"] = file_hash(args.model)
    for name, r2, mse in zip(report.channels, report.r2, report.mse):
        r2_text = "undefined" if r2 is None else f"{r2:.4f}"
        print(f"{name:18s} R2 {r2_text:>9s}  MSE {mse:.4e}")


def cmd_grid(args, out: Outputs, manifest: dict):
    t_stop = args.t_max + 1 if args.t_max is not None else 600
    grid = enumerate_grid(args.n, time_range=(0, t_stop))
    path = out.path(f"grid_{args.n}.json")
    with open(path, "w") as fh:
        json.dump({**grid.manifest(), "shape": list(grid.shape), "hash": grid.fingerprint()}, fh, indent=2, sort_keys=True)
    if args.rows:
        start, stop = (int(v) for v in args.rows.split(":"))
        with open(out.path(f"grid_{args.n}_rows_{start}_{stop}.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(feature_names(args.n))
            writer.writerows([repr(float(v)) for v in row] for row in grid.rows(start, stop))
    print(f"grid N={args.n}: shape {grid.shape}")


def _ranking_stem(scenario: Scenario) -> str:
    w1, w2 = (int(round(100 * w)) for w in scenario.weights)
    return f"ranking_{scenario.kind}_{w1}_{w2}"


def cmd_rank(args, out: Outputs, manifest: dict):
    model = load_surrogate(_require(args.model))
    n = {7: 3, 9: 5, 11: 7}.get(model.n_features_in_)
    if n is None:
        raise ConfigError(f"model input width {model.n_features_in_} matches no grid size")
    scenario = Scenario(args.scenario, parse_weights(args.weights))
    ranking = rank_grid(model, search_grid(n), scenario, k=args.top, workers=args.workers,
                        model_hash=file_hash(args.model))
    stem = _ranking_stem(scenario)
    ranking.save(out.path(f"{stem}.csv"), out.path(f"{stem}.json"))
    manifest["scenario"] = scenario.to_dict()
    best = ranking.candidates[0]
    print(f"ranked {ranking.grid.n_designs} designs; best score {best.score:.4f}: "
          f"angles {list(best.design.angles_deg)} lr {best.design.length_ratio}")


def cmd_validate(args, out: Outputs, manifest: dict):
    csv_path = _require(args.ranking)
    ranking = load_ranking(csv_path, _require(csv_path.with_suffix(".json")))
    table = read_table_csv(_require(args.data))
    training = list(designs_of(table).values())
    record = validate_with_oracle(ranking, training, top=args.top, workers=args.workers, **_sim_kwargs(args))
    path = out.path(f"validation_{ranking.scenario.kind}.json")
    with open(path, "w") as fh:
        json.dump(record.to_dict(), fh, indent=2, sort_keys=True)
    print(record.summary())


def cmd_report(args, out: Outputs, manifest: dict):
    from . import plotting

    src = Path(args.dir) if args.dir else out.root
    made = []
    for csv_path in sorted(src.glob("curve_*.csv")):
        svg = out.path(csv_path.with_suffix(".svg").name)
        plotting.plot_learning_curve(csv_path, svg, title=csv_path.stem.split("_", 1)[1].upper())
        made.append(svg)
    for csv_path in sorted(src.glob("parity_*.csv")):
        channel = csv_path.stem.split("_", 2)[2]
        svg = out.path(csv_path.with_suffix(".svg").name)
        plotting.plot_parity(csv_path, svg, channel)
        made.append(svg)
    for csv_path in sorted(src.glob("ranking_*.csv")):
        svg = out.path(csv_path.with_suffix(".svg").name)
        plotting.plot_ranking(csv_path, svg)
        made.append(svg)
    lines = ["# Pipeline report", ""]
    for ev in sorted(src.glob("eval_*.json")):
        rep = EvalReport.load(ev)
        lines += [f"## {ev.stem}", "", "| channel | R2 | MSE |", "|---|---|---|"]
        for name, r2, mse in zip(rep.channels, rep.r2, rep.mse):
            lines.append(f"| {name} | {'n/a' if r2 is None else f'{r2:.4f}'} | {mse:.4e} |")
        lines.append("")
    for val in sorted(src.glob("validation_*.json")):
        data = json.loads(val.read_text())
        lines += [f"## {val.stem}", "", f"- oracle score {data['oracle_score']:.4f}, best training score {data['training_best_score']:.4f}",
                  f"- improvement {data['improvement_pct'][0]:.2f}% (reference {data['benchmark_pct']:.0f}%)", ""]
    lines += ["## Charts", ""] + [f"- {p.name}" for p in made]
    (out.path("report.md")).write_text("\n".join(lines) + "\n")
    if not made:
        raise ConfigError(f"no curve, parity or ranking CSVs found in {src}")
    print(f"wrote {len(made)} charts and report.md")


# ------------------------------------------------------------------- parser
def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for sampling, splits and initialisation")
    common.add_argument("--workers", type=int, default=1, help="worker processes for simulation and scoring")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--material", help="material JSON")
    sim.add_argument("--contact", help="contact JSON")
    sim.add_argument("--profile", help="thermal load JSON")
    sim.add_argument("--nodes-per-tile", type=int, default=3)

    split_args = argparse.ArgumentParser(add_help=False)
    split_args.add_argument("--data", required=True, help="dataset CSV")
    split_args.add_argument("--split", type=float, default=0.8, help="training fraction")

    p = argparse.ArgumentParser(prog="interlock", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common, sim], help="run the thermal oracle on one design")
    s.add_argument("--design", help="design JSON")
    s.add_argument("--n", type=int)
    s.add_argument("--angles", help="comma-separated angles in degrees")
    s.add_argument("--lr", type=float, default=1.0)
    s.add_argument("--sample-step", type=float, default=1.0)

    s = sub.add_parser("gen-data", parents=[common, sim], help="simulate random grid designs into a dataset")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", type=int, required=True, help="number of designs")
    s.add_argument("--sample-step", type=float, default=1.0)

    s = sub.add_parser("train", parents=[common, split_args], help="train a surrogate")
    s.add_argument("--model", choices=("mlp", "cnn"), default="mlp")
    s.add_argument("--epochs", type=int, default=20000)
    s.add_argument("--learning-rate", type=float, default=1e-3)
    s.add_argument("--batch-size", type=int, default=None)
    s.add_argument("--dtype", choices=("float32", "float64"), default="float64")
    s.add_argument("--eval-every", type=int, default=1)

    s = sub.add_parser("evaluate", parents=[common, split_args], help="score a surrogate on held-out rows")
    s.add_argument("--model", required=True, help="model JSON")
    s.add_argument("--all-rows", action="store_true", help="evaluate on every row instead of the test split")

    s = sub.add_parser("grid", parents=[common], help="describe the candidate grid")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t-max", type=int, default=SEARCH_TIME_RANGE[1] - 1, help="last time sample (s)")
    s.add_argument("--rows", help="START:STOP row slice to write as CSV")

    s = sub.add_parser("rank", parents=[common], help="score the grid with a surrogate")
    s.add_argument("--model", required=True)
    s.add_argument("--scenario", choices=("shield", "sink"), required=True)
    s.add_argument("--weights", default="50,50")
    s.add_argument("--top", type=int, default=100)

    s = sub.add_parser("validate", parents=[common, sim], help="simulate the top ranked designs")
    s.add_argument("--ranking", required=True, help="ranking CSV (its manifest must sit next to it)")
    s.add_argument("--data", required=True, help="training dataset CSV")
    s.add_argument("--top", type=int, default=10)

    s = sub.add_parser("report", parents=[common], help="render charts and a summary from pipeline outputs")
    s.add_argument("--dir", help="directory holding the CSV/JSON outputs (default: --out)")
    return p


COMMANDS = {
    "simulate": cmd_simulate,
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
    "rank": cmd_rank,
    "validate": cmd_validate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    out = Outputs(root)
    manifest = {"command": args.command, "argv": argv, "seed": args.seed, "workers": args.workers,
                "version": __version__, "started": _now()}
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        COMMANDS[args.command](args, out, manifest)
    except (DivergenceError, StabilityError, FloatingPointError) as exc:
        out.discard()
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        out.discard()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BaseException:
        out.discard()
        raise
    inputs = {}
    for key in ("data", "model", "ranking", "design", "material", "contact", "profile"):
        value = getattr(args, key, None)
        if value and Path(value).is_file():
            inputs[str(value)] = file_hash(value)
    manifest["inputs"] = inputs
    manifest["outputs"] = {str(p): file_hash(p) for p in out.paths if p.is_file()}
    manifest["finished"] = _now()
    with open(root / f"{args.command}_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
