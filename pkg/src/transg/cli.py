"""Command-line entry point: prepare / train / eval-lp / eval-tc / analyze /
export-plot.

Config values resolve as flag > file > preset > default; the fully resolved
config is echoed (with per-field provenance) before any work, in a form that
can be re-fed via --config to reproduce the run. Exit codes: 0 success,
2 usage or config error, 3 data error, 4 divergence.
"""
from __future__ import annotations

import argparse
import re
import sys
import time
from dataclasses import fields as dc_fields
from pathlib import Path

from . import figures, reports
from .analysis import (
    EFFECTIVE_THRESHOLD_DEFAULT,
    assign_clusters,
    component_census,
    export_difference_vectors,
)
from .checkpoint import CheckpointError, load_checkpoint
from .datasets import DatasetError, load_dataset
from .evaluation import classify, link_prediction_eval, tune_thresholds
from .presets import PRESETS
from .training import DivergenceError, EpochStats, TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

COMMANDS = ("prepare", "train", "eval-lp", "eval-tc", "analyze", "export-plot")

# flag destination -> TrainConfig field
_CFG_FLAGS = {
    "lr": "learning_rate",
    "dim": "dim",
    "gamma": "margin",
    "beta": "crp_beta",
    "reg_c": "reg_c",
    "epochs": "epochs",
    "sampling": "sampling",
    "variance_sum": "variance_sum",
    "seed": "seed",
}

_EXTRA_DEFAULTS = {
    "data": None,
    "columns": "hrt",
    "threads": 1,
    "filtered": True,
    "checkpoint": None,
    "out": None,
    "checkpoint_every": 0,
    "relation": None,
    "project": True,
    "effective_threshold": EFFECTIVE_THRESHOLD_DEFAULT,
}


class ConfigError(ValueError):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transg",
        description="Adaptive multi-component translation embeddings: "
        "train, evaluate, and analyze knowledge-graph models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sp = sub.add_parser(command)
        sp.add_argument("--data", help="dataset directory (train/valid/test files)")
        sp.add_argument("--preset", choices=sorted(PRESETS), help="named hyperparameter preset")
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--columns", choices=["hrt", "htr"], help="triple column order")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--dim", type=int)
        sp.add_argument("--lr", type=float, help="learning rate")
        sp.add_argument("--gamma", type=float, help="update-gate margin")
        sp.add_argument("--beta", type=float, help="component-spawn concentration")
        sp.add_argument("--reg-c", type=float, dest="reg_c", help="regularization scale")
        sp.add_argument("--variance-sum", type=float, dest="variance_sum")
        sp.add_argument("--sampling", choices=["unif", "bern"])
        sp.add_argument("--checkpoint", help="model checkpoint path")
        sp.add_argument("--checkpoint-every", type=int, dest="checkpoint_every",
                        help="checkpoint interval in epochs (0 = final only)")
        sp.add_argument("--out", help="output directory (default runs/<timestamp>)")
        sp.add_argument("--threads", type=int, help="evaluation parallelism")
        sp.add_argument("--filtered", choices=["true", "false"],
                        help="also compute filtered ranking metrics")
        sp.add_argument("--relation", help="relation name for analyze/export-plot")
        sp.add_argument("--project", action=argparse.BooleanOptionalAction,
                        default=None, help="2-D PCA projection for export-plot")
        sp.add_argument("--effective-threshold", type=float, dest="effective_threshold",
                        help="census weight threshold")
    return parser


def _coerce(key: str, raw: str, target):
    if isinstance(target, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    try:
        if isinstance(target, int):
            return int(raw)
        if isinstance(target, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: bad value {raw!r}") from None
    return raw


def _parse_config_file(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        entries[key.strip()] = value.strip()
    return entries


def resolve_run_config(args):
    """Merge defaults, preset, config file, and flags (in rising priority).

    Returns (TrainConfig, extras dict, provenance dict over every key).
    """
    defaults = TrainConfig()
    cfg = {f.name: getattr(defaults, f.name) for f in dc_fields(TrainConfig)}
    extras = dict(_EXTRA_DEFAULTS)
    prov = {k: "default" for k in list(cfg) + list(extras)}

    if args.preset:
        for key, value in PRESETS[args.preset].items():
            cfg[key] = value
            prov[key] = f"preset:{args.preset}"

    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        for key, raw in _parse_config_file(path).items():
            if key in cfg:
                cfg[key] = _coerce(key, raw, cfg[key])
            elif key in extras:
                target = extras[key] if extras[key] is not None else ""
                extras[key] = _coerce(key, raw, target)
            else:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            prov[key] = f"file:{path}"

    for dest, key in _CFG_FLAGS.items():
        value = getattr(args, dest)
        if value is not None:
            cfg[key] = value
            prov[key] = "flag"
    for dest in ("data", "columns", "threads", "checkpoint", "checkpoint_every",
                 "out", "relation", "project", "effective_threshold"):
        value = getattr(args, dest)
        if value is not None:
            extras[dest] = value
            prov[dest] = "flag"
    if args.filtered is not None:
        extras["filtered"] = args.filtered == "true"
        prov["filtered"] = "flag"

    try:
        config = TrainConfig(**cfg)
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config, extras, prov


def _echo(config: TrainConfig, extras: dict, prov: dict) -> None:
    print("# resolved config (flag > file > preset > default)")
    for key, value in sorted(config.to_dict().items()):
        print(f"{key}={value}  # {prov[key]}")
    for key in sorted(extras):
        if extras[key] is not None:
            print(f"{key}={extras[key]}  # {prov[key]}")
    sys.stdout.flush()


def _require(extras: dict, key: str, command: str):
    if extras.get(key) is None:
        raise ConfigError(f"--{key} is required for {command}")
    return extras[key]


def _load_store(extras: dict, command: str):
    data = Path(_require(extras, "data", command))
    if not data.is_dir():
        raise ConfigError(f"data directory not found: {data}")
    return load_dataset(data, column_order=extras["columns"])


def _load_model(extras: dict, store, command: str):
    path = Path(_require(extras, "checkpoint", command))
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {path}")
    model = load_checkpoint(path)
    if model.n_entities != store.n_entities or model.n_relations != store.n_relations:
        raise DatasetError(
            f"checkpoint ({model.n_entities} entities, {model.n_relations} "
            f"relations) does not match dataset ({store.n_entities}, "
            f"{store.n_relations})"
        )
    return model


def _out_dir(extras: dict) -> Path:
    out = Path(extras["out"] or Path("runs") / time.strftime("%Y%m%d-%H%M%S"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _wrote(path: Path) -> None:
    print(f"wrote {path}")


def _safe_name(name: str) -> str:
    return re.sub(r"[^\w.-]+", "_", name).strip("_") or "relation"


def _cmd_prepare(config, extras) -> int:
    store = _load_store(extras, "prepare")
    print(store.summary())
    return EXIT_OK


def _cmd_train(config, extras, preset_name) -> int:
    store = _load_store(extras, "train")
    out = _out_dir(extras)
    ckpt = Path(extras["checkpoint"]) if extras["checkpoint"] else out / "model.ckpt"
    log_path = out / "train.log"
    manifest_extra = {
        "data": str(Path(extras["data"]).resolve()),
        "columns": extras["columns"],
        "preset": preset_name or "",
    }
    with open(log_path, "w", encoding="utf-8") as log:

        def on_epoch(stats: EpochStats, _model) -> None:
            line = stats.line()
            print(line)
            log.write(line + "\n")
            log.flush()

        model, report = train(
            store,
            config,
            on_epoch=on_epoch,
            checkpoint_path=ckpt,
            checkpoint_every=extras["checkpoint_every"],
            manifest_extra=manifest_extra,
        )
    header = ["epoch", "loss", "updates", "skips", "spawns", "seconds"]
    rows = [[e.epoch, e.mean_loss, e.updates, e.skipped, e.spawns, e.seconds]
            for e in report.epochs]
    report_path = out / "train_report.csv"
    reports.write_csv(report_path, header, rows)
    figures.save_loss_curve(out / "loss_curve.png", report)
    print(f"components per relation: min={min(report.census)} "
          f"max={max(report.census)} mean={sum(report.census) / len(report.census):.2f}")
    _wrote(ckpt)
    _wrote(log_path)
    _wrote(report_path)
    _wrote(out / "loss_curve.png")
    return EXIT_OK


def _cmd_eval_lp(config, extras) -> int:
    store = _load_store(extras, "eval-lp")
    model = _load_model(extras, store, "eval-lp")
    report = link_prediction_eval(
        model, store, threads=extras["threads"], filtered=extras["filtered"]
    )
    print(reports.format_eval_report(report))
    out = _out_dir(extras)
    header, rows = reports.eval_summary_rows(report)
    reports.write_csv(out / "lp_summary.csv", header, rows)
    header, rows = reports.eval_relation_rows(report, store.relations.names)
    reports.write_csv(out / "lp_by_relation.csv", header, rows)
    figures.save_category_bar(out / "lp_categories.png", report)
    for name in ("lp_summary.csv", "lp_by_relation.csv", "lp_categories.png"):
        _wrote(out / name)
    return EXIT_OK


def _cmd_eval_tc(config, extras) -> int:
    store = _load_store(extras, "eval-tc")
    model = _load_model(extras, store, "eval-tc")
    if not store.valid_labeled or not store.test_labeled:
        raise DatasetError(
            "triple classification needs labeled valid and test splits "
            "(4-column files with a 1/-1 label)"
        )
    thresholds = tune_thresholds(model, store.valid_labeled)
    accuracy, per_relation = classify(model, thresholds, store.test_labeled)
    print(reports.format_classification(
        accuracy, per_relation, thresholds, store.relations.names
    ))
    out = _out_dir(extras)
    header, rows = reports.classification_rows(
        accuracy, per_relation, thresholds, store.relations.names
    )
    reports.write_csv(out / "classification.csv", header, rows)
    figures.save_accuracy_bar(
        out / "tc_accuracy.png", per_relation, store.relations.names
    )
    _wrote(out / "classification.csv")
    _wrote(out / "tc_accuracy.png")
    return EXIT_OK


def _cmd_analyze(config, extras) -> int:
    store = _load_store(extras, "analyze")
    model = _load_model(extras, store, "analyze")
    census = component_census(
        model, extras["effective_threshold"], store.relations.names
    )
    print(census.table())
    out = _out_dir(extras)
    header, rows = reports.census_rows(census)
    reports.write_csv(out / "census.csv", header, rows)
    figures.save_census_bar(out / "census.png", census)
    relations = [extras["relation"]] if extras["relation"] else store.relations.names
    all_rows: list[list] = []
    for name in relations:
        assignments = assign_clusters(model, store, name)
        all_rows.extend(reports.cluster_rows(assignments, store)[1])
    header = ["head", "relation", "tail", "component", "responsibility"]
    reports.write_csv(out / "clusters.csv", header, all_rows)
    for name in ("census.csv", "census.png", "clusters.csv"):
        _wrote(out / name)
    return EXIT_OK


def _cmd_export_plot(config, extras) -> int:
    store = _load_store(extras, "export-plot")
    model = _load_model(extras, store, "export-plot")
    relation = _require(extras, "relation", "export-plot")
    header, rows = export_difference_vectors(
        model, store, relation, project=extras["project"]
    )
    out = _out_dir(extras)
    safe = _safe_name(relation)
    csv_path = out / f"diff_{safe}.csv"
    reports.write_csv(csv_path, header, rows)
    _wrote(csv_path)
    if extras["project"]:
        fig_path = out / f"diff_{safe}.png"
        figures.save_difference_scatter(fig_path, rows, title=relation)
        _wrote(fig_path)
    return EXIT_OK


def _dispatch(args) -> int:
    config, extras, prov = resolve_run_config(args)
    _echo(config, extras, prov)
    if args.command == "prepare":
        return _cmd_prepare(config, extras)
    if args.command == "train":
        return _cmd_train(config, extras, args.preset)
    if args.command == "eval-lp":
        return _cmd_eval_lp(config, extras)
    if args.command == "eval-tc":
        return _cmd_eval_tc(config, extras)
    if args.command == "analyze":
        return _cmd_analyze(config, extras)
    if args.command == "export-plot":
        return _cmd_export_plot(config, extras)
    raise ConfigError(f"unknown command {args.command!r}")


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyError as exc:
        print(f"data error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
