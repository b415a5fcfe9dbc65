"""Command-line front end.

Subcommands mirror the pipeline stages: eda, select, tune, train, evaluate,
and pipeline (the whole chain). Every artifact is JSON (plus CSV for the
correlation matrix and ROC points, ready for external plotting); no images
are rendered. All randomness flows from --seed.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import __version__
from .data import (
    FEATURE_COLUMNS,
    Dataset,
    ScalerParams,
    apply_scaler,
    eda_summary,
    fit_scaler,
    load_dataset,
    stratified_split,
    validate_dataset,
)
from .ensemble import (
    Forest,
    ForestConfig,
    RANDOM_FOREST,
    extra_trees_config,
    feature_importances,
    fit_forest,
    predict,
    predict_proba,
    random_forest_config,
    select_top_k,
)
from .errors import (
    DegenerateClassError,
    EmptyInputError,
    HfSurvivalError,
    InvalidCombinationError,
    InvalidGridError,
    NoViableCombinationError,
    ParseError,
    SchemaError,
    StratificationError,
)
from .metrics import confusion_matrix, full_report, roc_curve
from .presets import PRESETS, builtin_grid
from .tune import HyperGrid, grid_search_forests, tree_config_from_combo

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

MODEL_FORMAT = "hfsurvival-model/1"

_DATA_ERRORS = (
    SchemaError,
    ParseError,
    EmptyInputError,
    StratificationError,
    DegenerateClassError,
    FileNotFoundError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _status(msg: str) -> None:
    print(msg, file=sys.stderr)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _load_checked(path) -> Dataset:
    dataset = load_dataset(path)
    violations = validate_dataset(dataset)
    if violations:
        lines = [
            f"  row {v.row + 1}: {v.message} (value {v.value:g})" for v in violations[:5]
        ]
        more = "" if len(violations) <= 5 else f"\n  ... and {len(violations) - 5} more"
        raise SchemaError(
            f"{path}: {len(violations)} range violation(s):\n" + "\n".join(lines) + more
        )
    return dataset


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_grid(spec: str) -> HyperGrid:
    if spec == "builtin":
        return builtin_grid()
    return HyperGrid.from_json(spec)


# ---------------------------------------------------------------- stages


def _stage_eda(dataset: Dataset, out: Path) -> dict:
    summary = eda_summary(dataset, bins=10)
    _write_json(out / "eda.json", summary.to_dict())
    _write_csv(
        out / "correlation.csv",
        summary.correlation_columns,
        summary.correlation.tolist(),
    )
    return {"eda": "eda.json", "correlation": "correlation.csv"}


def _scale_all(dataset: Dataset):
    scaler = fit_scaler(dataset, list(FEATURE_COLUMNS))
    return scaler, apply_scaler(dataset, scaler)


def _stage_select(scaled: Dataset, seed: int, top_k: int, workers: int, out: Path):
    config = extra_trees_config(n_trees=100, master_seed=seed)
    forest = fit_forest(
        scaled.matrix(),
        scaled.target,
        config,
        feature_names=scaled.feature_names,
        workers=workers,
    )
    ranking = feature_importances(forest)
    selected = select_top_k(ranking, top_k)
    _write_json(out / "importances.json", ranking.to_dict())
    _write_json(out / "selected.json", {"features": selected, "top_k": top_k, "seed": seed})
    return ranking, selected


def _load_selected(out: Path) -> list[str] | None:
    path = out / "selected.json"
    if not path.exists():
        return None
    with open(path) as fh:
        return json.load(fh)["features"]


def _stage_tune(split, features, grid: HyperGrid, metric: str, seed: int,
                workers: int, out: Path):
    train = (split.train.matrix(features), split.train.target)
    validation = (split.test.matrix(features), split.test.target)
    base = random_forest_config(n_trees=100, master_seed=seed)
    if any(name == "criterion" and None in values for name, values in grid.parameters):
        _status("note: criterion None is treated as an alias for gini")
    result = grid_search_forests(grid, train, validation, metric, base, workers=workers)
    _write_json(out / "tune.json", result.to_dict())
    n_skipped = sum(1 for t in result.trials if t.skipped)
    _status(
        f"tune: {len(result.trials)} trials ({n_skipped} skipped), "
        f"best {metric}={result.best_metric_value:.4f}"
    )
    return result


def _stage_train(split, features, combo: dict, scaler: ScalerParams, seed: int,
                 test_fraction: float, workers: int, out: Path) -> Forest:
    tree_cfg = tree_config_from_combo(combo)
    config = ForestConfig(kind=RANDOM_FOREST, n_trees=100, tree=tree_cfg,
                          master_seed=seed)
    forest = fit_forest(
        split.train.matrix(features),
        split.train.target,
        config,
        feature_names=features,
        workers=workers,
    )
    model = {
        "format": MODEL_FORMAT,
        "toolkit_version": __version__,
        "hyperparameters": combo,
        "features": features,
        "scaler": {name: scaler.to_dict()[name] for name in features},
        "seed": seed,
        "test_fraction": test_fraction,
        "forest": forest.to_dict(),
    }
    _write_json(out / "model.json", model)
    return forest


def _stage_evaluate(forest: Forest, split, features, out: Path) -> dict:
    X_test = split.test.matrix(features)
    y_test = split.test.target
    predictions = predict(forest, X_test)
    scores = predict_proba(forest, X_test)[:, 1]
    cm = confusion_matrix(y_test, predictions)
    report = full_report(cm)
    curve = roc_curve(y_test, scores)
    report_doc = {
        "fractional": report.to_dict(),
        "percent": report.to_percent_dict(),
        "roc_curve_auc": {
            "fractional": curve.auc,
            "percent": round(100.0 * curve.auc, 2),
        },
    }
    undefined = report_doc["fractional"].pop("undefined")
    report_doc["undefined"] = undefined
    _write_json(out / "report.json", report_doc)
    _write_json(out / "confusion.json", cm.to_dict())
    _write_csv(out / "roc.csv", ["fpr", "tpr"], curve.points)
    _status(
        f"evaluate: accuracy={report.accuracy:.4f} on {cm.n} test rows "
        f"(tp={cm.tp} fp={cm.fp} fn={cm.fn} tn={cm.tn})"
    )
    return {"report": report_doc, "confusion": cm.to_dict()}


# ---------------------------------------------------------------- commands


def cmd_eda(args) -> int:
    out = _outdir(args)
    dataset = _load_checked(args.data)
    _stage_eda(dataset, out)
    _status(f"eda: wrote eda.json and correlation.csv to {out}")
    return EXIT_OK


def cmd_select(args) -> int:
    out = _outdir(args)
    dataset = _load_checked(args.data)
    _, scaled = _scale_all(dataset)
    _, selected = _stage_select(scaled, args.seed, args.top_k, args.workers, out)
    _status(f"select: top-{args.top_k} features: {', '.join(selected)}")
    return EXIT_OK


def cmd_tune(args) -> int:
    out = _outdir(args)
    dataset = _load_checked(args.data)
    _, scaled = _scale_all(dataset)
    features = _load_selected(out)
    if features is None:
        _, features = _stage_select(scaled, args.seed, args.top_k, args.workers, out)
    split = stratified_split(scaled.restrict(features), args.test_fraction, args.seed)
    grid = _resolve_grid(args.grid)
    _stage_tune(split, features, grid, args.metric, args.seed, args.workers, out)
    return EXIT_OK


def _resolve_combo(args, out: Path) -> dict:
    if args.preset is not None:
        return dict(PRESETS[args.preset])
    tune_path = out / "tune.json"
    if tune_path.exists():
        with open(tune_path) as fh:
            return json.load(fh)["best_combo"]
    raise _UsageError(
        "no hyperparameters: pass --preset paper-tuned or run `tune` first"
    )


def cmd_train(args) -> int:
    out = _outdir(args)
    dataset = _load_checked(args.data)
    scaler, scaled = _scale_all(dataset)
    features = _load_selected(out)
    if features is None:
        _, features = _stage_select(scaled, args.seed, args.top_k, args.workers, out)
    combo = _resolve_combo(args, out)
    split = stratified_split(scaled.restrict(features), args.test_fraction, args.seed)
    _stage_train(split, features, combo, scaler, args.seed, args.test_fraction,
                 args.workers, out)
    _status(f"train: wrote model.json to {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = _outdir(args)
    model_path = Path(args.model) if args.model else out / "model.json"
    if not model_path.exists():
        raise FileNotFoundError(f"model file not found: {model_path}")
    with open(model_path) as fh:
        model = json.load(fh)
    if model.get("format") != MODEL_FORMAT:
        raise SchemaError(f"unsupported model format {model.get('format')!r}")
    for key in ("forest", "scaler", "seed", "test_fraction"):
        if key not in model:
            raise SchemaError(f"model file lacks required field {key!r}")
    forest = Forest.from_dict(model["forest"])
    features = model.get("features")

    dataset = _load_checked(args.data)
    if features is None:
        if len(dataset.feature_names) != forest.n_features:
            raise SchemaError(
                f"model has no feature metadata and expects {forest.n_features} "
                f"columns; dataset has {len(dataset.feature_names)}"
            )
        features = dataset.feature_names
    missing = [f for f in features if f not in dataset.columns]
    if missing:
        raise SchemaError(f"dataset lacks model features: {', '.join(missing)}")

    scaled = apply_scaler(dataset, ScalerParams.from_dict(model["scaler"]))
    split = stratified_split(
        scaled.restrict(features), model["test_fraction"], model["seed"]
    )
    _stage_evaluate(forest, split, features, out)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    out = _outdir(args)
    timings: dict[str, float] = {}
    artifacts: dict[str, str] = {}

    t = time.perf_counter()
    dataset = _load_checked(args.data)
    timings["load"] = time.perf_counter() - t

    t = time.perf_counter()
    artifacts.update(_stage_eda(dataset, out))
    timings["eda"] = time.perf_counter() - t

    t = time.perf_counter()
    scaler, scaled = _scale_all(dataset)
    timings["scale"] = time.perf_counter() - t

    t = time.perf_counter()
    ranking, features = _stage_select(scaled, args.seed, args.top_k, args.workers, out)
    artifacts["importances"] = "importances.json"
    artifacts["selected"] = "selected.json"
    timings["select"] = time.perf_counter() - t
    _status(f"select: top-{args.top_k} features: {', '.join(features)}")

    t = time.perf_counter()
    split = stratified_split(scaled.restrict(features), args.test_fraction, args.seed)
    timings["split"] = time.perf_counter() - t

    tune_result = None
    if args.preset is not None:
        combo = dict(PRESETS[args.preset])
    else:
        t = time.perf_counter()
        grid = _resolve_grid(args.grid)
        tune_result = _stage_tune(split, features, grid, args.metric, args.seed,
                                  args.workers, out)
        artifacts["tune"] = "tune.json"
        timings["tune"] = time.perf_counter() - t
        combo = tune_result.best_combo

    t = time.perf_counter()
    forest = _stage_train(split, features, combo, scaler, args.seed,
                          args.test_fraction, args.workers, out)
    artifacts["model"] = "model.json"
    timings["train"] = time.perf_counter() - t

    t = time.perf_counter()
    evaluation = _stage_evaluate(forest, split, features, out)
    artifacts["report"] = "report.json"
    artifacts["confusion"] = "confusion.json"
    artifacts["roc"] = "roc.csv"
    timings["evaluate"] = time.perf_counter() - t

    run_report = {
        "toolkit_version": __version__,
        "config": {
            "data": str(args.data),
            "out": str(args.out),
            "seed": args.seed,
            "test_fraction": args.test_fraction,
            "top_k": args.top_k,
            "grid": args.grid,
            "preset": args.preset,
            "metric": args.metric,
            "workers": args.workers,
        },
        "artifacts": artifacts,
        "selected_features": features,
        "hyperparameters": combo,
        "metrics": evaluation["report"],
        "confusion": evaluation["confusion"],
        "timings_s": timings,
    }
    _write_json(out / "run_report.json", run_report)
    _status(f"pipeline: artifacts in {out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hfsurvival",
        description="Heart-failure survival prediction pipeline "
        "(standardize, rank features, tune, train, evaluate).",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data", required=True, help="path to the clinical-records CSV")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
        p.add_argument("--test-fraction", type=float, default=0.2,
                       help="held-out fraction (default: 0.2)")
        p.add_argument("--top-k", type=int, default=4,
                       help="features kept after ranking (default: 4)")
        p.add_argument("--grid", default="builtin",
                       help="'builtin' or a grid JSON file (default: builtin)")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="use published hyperparameters instead of tuning")
        p.add_argument("--metric", default="accuracy",
                       help="selection metric for tuning (default: accuracy)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel workers for tree fitting (default: 1)")

    for name, func, desc in (
        ("eda", cmd_eda, "write class proportions, histograms, and correlations"),
        ("select", cmd_select, "rank features with extra-trees and keep the top k"),
        ("tune", cmd_tune, "grid-search random-forest hyperparameters"),
        ("train", cmd_train, "fit the random forest and persist the model"),
        ("evaluate", cmd_evaluate, "score a saved model on the test partition"),
        ("pipeline", cmd_pipeline, "run the whole chain end to end"),
    ):
        p = sub.add_parser(name, help=desc, description=desc)
        common(p)
        if name == "evaluate":
            p.add_argument("--model", help="model file (default: <out>/model.json)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, InvalidGridError, InvalidCombinationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NoViableCombinationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, HfSurvivalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
