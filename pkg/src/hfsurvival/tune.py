"""Exhaustive grid search: Cartesian combination generation, per-combination
train/evaluate on a fixed validation split, strict-greater best tracking.

Combinations that cannot form a valid model config are skipped (logged with a
reason, never selected); the first combination in generation order wins ties.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import metrics as _metrics
from .ensemble import ForestConfig, fit_forest, predict
from .errors import (
    EmptyInputError,
    InvalidCombinationError,
    InvalidGridError,
    NoViableCombinationError,
)
from .tree import TreeConfig, resolve_criterion


@dataclass(frozen=True)
class HyperGrid:
    """Ordered mapping of parameter name to its finite value list."""

    parameters: tuple[tuple[str, tuple], ...]

    def __post_init__(self):
        names = [name for name, _ in self.parameters]
        if not names:
            raise InvalidGridError("grid has no parameters")
        if len(set(names)) != len(names):
            raise InvalidGridError("duplicate parameter names in grid")
        for name, values in self.parameters:
            if len(values) == 0:
                raise InvalidGridError(f"parameter {name!r} has an empty value list")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.parameters]

    def size(self) -> int:
        out = 1
        for _, values in self.parameters:
            out *= len(values)
        return out

    def to_dict(self) -> dict:
        return {
            "order": self.names,
            "parameters": {name: list(values) for name, values in self.parameters},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperGrid":
        params = d.get("parameters")
        if not isinstance(params, dict):
            raise InvalidGridError("grid file needs a 'parameters' object")
        order = d.get("order", list(params.keys()))
        if sorted(order) != sorted(params.keys()):
            raise InvalidGridError("'order' must list every parameter exactly once")
        return cls(parameters=tuple((name, tuple(params[name])) for name in order))

    @classmethod
    def from_json(cls, path) -> "HyperGrid":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def generate_combinations(grid: HyperGrid) -> list[dict]:
    """Full Cartesian product in lexicographic order of the grid's parameter
    order and value order."""
    names = grid.names
    value_lists = [values for _, values in grid.parameters]
    return [dict(zip(names, combo)) for combo in itertools.product(*value_lists)]


@dataclass
class Trial:
    combo: dict
    metric_value: float | None
    skipped: bool = False
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "combo": self.combo,
            "metric_value": self.metric_value,
            "skipped": self.skipped,
            "reason": self.reason,
        }


@dataclass
class TuneResult:
    best_combo: dict
    best_metric_value: float
    trials: list[Trial]

    def to_dict(self) -> dict:
        return {
            "best_combo": self.best_combo,
            "best_metric_value": self.best_metric_value,
            "n_trials": len(self.trials),
            "n_skipped": sum(1 for t in self.trials if t.skipped),
            "trials": [t.to_dict() for t in self.trials],
        }


def grid_search(grid: HyperGrid, train, validation, metric, model_factory) -> TuneResult:
    """Fit and score every combination; return the strict-greater best.

    train and validation are (X, y) pairs. metric is a name from
    metrics.SUPPORTED_METRICS or a callable(y_true, y_pred) -> float
    (maximized). model_factory(combo) returns an object with fit(X, y) and
    predict(X); it may raise InvalidCombinationError to skip the combination.
    """
    X_train, y_train = train
    X_val, y_val = validation
    X_val = np.asarray(X_val)
    y_val = np.asarray(y_val)
    if y_val.shape[0] == 0:
        raise EmptyInputError("validation set is empty")
    if callable(metric):
        evaluate = metric
    else:
        metric_name = metric
        evaluate = lambda yt, yp: _metrics.score(metric_name, yt, yp)

    trials: list[Trial] = []
    best_combo = None
    best_value = -float("inf")
    for combo in generate_combinations(grid):
        try:
            model = model_factory(combo)
        except InvalidCombinationError as exc:
            trials.append(Trial(combo=combo, metric_value=None, skipped=True, reason=str(exc)))
            continue
        model.fit(X_train, y_train)
        value = float(evaluate(y_val, model.predict(X_val)))
        trials.append(Trial(combo=combo, metric_value=value))
        if value > best_value:
            best_value = value
            best_combo = combo

    if best_combo is None:
        raise NoViableCombinationError(
            f"all {len(trials)} combinations were skipped; see the trial log"
        )
    return TuneResult(best_combo=best_combo, best_metric_value=best_value, trials=trials)


def tree_config_from_combo(combo: dict, base: TreeConfig = TreeConfig()) -> TreeConfig:
    """Translate a grid combination into a TreeConfig.

    Recognized keys: max_depth, min_samples_split, criterion (None aliases
    gini), max_leaf_nodes, class_weights. Raises InvalidCombinationError for
    values that cannot configure a classifier (e.g. max_leaf_nodes < 2).
    """
    cfg = base
    if "criterion" in combo:
        cfg = replace(cfg, criterion=resolve_criterion(combo["criterion"]))
    if "max_depth" in combo:
        cfg = replace(cfg, max_depth=int(combo["max_depth"]))
    if "min_samples_split" in combo:
        cfg = replace(cfg, min_samples_split=float(combo["min_samples_split"]))
    if "max_leaf_nodes" in combo:
        cfg = replace(cfg, max_leaf_nodes=int(combo["max_leaf_nodes"]))
    if "class_weights" in combo:
        cw = combo["class_weights"]
        if cw is not None and cw != "balanced":
            raise InvalidCombinationError(f"unknown class_weights value {cw!r}")
        cfg = replace(cfg, class_weights=cw)
    cfg.validate()
    return cfg


class ForestModel:
    """fit/predict adapter over a ForestConfig, for grid_search factories."""

    def __init__(self, config: ForestConfig, workers: int = 1):
        self.config = config
        self.workers = workers
        self.forest = None

    def fit(self, X, y):
        self.forest = fit_forest(X, y, self.config, workers=self.workers)
        return self

    def predict(self, X):
        return predict(self.forest, X)


def forest_factory(base: ForestConfig, workers: int = 1):
    """model_factory building forests whose tree config comes from the combo.

    Every trial reuses the base master_seed, so combinations differ only in
    their hyperparameters.
    """

    def make(combo: dict) -> ForestModel:
        tree_cfg = tree_config_from_combo(combo, base.tree)
        return ForestModel(replace(base, tree=tree_cfg), workers=workers)

    return make


def _evaluate_forest_combo(args):
    combo, base, train, validation, metric = args
    try:
        config = replace(base, tree=tree_config_from_combo(combo, base.tree))
    except InvalidCombinationError as exc:
        return (None, str(exc))
    X_train, y_train = train
    X_val, y_val = validation
    forest = fit_forest(X_train, y_train, config)
    if callable(metric):
        value = metric(y_val, predict(forest, X_val))
    else:
        value = _metrics.score(metric, y_val, predict(forest, X_val))
    return (float(value), None)


def grid_search_forests(grid: HyperGrid, train, validation, metric,
                        base: ForestConfig, workers: int = 1) -> TuneResult:
    """grid_search specialized to forest models, with trials evaluated in a
    process pool. Results reduce in generation order, so the outcome is
    identical to the sequential search at any worker count.
    """
    if workers <= 1:
        return grid_search(grid, train, validation, metric,
                           forest_factory(base, workers=1))
    X_val, y_val = validation
    if np.asarray(y_val).shape[0] == 0:
        raise EmptyInputError("validation set is empty")
    combos = generate_combinations(grid)
    tasks = [(combo, base, train, validation, metric) for combo in combos]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(_evaluate_forest_combo, tasks,
                                 chunksize=max(1, len(tasks) // (workers * 8))))
    trials = []
    best_combo = None
    best_value = -float("inf")
    for combo, (value, reason) in zip(combos, outcomes):
        if value is None:
            trials.append(Trial(combo=combo, metric_value=None, skipped=True, reason=reason))
            continue
        trials.append(Trial(combo=combo, metric_value=value))
        if value > best_value:
            best_value = value
            best_combo = combo
    if best_combo is None:
        raise NoViableCombinationError(
            f"all {len(trials)} combinations were skipped; see the trial log"
        )
    return TuneResult(best_combo=best_combo, best_metric_value=best_value, trials=trials)
