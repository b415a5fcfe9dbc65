"""Bagged random forests and full-sample extra-trees ensembles.

Per-tree randomness derives from a splittable mix of (master_seed, tree
index), so fitting is reproducible and independent of worker count or
scheduling order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateClassError, SchemaError
from .tree import DecisionTree, TreeConfig, EXHAUSTIVE, RANDOM, _grow

RANDOM_FOREST = "random_forest"
EXTRA_TREES = "extra_trees"

FOREST_FORMAT = "hfsurvival-forest/1"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, index: int) -> int:
    """SplitMix64 mix of (master_seed, index): per-tree seeds that are
    independent of fitting order."""
    z = ((master_seed & _MASK64) + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class ForestConfig:
    """Ensemble kind plus the per-tree growth config.

    random_forest: exhaustive splits on bootstrap resamples.
    extra_trees: random-threshold splits on the full sample.
    """

    kind: str
    n_trees: int = 100
    tree: TreeConfig = TreeConfig()
    master_seed: int = 0

    def __post_init__(self):
        if self.kind not in (RANDOM_FOREST, EXTRA_TREES):
            raise ValueError(f"unknown forest kind {self.kind!r}")
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        expected = EXHAUSTIVE if self.kind == RANDOM_FOREST else RANDOM
        if self.tree.split_mode != expected:
            raise ValueError(
                f"{self.kind} requires split_mode {expected!r}, got {self.tree.split_mode!r}"
            )

    @property
    def bootstrap(self) -> bool:
        return self.kind == RANDOM_FOREST

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_trees": self.n_trees,
            "tree": self.tree.to_dict(),
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestConfig":
        return cls(
            kind=d["kind"],
            n_trees=int(d["n_trees"]),
            tree=TreeConfig.from_dict(d["tree"]),
            master_seed=int(d["master_seed"]),
        )


def random_forest_config(n_trees: int = 100, master_seed: int = 0, **tree_kwargs) -> ForestConfig:
    tree_kwargs.setdefault("split_mode", EXHAUSTIVE)
    return ForestConfig(
        kind=RANDOM_FOREST, n_trees=n_trees, master_seed=master_seed,
        tree=TreeConfig(**tree_kwargs),
    )


def extra_trees_config(n_trees: int = 100, master_seed: int = 0, **tree_kwargs) -> ForestConfig:
    tree_kwargs.setdefault("split_mode", RANDOM)
    return ForestConfig(
        kind=EXTRA_TREES, n_trees=n_trees, master_seed=master_seed,
        tree=TreeConfig(**tree_kwargs),
    )


def default_max_features(n_features: int) -> int:
    return max(1, int(math.floor(math.sqrt(n_features))))


@dataclass
class Forest:
    trees: list[DecisionTree]
    config: ForestConfig
    feature_names: list[str] | None

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def to_dict(self) -> dict:
        return {
            "format": FOREST_FORMAT,
            "config": self.config.to_dict(),
            "feature_names": self.feature_names,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        if d.get("format") != FOREST_FORMAT:
            raise SchemaError(f"unsupported forest format {d.get('format')!r}")
        return cls(
            trees=[DecisionTree.from_dict(t) for t in d["trees"]],
            config=ForestConfig.from_dict(d["config"]),
            feature_names=d.get("feature_names"),
        )


@dataclass(frozen=True)
class ImportanceRanking:
    """(feature name, importance) pairs sorted descending, name tie-break."""

    entries: tuple[tuple[str, float], ...]

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]

    @property
    def importances(self) -> list[float]:
        return [value for _, value in self.entries]

    def to_dict(self) -> dict:
        return {"ranking": [{"feature": n, "importance": v} for n, v in self.entries]}


def _fit_one(args):
    X, y, tree_cfg, bootstrap, seed = args
    rng = np.random.default_rng(seed)
    if bootstrap:
        idx = rng.integers(0, X.shape[0], size=X.shape[0])
        X, y = X[idx], y[idx]
    return _grow(X, y, tree_cfg, rng, seed)


def fit_forest(X, y, config: ForestConfig, feature_names: list[str] | None = None,
               workers: int = 1) -> Forest:
    """Fit n_trees trees, each from its own derived seed.

    Bootstrap indices (random_forest only) come from the tree's own PRNG
    stream, drawn before growth, so the result is identical at any worker
    count.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if np.count_nonzero(y == 1) == 0 or np.count_nonzero(y == 0) == 0:
        raise DegenerateClassError("training data must contain both classes")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise SchemaError(
            f"{len(feature_names)} feature names for {X.shape[1]} columns"
        )

    tree_cfg = config.tree
    if tree_cfg.max_features is None:
        tree_cfg = replace(tree_cfg, max_features=default_max_features(X.shape[1]))

    tasks = [
        (X, y, tree_cfg, config.bootstrap, derive_seed(config.master_seed, i))
        for i in range(config.n_trees)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(_fit_one, tasks, chunksize=max(1, len(tasks) // (workers * 4))))
    else:
        trees = [_fit_one(t) for t in tasks]
    return Forest(trees=trees, config=config,
                  feature_names=list(feature_names) if feature_names is not None else None)


def predict_proba(forest: Forest, X) -> np.ndarray:
    """Unweighted mean of the per-tree probability pairs, one row per input."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    acc = np.zeros((X.shape[0], 2))
    for tree in forest.trees:
        acc += tree.predict_proba(X)
    return acc / len(forest.trees)


def predict(forest: Forest, X) -> np.ndarray:
    """Argmax of the averaged probabilities; an exact 0.5 tie predicts 1
    (death event), the conservative call for a clinical screen."""
    proba = predict_proba(forest, X)
    return (proba[:, 1] >= proba[:, 0]).astype(int)


def feature_importances(forest: Forest) -> ImportanceRanking:
    """Mean of per-tree impurity importances, normalized to sum 1 (an
    all-zero vector stays all-zero)."""
    total = np.zeros(forest.n_features)
    for tree in forest.trees:
        total += tree.feature_importances()
    mean = total / len(forest.trees)
    s = mean.sum()
    if s > 0.0:
        mean = mean / s
    names = forest.feature_names
    if names is None:
        names = [f"feature_{i}" for i in range(forest.n_features)]
    entries = sorted(zip(names, mean.tolist()), key=lambda e: (-e[1], e[0]))
    return ImportanceRanking(entries=tuple(entries))


def select_top_k(ranking: ImportanceRanking, k: int) -> list[str]:
    """First k names of the ranking, order preserved."""
    if not 1 <= k <= len(ranking.entries):
        raise ValueError(f"k must lie in [1, {len(ranking.entries)}], got {k}")
    return ranking.names[:k]
