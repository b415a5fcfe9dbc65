"""Binary-classification decision trees: impurity measures, exhaustive and
extremely-randomized split search, best-first growth, and per-tree
impurity-based feature importances.

Sample weighting convention: every impurity and probability is computed on
class-weighted sample mass (weight * count). Uniform weights (1, 1) reduce to
plain counts.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClassError, EmptyInputError, InvalidCombinationError

GINI = "gini"
ENTROPY = "entropy"
EXHAUSTIVE = "exhaustive"
RANDOM = "random"


def gini_impurity(p) -> float:
    """Sum of p_i * (1 - p_i) over the class-probability pair."""
    p0, p1 = float(p[0]), float(p[1])
    return p0 * (1.0 - p0) + p1 * (1.0 - p1)


def entropy_impurity(p) -> float:
    """Shannon entropy in bits, with 0 * log(0) taken as 0."""
    out = 0.0
    for v in (float(p[0]), float(p[1])):
        if v > 0.0:
            out -= v * math.log2(v)
    return out


_SCALAR_IMPURITY = {GINI: gini_impurity, ENTROPY: entropy_impurity}


def balanced_class_weights(counts) -> tuple[float, float]:
    """Weights n / (2 * n_c) per class, computed on the fitting sample.

    `counts` maps label -> count (or is an indexable pair).
    """
    n0, n1 = int(counts[0]), int(counts[1])
    if n0 <= 0 or n1 <= 0:
        raise DegenerateClassError(
            f"balanced weights need both classes, got counts {{0: {n0}, 1: {n1}}}"
        )
    n = n0 + n1
    return (n / (2.0 * n0), n / (2.0 * n1))


@dataclass(frozen=True)
class TreeConfig:
    """Growth limits and split-search behaviour for one tree.

    min_samples_split is a fraction of the root sample count; it converts to
    the absolute threshold max(2, ceil(fraction * n_root)). max_depth and
    max_leaf_nodes may be None for unbounded growth. max_features None means
    all features are candidates at every node.
    """

    criterion: str = GINI
    max_depth: int | None = None
    min_samples_split: float = 0.001
    max_leaf_nodes: int | None = None
    class_weights: str | tuple[float, float] | None = None
    split_mode: str = EXHAUSTIVE
    max_features: int | None = None
    seed: int = 0

    def validate(self) -> None:
        """Raise InvalidCombinationError when the config cannot yield a
        working classifier."""
        if self.criterion not in _SCALAR_IMPURITY:
            raise InvalidCombinationError(f"unknown criterion {self.criterion!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidCombinationError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.max_leaf_nodes is not None and self.max_leaf_nodes < 2:
            raise InvalidCombinationError(
                f"max_leaf_nodes={self.max_leaf_nodes} cannot produce a split"
            )
        if not 0.0 < self.min_samples_split <= 1.0:
            raise InvalidCombinationError(
                f"min_samples_split must lie in (0, 1], got {self.min_samples_split}"
            )
        if self.split_mode not in (EXHAUSTIVE, RANDOM):
            raise InvalidCombinationError(f"unknown split_mode {self.split_mode!r}")
        if self.max_features is not None and self.max_features < 1:
            raise InvalidCombinationError(
                f"max_features must be >= 1, got {self.max_features}"
            )

    def to_dict(self) -> dict:
        cw = self.class_weights
        if isinstance(cw, tuple):
            cw = list(cw)
        return {
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "max_leaf_nodes": self.max_leaf_nodes,
            "class_weights": cw,
            "split_mode": self.split_mode,
            "max_features": self.max_features,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeConfig":
        cw = d.get("class_weights")
        if isinstance(cw, list):
            cw = (float(cw[0]), float(cw[1]))
        return cls(
            criterion=d["criterion"],
            max_depth=d["max_depth"],
            min_samples_split=d["min_samples_split"],
            max_leaf_nodes=d["max_leaf_nodes"],
            class_weights=cw,
            split_mode=d["split_mode"],
            max_features=d["max_features"],
            seed=d.get("seed", 0),
        )


def resolve_criterion(value) -> str:
    """Map a grid criterion value to an implemented one; None aliases gini."""
    if value is None:
        return GINI
    if value in _SCALAR_IMPURITY:
        return value
    raise InvalidCombinationError(f"unknown criterion {value!r}")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    decrease: float  # weighted impurity decrease, always > 0


def _mass_impurity(m0: float, m1: float, criterion: str) -> float:
    total = m0 + m1
    return _SCALAR_IMPURITY[criterion]((m0 / total, m1 / total))


def _impurity_vec(m0, m1, criterion):
    total = m0 + m1
    p0 = m0 / total
    p1 = m1 / total
    if criterion == GINI:
        return p0 * (1.0 - p0) + p1 * (1.0 - p1)
    p0 = np.clip(p0, 0.0, 1.0)
    p1 = np.clip(p1, 0.0, 1.0)
    out = np.zeros_like(p0)
    nz = p0 > 0.0
    out[nz] -= p0[nz] * np.log2(p0[nz])
    nz = p1 > 0.0
    out[nz] -= p1[nz] * np.log2(p1[nz])
    return out


def find_best_split(X, y, candidates, criterion, weights, mode, rng) -> Split | None:
    """Best axis-aligned split of the rows (X, y) over the candidate features.

    Exhaustive mode scans midpoints between consecutive distinct sorted
    values; random mode draws one uniform threshold in (min, max) per
    candidate feature. The winner maximizes the weighted impurity decrease
        parent - (mass_L / mass) * I(L) - (mass_R / mass) * I(R);
    ties break on lowest feature index, then lowest threshold (candidates are
    scanned in ascending index order). Returns None when no split achieves a
    strictly positive decrease.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    w0, w1 = float(weights[0]), float(weights[1])
    n1 = int(np.count_nonzero(y == 1))
    n0 = y.shape[0] - n1
    mass0 = w0 * n0
    mass1 = w1 * n1
    mass = mass0 + mass1
    parent = _mass_impurity(mass0, mass1, criterion)
    if parent <= 0.0:
        return None

    sample_w = np.where(y == 1, w1, w0)
    pos_w = sample_w * y

    best: Split | None = None
    for f in sorted(int(c) for c in candidates):
        x = X[:, f]
        if mode == EXHAUSTIVE:
            order = np.argsort(x, kind="stable")
            xs = x[order]
            cum_t = np.cumsum(sample_w[order])
            cum_1 = np.cumsum(pos_w[order])
            cuts = np.nonzero(xs[1:] > xs[:-1])[0]  # split after position k
            if cuts.size == 0:
                continue
            left_t = cum_t[cuts]
            left_1 = cum_1[cuts]
            left_0 = left_t - left_1
            right_1 = mass1 - left_1
            right_0 = mass0 - left_0
            right_t = mass - left_t
            deltas = (
                parent
                - (left_t / mass) * _impurity_vec(left_0, left_1, criterion)
                - (right_t / mass) * _impurity_vec(right_0, right_1, criterion)
            )
            k = int(np.argmax(deltas))  # first occurrence = lowest threshold
            delta = float(deltas[k])
            if delta <= 0.0:
                continue
            threshold = float((xs[cuts[k]] + xs[cuts[k] + 1]) / 2.0)
        else:
            lo, hi = float(x.min()), float(x.max())
            if lo >= hi:
                continue
            threshold = float(rng.uniform(lo, hi))
            left = x <= threshold
            l1 = float(pos_w[left].sum())
            lt = float(sample_w[left].sum())
            l0 = lt - l1
            r1 = mass1 - l1
            r0 = mass0 - l0
            rt = mass - lt
            delta = (
                parent
                - (lt / mass) * _mass_impurity(l0, l1, criterion)
                - (rt / mass) * _mass_impurity(r0, r1, criterion)
            )
            if delta <= 0.0:
                continue
        if best is None or delta > best.decrease:
            best = Split(feature=f, threshold=threshold, decrease=delta)
    return best


@dataclass
class TreeNode:
    """One arena slot: a leaf holds `proba`; an internal node holds the split
    bookkeeping (feature, threshold, children, decrease, mass fraction)."""

    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    decrease: float = 0.0
    fraction: float = 0.0  # class-weighted sample mass / root mass
    proba: tuple[float, float] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.proba is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"proba": list(self.proba)}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "decrease": self.decrease,
            "fraction": self.fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "proba" in d:
            return cls(proba=(float(d["proba"][0]), float(d["proba"][1])))
        return cls(
            feature=int(d["feature"]),
            threshold=float(d["threshold"]),
            left=int(d["left"]),
            right=int(d["right"]),
            decrease=float(d["decrease"]),
            fraction=float(d["fraction"]),
        )


@dataclass
class DecisionTree:
    nodes: list[TreeNode]
    depth: int
    n_features: int
    config: TreeConfig
    seed: int

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.is_leaf)

    def predict_proba_row(self, row) -> tuple[float, float]:
        node = self.nodes[0]
        while not node.is_leaf:
            node = self.nodes[node.left if row[node.feature] <= node.threshold else node.right]
        return node.proba

    def _compiled(self):
        # Flat arrays for vectorized routing; rebuilt on demand, never stored.
        cache = getattr(self, "_compiled_cache", None)
        if cache is None:
            feature = np.array([n.feature for n in self.nodes], dtype=int)
            threshold = np.array([n.threshold for n in self.nodes])
            left = np.array([n.left for n in self.nodes], dtype=int)
            right = np.array([n.right for n in self.nodes], dtype=int)
            is_leaf = np.array([n.is_leaf for n in self.nodes])
            proba = np.array([n.proba if n.is_leaf else (0.0, 0.0) for n in self.nodes])
            cache = (feature, threshold, left, right, is_leaf, proba)
            self._compiled_cache = cache
        return cache

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        feature, threshold, left, right, is_leaf, proba = self._compiled()
        current = np.zeros(X.shape[0], dtype=int)
        while True:
            active = np.nonzero(~is_leaf[current])[0]
            if active.size == 0:
                break
            at = current[active]
            go_left = X[active, feature[at]] <= threshold[at]
            current[active] = np.where(go_left, left[at], right[at])
        return proba[current]

    def feature_importances(self) -> np.ndarray:
        """Per-feature sum of (mass fraction * impurity decrease) over the
        internal nodes splitting on that feature. Not normalized."""
        imp = np.zeros(self.n_features)
        for node in self.nodes:
            if not node.is_leaf:
                imp[node.feature] += node.fraction * node.decrease
        return imp

    def to_dict(self) -> dict:
        return {
            "nodes": [n.to_dict() for n in self.nodes],
            "depth": self.depth,
            "n_features": self.n_features,
            "config": self.config.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            nodes=[TreeNode.from_dict(n) for n in d["nodes"]],
            depth=int(d["depth"]),
            n_features=int(d["n_features"]),
            config=TreeConfig.from_dict(d["config"]),
            seed=int(d.get("seed", 0)),
        )


def _resolve_weights(class_weights, y) -> tuple[float, float]:
    if class_weights is None:
        return (1.0, 1.0)
    if class_weights == "balanced":
        n1 = int(np.count_nonzero(y == 1))
        return balanced_class_weights((y.shape[0] - n1, n1))
    w0, w1 = float(class_weights[0]), float(class_weights[1])
    if w0 <= 0.0 or w1 <= 0.0:
        raise InvalidCombinationError(f"class weights must be positive, got {class_weights}")
    return (w0, w1)


def fit_tree(X, y, config: TreeConfig, seed: int | None = None) -> DecisionTree:
    """Grow a tree best-first until max_leaf_nodes, max_depth, or gain is
    exhausted.

    Expansion order is by largest weighted contribution (mass fraction times
    impurity decrease), so a leaf-count budget prunes the least useful splits
    first. Candidate features at each node are sampled without replacement
    from the seeded PRNG. Deterministic for fixed (X, y, config, seed).
    """
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(seed)
    return _grow(X, y, config, rng, seed)


def _grow(X, y, config: TreeConfig, rng, seed: int) -> DecisionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    n, n_features = X.shape
    if n == 0:
        raise EmptyInputError("cannot fit a tree on zero rows")
    config.validate()

    weights = _resolve_weights(config.class_weights, y)
    w0, w1 = weights
    min_split = max(2, math.ceil(config.min_samples_split * n))
    k_features = n_features if config.max_features is None else min(config.max_features, n_features)
    criterion = config.criterion

    def node_mass(idx) -> tuple[float, float]:
        n1 = int(np.count_nonzero(y[idx] == 1))
        return (w0 * (idx.size - n1), w1 * n1)

    root_idx = np.arange(n)
    root_m0, root_m1 = node_mass(root_idx)
    root_mass = root_m0 + root_m1

    nodes: list[TreeNode] = []
    depth_of: list[int] = []

    def new_leaf(idx, depth) -> int:
        m0, m1 = node_mass(idx)
        total = m0 + m1
        nodes.append(TreeNode(proba=(m0 / total, m1 / total), fraction=total / root_mass))
        depth_of.append(depth)
        return len(nodes) - 1

    def candidate_split(idx, depth):
        """Best split for the leaf, or None if the leaf must stay."""
        if idx.size < min_split:
            return None
        if config.max_depth is not None and depth >= config.max_depth:
            return None
        if k_features < n_features:
            cand = rng.choice(n_features, size=k_features, replace=False)
        else:
            cand = np.arange(n_features)
        return find_best_split(
            X[idx], y[idx], cand, criterion, weights, config.split_mode, rng
        )

    # Heap priority: global improvement = node mass fraction * local decrease.
    # The counter makes tie order deterministic (insertion order).
    heap: list[tuple[float, int, int, Split, np.ndarray]] = []
    counter = 0

    root_id = new_leaf(root_idx, 0)
    split = candidate_split(root_idx, 0)
    if split is not None:
        heapq.heappush(
            heap, (-nodes[root_id].fraction * split.decrease, counter, root_id, split, root_idx)
        )
        counter += 1

    leaf_count = 1
    max_leaves = config.max_leaf_nodes
    while heap and (max_leaves is None or leaf_count < max_leaves):
        _, _, node_id, split, idx = heapq.heappop(heap)
        depth = depth_of[node_id]
        mask = X[idx, split.feature] <= split.threshold
        left_idx = idx[mask]
        right_idx = idx[~mask]

        node = nodes[node_id]
        node.feature = split.feature
        node.threshold = split.threshold
        node.decrease = split.decrease
        node.proba = None
        node.left = new_leaf(left_idx, depth + 1)
        node.right = new_leaf(right_idx, depth + 1)
        leaf_count += 1

        for child_id, child_idx in ((node.left, left_idx), (node.right, right_idx)):
            child_split = candidate_split(child_idx, depth + 1)
            if child_split is not None:
                heapq.heappush(
                    heap,
                    (
                        -nodes[child_id].fraction * child_split.decrease,
                        counter,
                        child_id,
                        child_split,
                        child_idx,
                    ),
                )
                counter += 1

    return DecisionTree(
        nodes=nodes,
        depth=max(depth_of) if depth_of else 0,
        n_features=n_features,
        config=config,
        seed=seed,
    )
