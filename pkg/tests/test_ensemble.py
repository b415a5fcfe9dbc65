import json

import numpy as np
import pytest

from hfsurvival import (
    Forest,
    ForestConfig,
    TreeConfig,
    derive_seed,
    extra_trees_config,
    feature_importances,
    fit_forest,
    fit_tree,
    predict,
    predict_proba,
    random_forest_config,
    select_top_k,
)
from hfsurvival.errors import DegenerateClassError, SchemaError
from hfsurvival.tree import DecisionTree, TreeNode


def leaf_tree(proba, n_features=2):
    return DecisionTree(
        nodes=[TreeNode(proba=proba, fraction=1.0)],
        depth=0,
        n_features=n_features,
        config=TreeConfig(),
        seed=0,
    )


def forest_of(trees, names=None):
    return Forest(trees=trees, config=extra_trees_config(n_trees=len(trees)),
                  feature_names=names)


def blob_data(seed, n=120):
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([rng.normal(0.0, 1.4, size=(half, 3)),
                   rng.normal(1.2, 1.4, size=(n - half, 3))])
    y = np.array([0] * half + [1] * (n - half))
    perm = rng.permutation(n)
    return X[perm], y[perm]


class TestConfig:
    def test_kind_forces_split_mode(self):
        with pytest.raises(ValueError):
            ForestConfig(kind="random_forest", tree=TreeConfig(split_mode="random"))
        with pytest.raises(ValueError):
            ForestConfig(kind="extra_trees", tree=TreeConfig(split_mode="exhaustive"))

    def test_bootstrap_flag(self):
        assert random_forest_config().bootstrap is True
        assert extra_trees_config().bootstrap is False

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ForestConfig(kind="gradient_boosting")


class TestSeedDerivation:
    def test_deterministic(self):
        assert derive_seed(0, 0) == derive_seed(0, 0)

    def test_distinct_across_indices(self):
        seeds = {derive_seed(0, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_distinct_across_masters(self):
        assert derive_seed(0, 0) != derive_seed(1, 0)

    def test_negative_master_handled(self):
        assert derive_seed(-5, 3) >= 0


class TestFit:
    def test_single_tree_forest_predicts_like_its_tree(self):
        X, y = blob_data(0, 40)
        tree = fit_tree(X, y, TreeConfig(max_leaf_nodes=4), seed=0)
        forest = forest_of([tree])
        probe = X[:10]
        assert np.array_equal(predict_proba(forest, probe), tree.predict_proba(probe))

    def test_refit_is_identical(self):
        X, y = blob_data(1, 60)
        config = random_forest_config(n_trees=12, master_seed=7)
        a = fit_forest(X, y, config)
        b = fit_forest(X, y, config)
        assert a.to_dict() == b.to_dict()

    def test_master_seed_changes_forest(self):
        X, y = blob_data(1, 60)
        a = fit_forest(X, y, random_forest_config(n_trees=5, master_seed=0))
        b = fit_forest(X, y, random_forest_config(n_trees=5, master_seed=1))
        assert a.to_dict() != b.to_dict()

    def test_worker_count_does_not_change_result(self):
        X, y = blob_data(2, 80)
        config = extra_trees_config(n_trees=8, master_seed=3)
        serial = fit_forest(X, y, config, workers=1)
        parallel = fit_forest(X, y, config, workers=4)
        assert serial.to_dict() == parallel.to_dict()

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        with pytest.raises(DegenerateClassError):
            fit_forest(X, np.zeros(10, dtype=int), random_forest_config(n_trees=2))

    def test_feature_name_length_checked(self):
        X, y = blob_data(3, 30)
        with pytest.raises(SchemaError):
            fit_forest(X, y, random_forest_config(n_trees=2), feature_names=["a"])

    def test_default_max_features_is_sqrt(self):
        X, y = blob_data(4, 50)
        forest = fit_forest(X, y, random_forest_config(n_trees=2))
        assert forest.trees[0].config.max_features == 1  # floor(sqrt(3))

    def test_bootstrap_differs_from_full_sample(self):
        # same per-tree seeds, but RF resamples: trees must differ from an
        # exhaustive full-sample fit
        X, y = blob_data(5, 60)
        rf = fit_forest(X, y, random_forest_config(n_trees=1, master_seed=0))
        full = fit_tree(X, y, rf.trees[0].config, seed=rf.trees[0].seed)
        assert rf.trees[0].to_dict() != full.to_dict()


class TestPredict:
    def test_mean_of_two_opposite_leaves(self):
        forest = forest_of([leaf_tree((1.0, 0.0)), leaf_tree((0.0, 1.0))])
        assert predict_proba(forest, [[0.0, 0.0]]).tolist() == [[0.5, 0.5]]

    def test_unanimous_trees(self):
        forest = forest_of([leaf_tree((1.0, 0.0))] * 3)
        assert predict_proba(forest, [[0.0, 0.0]]).tolist() == [[1.0, 0.0]]

    def test_two_to_one_mean(self):
        forest = forest_of([leaf_tree((1.0, 0.0)), leaf_tree((1.0, 0.0)), leaf_tree((0.0, 1.0))])
        proba = predict_proba(forest, [[0.0, 0.0]])[0]
        assert proba[0] == pytest.approx(2 / 3)
        assert proba[1] == pytest.approx(1 / 3)

    def test_argmax_labels(self):
        assert predict(forest_of([leaf_tree((0.9, 0.1))]), [[0.0, 0.0]]).tolist() == [0]
        assert predict(forest_of([leaf_tree((0.2, 0.8))]), [[0.0, 0.0]]).tolist() == [1]

    def test_exact_tie_predicts_death_event(self):
        forest = forest_of([leaf_tree((0.5, 0.5))])
        assert predict(forest, [[0.0, 0.0]]).tolist() == [1]

    def test_probabilities_sum_to_one(self):
        X, y = blob_data(6, 80)
        forest = fit_forest(X, y, random_forest_config(n_trees=9, master_seed=2))
        proba = predict_proba(forest, X)
        assert np.max(np.abs(proba.sum(axis=1) - 1.0)) < 1e-12

    def test_convex_combination_of_tree_outputs(self):
        X, y = blob_data(7, 60)
        forest = fit_forest(X, y, extra_trees_config(n_trees=7, master_seed=1))
        per_tree = np.stack([t.predict_proba(X) for t in forest.trees])
        mean = predict_proba(forest, X)
        assert (mean >= per_tree.min(axis=0) - 1e-12).all()
        assert (mean <= per_tree.max(axis=0) + 1e-12).all()


class TestImportances:
    def test_forest_of_lone_leaves_is_all_zero(self):
        forest = forest_of([leaf_tree((1.0, 0.0))] * 2, names=["a", "b"])
        ranking = feature_importances(forest)
        assert ranking.importances == [0.0, 0.0]

    def test_single_stump_normalizes_to_one(self):
        X = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]])
        y = np.array([0, 0, 1, 1])
        tree = fit_tree(X, y, TreeConfig(max_depth=1, max_leaf_nodes=2), seed=0)
        ranking = feature_importances(forest_of([tree], names=["split_on", "ignored"]))
        assert ranking.entries[0] == ("split_on", 1.0)
        assert ranking.entries[1] == ("ignored", 0.0)

    def test_sum_to_one_when_any_split_exists(self):
        X, y = blob_data(8, 90)
        forest = fit_forest(X, y, extra_trees_config(n_trees=15, master_seed=4),
                            feature_names=["f0", "f1", "f2"])
        ranking = feature_importances(forest)
        assert sum(ranking.importances) == pytest.approx(1.0, abs=1e-9)
        assert all(v >= 0.0 for v in ranking.importances)

    def test_sorted_descending_with_name_tie_break(self):
        forest = forest_of([leaf_tree((1.0, 0.0), n_features=3)], names=["c", "a", "b"])
        ranking = feature_importances(forest)
        assert ranking.names == ["a", "b", "c"]  # all-zero: name order decides


class TestSelectTopK:
    def test_all_features(self):
        ranking = feature_importances(forest_of([leaf_tree((1.0, 0.0))], names=["x", "y"]))
        assert select_top_k(ranking, 2) == ["x", "y"]

    def test_k_one_on_single_stump(self):
        X = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]])
        y = np.array([0, 0, 1, 1])
        tree = fit_tree(X, y, TreeConfig(max_depth=1, max_leaf_nodes=2), seed=0)
        ranking = feature_importances(forest_of([tree], names=["j", "other"]))
        assert select_top_k(ranking, 1) == ["j"]

    def test_k_out_of_range(self):
        ranking = feature_importances(forest_of([leaf_tree((1.0, 0.0))], names=["x", "y"]))
        with pytest.raises(ValueError):
            select_top_k(ranking, 0)
        with pytest.raises(ValueError):
            select_top_k(ranking, 3)


class TestSerialization:
    def test_round_trip_bit_exact(self):
        X, y = blob_data(9, 70)
        forest = fit_forest(X, y, random_forest_config(n_trees=6, master_seed=11),
                            feature_names=["f0", "f1", "f2"])
        doc = json.loads(json.dumps(forest.to_dict()))
        restored = Forest.from_dict(doc)
        assert restored.to_dict() == forest.to_dict()
        probe = X[:15]
        assert np.array_equal(predict_proba(restored, probe), predict_proba(forest, probe))

    def test_format_tag_checked(self):
        X, y = blob_data(9, 30)
        doc = fit_forest(X, y, random_forest_config(n_trees=1)).to_dict()
        doc["format"] = "something-else"
        with pytest.raises(SchemaError):
            Forest.from_dict(doc)


class TestVarianceReduction:
    def test_ensemble_accuracy_range_shrinks(self):
        X_train, y_train = blob_data(20, 150)
        X_test, y_test = blob_data(21, 150)

        def accuracy_range(n_trees):
            accs = []
            for master in range(10):
                cfg = random_forest_config(n_trees=n_trees, master_seed=master,
                                           max_leaf_nodes=8)
                forest = fit_forest(X_train, y_train, cfg)
                accs.append(float((predict(forest, X_test) == y_test).mean()))
            return max(accs) - min(accs)

        assert accuracy_range(100) <= accuracy_range(1)
