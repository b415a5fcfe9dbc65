import json

import numpy as np
import pytest

from hfsurvival import HyperGrid, generate_combinations, grid_search, tree_config_from_combo
from hfsurvival.ensemble import random_forest_config
from hfsurvival.errors import (
    EmptyInputError,
    InvalidCombinationError,
    InvalidGridError,
    NoViableCombinationError,
)
from hfsurvival.presets import PAPER_TUNED, builtin_grid
from hfsurvival.tune import forest_factory, grid_search_forests


class StubModel:
    """Predicts a constant; lets a callable metric read the combo's score."""

    def __init__(self, value: float):
        self.value = value

    def fit(self, X, y):
        return self

    def predict(self, X):
        return np.full(np.shape(X)[0], self.value)


def stub_factory(score_fn, invalid=None):
    def make(combo):
        if invalid is not None and invalid(combo):
            raise InvalidCombinationError("rejected by stub")
        return StubModel(score_fn(combo))

    return make


FIRST_PREDICTION = lambda y_true, y_pred: float(y_pred[0])

DUMMY_TRAIN = (np.zeros((4, 1)), np.array([0, 1, 0, 1]))
DUMMY_VAL = (np.zeros((3, 1)), np.array([0, 1, 0]))


class TestGenerateCombinations:
    def test_two_by_two_order(self):
        grid = HyperGrid(parameters=(("a", (1, 2)), ("b", ("x", "y"))))
        combos = generate_combinations(grid)
        assert combos == [
            {"a": 1, "b": "x"},
            {"a": 1, "b": "y"},
            {"a": 2, "b": "x"},
            {"a": 2, "b": "y"},
        ]

    def test_single_parameter(self):
        grid = HyperGrid(parameters=(("a", (7,)),))
        assert generate_combinations(grid) == [{"a": 7}]

    def test_builtin_grid_cardinality(self):
        grid = builtin_grid()
        assert grid.size() == 3600  # 10 * 6 * 3 * 10 * 2
        assert len(generate_combinations(grid)) == 3600

    def test_empty_value_list_rejected(self):
        with pytest.raises(InvalidGridError):
            HyperGrid(parameters=(("a", ()),))

    def test_duplicate_names_rejected(self):
        with pytest.raises(InvalidGridError):
            HyperGrid(parameters=(("a", (1,)), ("a", (2,))))

    def test_empty_grid_rejected(self):
        with pytest.raises(InvalidGridError):
            HyperGrid(parameters=())


class TestGridSearch:
    def test_stub_parabola_maximum(self):
        grid = HyperGrid(parameters=(("a", (1, 2, 3, 4, 5)),))
        result = grid_search(
            grid, DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
            stub_factory(lambda c: -((c["a"] - 3) ** 2)),
        )
        assert result.best_combo == {"a": 3}
        assert result.best_metric_value == 0.0

    def test_single_combo(self):
        grid = HyperGrid(parameters=(("a", (7,)),))
        result = grid_search(grid, DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
                             stub_factory(lambda c: 0.25))
        assert result.best_combo == {"a": 7}
        assert result.best_metric_value == 0.25

    def test_tie_keeps_earlier_combo(self):
        grid = HyperGrid(parameters=(("a", (1, 2)),))
        result = grid_search(grid, DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
                             stub_factory(lambda c: 0.5))
        assert result.best_combo == {"a": 1}

    def test_trials_cover_every_combo(self):
        grid = HyperGrid(parameters=(("a", (1, 2, 3)), ("b", (0, 1))))
        result = grid_search(grid, DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
                             stub_factory(lambda c: c["a"] + c["b"]))
        assert len(result.trials) == 6
        assert [t.combo for t in result.trials] == generate_combinations(grid)

    def test_skipped_combos_logged_and_never_best(self):
        grid = HyperGrid(parameters=(("a", (1, 2, 3)),))
        result = grid_search(
            grid, DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
            stub_factory(lambda c: 100.0 if c["a"] == 2 else float(c["a"]),
                         invalid=lambda c: c["a"] == 2),
        )
        assert result.best_combo == {"a": 3}
        skipped = [t for t in result.trials if t.skipped]
        assert len(skipped) == 1
        assert skipped[0].combo == {"a": 2}
        assert "rejected" in skipped[0].reason
        assert skipped[0].metric_value is None

    def test_all_skipped_raises(self):
        grid = HyperGrid(parameters=(("a", (1, 2)),))
        with pytest.raises(NoViableCombinationError):
            grid_search(grid, DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
                        stub_factory(lambda c: 0.0, invalid=lambda c: True))

    def test_best_equals_exhaustive_argmax(self):
        rng = np.random.default_rng(0)
        grid = HyperGrid(parameters=(("a", tuple(range(8))), ("b", tuple(range(7)))))
        table = rng.uniform(0, 1, size=(8, 7))
        result = grid_search(grid, DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
                             stub_factory(lambda c: table[c["a"], c["b"]]))
        assert result.best_metric_value == table.max()
        assert table[result.best_combo["a"], result.best_combo["b"]] == table.max()

    def test_value_permutation_preserves_best_value(self):
        rng = np.random.default_rng(1)
        values = tuple(range(10))
        table = {v: rng.uniform(0, 1) for v in values}
        shuffled = tuple(rng.permutation(values).tolist())
        result_a = grid_search(HyperGrid(parameters=(("a", values),)),
                               DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
                               stub_factory(lambda c: table[c["a"]]))
        result_b = grid_search(HyperGrid(parameters=(("a", shuffled),)),
                               DUMMY_TRAIN, DUMMY_VAL, FIRST_PREDICTION,
                               stub_factory(lambda c: table[c["a"]]))
        assert result_a.best_metric_value == result_b.best_metric_value

    def test_rerun_reproduces_trials_bit_exactly(self):
        X = np.random.default_rng(2).normal(size=(40, 2))
        y = np.random.default_rng(3).integers(0, 2, 40)
        train = (X[:30], y[:30])
        val = (X[30:], y[30:])
        grid = HyperGrid(parameters=(("max_depth", (1, 2)), ("max_leaf_nodes", (2, 3))))
        factory = forest_factory(random_forest_config(n_trees=3, master_seed=0))
        a = grid_search(grid, train, val, "accuracy", factory)
        b = grid_search(grid, train, val, "accuracy", factory)
        assert [t.metric_value for t in a.trials] == [t.metric_value for t in b.trials]
        assert a.best_combo == b.best_combo

    def test_empty_validation_rejected(self):
        grid = HyperGrid(parameters=(("a", (1,)),))
        with pytest.raises(EmptyInputError):
            grid_search(grid, DUMMY_TRAIN, (np.zeros((0, 1)), np.array([], dtype=int)),
                        FIRST_PREDICTION, stub_factory(lambda c: 0.0))

    def test_parallel_forest_search_matches_sequential(self):
        rng = np.random.default_rng(8)
        X = np.vstack([rng.normal(0, 1, (30, 2)), rng.normal(1.5, 1, (30, 2))])
        y = np.array([0] * 30 + [1] * 30)
        train = (X[::2], y[::2])
        val = (X[1::2], y[1::2])
        grid = HyperGrid(parameters=(("max_depth", (1, 2, 3)),
                                     ("max_leaf_nodes", (1, 2, 4))))
        base = random_forest_config(n_trees=4, master_seed=0)
        sequential = grid_search_forests(grid, train, val, "accuracy", base, workers=1)
        parallel = grid_search_forests(grid, train, val, "accuracy", base, workers=3)
        assert [t.to_dict() for t in sequential.trials] == [t.to_dict() for t in parallel.trials]
        assert sequential.best_combo == parallel.best_combo
        assert sequential.best_metric_value == parallel.best_metric_value

    def test_named_metric_with_real_forests(self):
        rng = np.random.default_rng(4)
        X = np.vstack([rng.normal(0, 1, (30, 2)), rng.normal(2, 1, (30, 2))])
        y = np.array([0] * 30 + [1] * 30)
        train = (X[::2], y[::2])
        val = (X[1::2], y[1::2])
        grid = HyperGrid(parameters=(("max_depth", (1, 3)),))
        factory = forest_factory(random_forest_config(n_trees=5, master_seed=0))
        result = grid_search(grid, train, val, "accuracy", factory)
        assert 0.5 <= result.best_metric_value <= 1.0
        assert len(result.trials) == 2


class TestComboToConfig:
    def test_paper_tuned_combo(self):
        cfg = tree_config_from_combo(PAPER_TUNED)
        assert cfg.criterion == "gini"
        assert cfg.max_depth == 1
        assert cfg.max_leaf_nodes == 2
        assert cfg.min_samples_split == 0.001
        assert cfg.class_weights == "balanced"

    def test_criterion_none_aliases_gini(self):
        cfg = tree_config_from_combo({"criterion": None})
        assert cfg.criterion == "gini"

    def test_max_leaf_nodes_one_rejected(self):
        with pytest.raises(InvalidCombinationError):
            tree_config_from_combo({"max_leaf_nodes": 1})

    def test_unknown_class_weights_rejected(self):
        with pytest.raises(InvalidCombinationError):
            tree_config_from_combo({"class_weights": "bananas"})


class TestGridFile:
    def test_json_round_trip(self, tmp_path):
        grid = builtin_grid()
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(grid.to_dict()))
        loaded = HyperGrid.from_json(path)
        assert loaded.parameters == grid.parameters

    def test_order_field_respected(self, tmp_path):
        doc = {"parameters": {"a": [1], "b": [2]}, "order": ["b", "a"]}
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(doc))
        assert HyperGrid.from_json(path).names == ["b", "a"]

    def test_order_must_match_parameters(self, tmp_path):
        doc = {"parameters": {"a": [1]}, "order": ["a", "b"]}
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(InvalidGridError):
            HyperGrid.from_json(path)
