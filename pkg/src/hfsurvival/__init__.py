"""Heart-failure survival prediction toolkit: data standardization,
extra-trees feature ranking, grid-search-tuned random forest, and a
ten-metric evaluation suite."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    EdaSummary,
    FeatureSpec,
    ScalerParams,
    SplitResult,
    Violation,
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
    ImportanceRanking,
    derive_seed,
    extra_trees_config,
    feature_importances,
    fit_forest,
    predict,
    predict_proba,
    random_forest_config,
    select_top_k,
)
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    RocCurve,
    classification_report,
    confusion_matrix,
    full_report,
    gini_metric,
    kappa,
    mcc,
    mse,
    roc_auc_point,
    roc_curve,
)
from .tree import (
    DecisionTree,
    Split,
    TreeConfig,
    balanced_class_weights,
    entropy_impurity,
    find_best_split,
    fit_tree,
    gini_impurity,
)
from .tune import (
    HyperGrid,
    TuneResult,
    generate_combinations,
    grid_search,
    grid_search_forests,
    tree_config_from_combo,
)
