"""Decision trees, random forests and gradient-boosted trees."""

from ._kernel import BACKEND
from .tree import TreeNode, Tree, fit_tree, GINI, NEWTON
from .forest import RfConfig, ForestModel, train_random_forest
from .gbm import GbmConfig, GbmModel, train_gbm
from .common import predict_proba, feature_importance

__all__ = [
    "BACKEND", "TreeNode", "Tree", "fit_tree", "GINI", "NEWTON",
    "RfConfig", "ForestModel", "train_random_forest",
    "GbmConfig", "GbmModel", "train_gbm", "predict_proba", "feature_importance",
]
