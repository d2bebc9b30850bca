"""Mining algorithms over analysis tables.

Four families: clustering (k-means, agglomerative, DBSCAN), decision-tree
classification, through-origin linear regression, and frequent-itemset /
association-rule mining.  All fits are pure given (data, params, seed) and
bit-reproducible.
"""

from .features import Attribute, BinningSpec, FeatureSpace, distance, fit_binning
from .cluster import (
    ClusterModel,
    Dendrogram,
    agglomerative_fit,
    cluster_assign,
    dbscan_fit,
    dendrogram_cut,
    kmeans_fit,
)
from .tree import TreeModel, TreeParams, TreePrediction, tree_fit, tree_predict
from .regression import RegressionModel, regression_fit, regression_score
from .apriori import AprioriModel, ItemSet, Rule, apriori_fit
from .serialize import load_model, save_model

__all__ = [
    "Attribute", "BinningSpec", "FeatureSpace", "distance", "fit_binning",
    "ClusterModel", "Dendrogram", "agglomerative_fit", "cluster_assign",
    "dbscan_fit", "dendrogram_cut", "kmeans_fit",
    "TreeModel", "TreeParams", "TreePrediction", "tree_fit", "tree_predict",
    "RegressionModel", "regression_fit", "regression_score",
    "AprioriModel", "ItemSet", "Rule", "apriori_fit",
    "load_model", "save_model",
]
