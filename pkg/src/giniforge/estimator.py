"""scikit-learn compatible wrapper around :func:`giniforge.tree.build_tree`."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .data import AttributeSpec
from .gini import MULTIWAY
from .tree import (StoppingPolicy, attribute_depth, build_tree, export_tree,
                   importance_report, predict)
from .validation import check_dataset, check_rows


class GiniTreeClassifier(ClassifierMixin, BaseEstimator):
    """Categorical CART classifier using the exact Gini criterion.

    Parameters
    ----------
    max_depth : int or None
        Deepest level (root = 1) that may hold a question node.
    min_node_size : int
        Nodes with fewer rows become leaves.
    stop_on_pure : bool
        Stop at nodes whose rows all share one label.
    split_mode : {"multiway", "binary"}
        One branch per value, or yes/no subset questions.
    schema : sequence of AttributeSpec, optional
        Declared attributes. Inferred from the training data when omitted.

    Examples
    --------
    >>> from giniforge.datasets import creditworthiness
    >>> d = creditworthiness()
    >>> clf = GiniTreeClassifier().fit(d)
    >>> clf.attribute_depths_
    {'species': 2, 'salary': 1}
    """

    def __init__(self, max_depth: int | None = None, min_node_size: int = 1,
                 stop_on_pure: bool = True, split_mode: str = MULTIWAY,
                 schema: Sequence[AttributeSpec] | None = None):
        self.max_depth = max_depth
        self.min_node_size = min_node_size
        self.stop_on_pure = stop_on_pure
        self.split_mode = split_mode
        self.schema = schema

    def fit(self, X, y=None):
        """Fit on a labeled Dataset, or on token rows ``X`` with labels ``y``."""
        d = check_dataset(X, y, self.schema, require_labels=True)
        policy = StoppingPolicy(self.max_depth, self.min_node_size, self.stop_on_pure)
        self.tree_ = build_tree(d, policy, self.split_mode)
        self.schema_ = d.schema
        self.feature_names_in_ = np.asarray(d.names, dtype=object)
        self.n_features_in_ = len(d.schema)
        self.classes_ = np.array([0, 1])
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        rows = check_rows(X, self.schema_)
        return np.array([predict(self.tree_, r) for r in rows], dtype=np.int64)

    @property
    def attribute_depths_(self) -> dict[str, int | None]:
        check_is_fitted(self, "tree_")
        return {a.name: attribute_depth(self.tree_, a.name) for a in self.schema_}

    @property
    def importances_(self) -> dict[str, tuple[int, int]]:
        check_is_fitted(self, "tree_")
        return importance_report(self.tree_)

    def export(self, fmt: str = "dot") -> str:
        check_is_fitted(self, "tree_")
        return export_tree(self.tree_, fmt)
